"""Lattice polarization and symmetric-decreasing rearrangement experiments.

Fields live at cell centers of a uniform grid on [-L, L]^2 with an even
number of cells per axis (no center sits at the origin).  Reflections are
restricted to the lattice-preserving hyperplanes through the origin: the
two axis hyperplanes and the two diagonals.  These map cell centers to
cell centers exactly, so polarization permutes cell values and preserves
every l^q cell sum bit for bit.

Because all admissible reflections preserve |x|, a polarization step can
only permute values within equal-radius orbits.  Norm identities and the
weighted Dirichlet comparisons are exact or O(h); full convergence of
iterated polarization to the rearrangement is not attainable on the
lattice (values cannot migrate between radius shells), so iteration is
checked for monotone non-increase of the distance to the rearranged
field, not for convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NonLatticeReflection(ValueError):
    pass


class NegativeValues(ValueError):
    pass


@dataclass(frozen=True)
class HalfSpace:
    """Half-space {x : <normal, x> > 0} bounded by a hyperplane through the origin."""

    normal: tuple[float, float]

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        nrm = float(np.linalg.norm(n))
        if not math.isclose(nrm, 1.0, rel_tol=1e-12):
            object.__setattr__(self, "normal", tuple(n / nrm))


_S = 1.0 / math.sqrt(2.0)
AXIS_X = HalfSpace((1.0, 0.0))
AXIS_Y = HalfSpace((0.0, 1.0))
DIAG_MAIN = HalfSpace((_S, -_S))  # boundary x1 = x2
DIAG_ANTI = HalfSpace((_S, _S))  # boundary x1 = -x2
ADMISSIBLE = (
    AXIS_X,
    AXIS_Y,
    DIAG_MAIN,
    DIAG_ANTI,
    HalfSpace((-1.0, 0.0)),
    HalfSpace((0.0, -1.0)),
    HalfSpace((-_S, _S)),
    HalfSpace((-_S, -_S)),
)


@dataclass
class GridField:
    dim: int
    extent: float  # half-width L
    n: int  # cells per axis, even
    values: np.ndarray  # shape (n, n), row index = x1 cell, column = x2 cell

    def __post_init__(self):
        if self.dim != 2:
            raise ValueError("only dim = 2 supported at desk scale")
        if self.n % 2 != 0:
            raise ValueError("n must be even so no cell center sits at the origin")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.n, self.n):
            raise ValueError(f"values shape {v.shape} != ({self.n}, {self.n})")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        self.values = v

    @property
    def h(self) -> float:
        return 2.0 * self.extent / self.n

    def centers(self) -> np.ndarray:
        return -self.extent + (np.arange(self.n) + 0.5) * self.h

    def copy_with(self, values: np.ndarray) -> "GridField":
        return GridField(self.dim, self.extent, self.n, values)


def _reflection_indexer(field: GridField, H: HalfSpace):
    """Return (reflected-values view, in-half-space mask) for an admissible H."""
    nx, ny = H.normal
    v = field.values
    c = field.centers()
    X1, X2 = np.meshgrid(c, c, indexing="ij")
    in_h = nx * X1 + ny * X2 > 0.0

    def close(a, b):
        return math.isclose(a, b, abs_tol=1e-12)

    if close(abs(nx), 1.0) and close(ny, 0.0):
        refl = v[::-1, :]
    elif close(nx, 0.0) and close(abs(ny), 1.0):
        refl = v[:, ::-1]
    elif close(nx, -ny):  # boundary x1 = x2: swap coordinates
        refl = v.T
    elif close(nx, ny):  # boundary x1 = -x2
        refl = v[::-1, ::-1].T
    else:
        raise NonLatticeReflection(
            f"normal {H.normal} does not map cell centers to cell centers"
        )
    return refl, in_h


def polarize(field: GridField, H: HalfSpace) -> GridField:
    """Two-point rearrangement pushing the larger of each reflected pair into H."""
    refl, in_h = _reflection_indexer(field, H)
    v = field.values
    out = np.where(in_h, np.maximum(v, refl), np.minimum(v, refl))
    return field.copy_with(out)


def rearrange(field: GridField) -> GridField:
    """Symmetric-decreasing rearrangement by sorted assignment.

    Cell values, sorted descending, are placed on cells sorted by center
    distance from the origin (ascending), ties broken lexicographically by
    flat cell index.  Idempotent, and preserves the value multiset exactly.
    """
    v = field.values
    if np.any(v < 0.0):
        raise NegativeValues("rearrangement defined for nonnegative fields")
    c = field.centers()
    X1, X2 = np.meshgrid(c, c, indexing="ij")
    r2 = (X1 * X1 + X2 * X2).ravel()
    order = np.lexsort((np.arange(r2.size), r2))
    out = np.empty_like(v).ravel()
    out[order] = np.sort(v.ravel())[::-1]
    return field.copy_with(out.reshape(v.shape))


def lp_cellsum(field: GridField, q: float) -> float:
    """(sum |v|^q * cell measure)^(1/q), summed with exact rounding.

    math.fsum makes the result independent of summation order, so value
    permutations (polarization, rearrangement) preserve it bit for bit.
    """
    if q < 1.0:
        raise ValueError("q must be >= 1")
    measure = field.h**field.dim
    total = math.fsum(abs(float(x)) ** q for x in field.values.ravel())
    return (total * measure) ** (1.0 / q)


def weighted_dirichlet(field: GridField, a: float) -> float:
    """Discrete Int |x|^2a |grad u|^2: forward differences on interior faces.

    Each interior face contributes |x_face|^2a (du/h)^2 h^dim with x_face
    the face midpoint; x- and y-faces supply the two gradient components.
    Summed with exact rounding for order independence.
    """
    if not (0.0 <= a < 1.0):
        raise ValueError("weight exponent a must be in [0, 1)")
    v = field.values
    h = field.h
    c = field.centers()
    fx = 0.5 * (c[:-1] + c[1:])  # face-midpoint coordinates along the split axis

    dx = (v[1:, :] - v[:-1, :]) / h
    wx = (fx[:, None] ** 2 + c[None, :] ** 2) ** a
    dy = (v[:, 1:] - v[:, :-1]) / h
    wy = (c[:, None] ** 2 + fx[None, :] ** 2) ** a

    terms_x = (wx * dx * dx).ravel()
    terms_y = (wy * dy * dy).ravel()
    return (math.fsum(map(float, terms_x)) + math.fsum(map(float, terms_y))) * h**field.dim


def l2_distance(f: GridField, g: GridField) -> float:
    """Cell-measure-weighted l2 distance between two fields on the same grid."""
    if f.n != g.n or f.extent != g.extent:
        raise ValueError("fields live on different grids")
    diff = (f.values - g.values).ravel()
    return math.sqrt(math.fsum(float(x) * float(x) for x in diff) * f.h**f.dim)


def polarization_sweep(field: GridField, cycles: int = 1) -> list[GridField]:
    """Iterates of polarization over the fixed cycle of admissible half-spaces."""
    out = [field]
    cur = field
    for _ in range(cycles):
        for H in ADMISSIBLE:
            cur = polarize(cur, H)
            out.append(cur)
    return out


def random_smooth_field(n: int, extent: float, rng: np.random.Generator, bumps: int = 6) -> GridField:
    """Nonnegative smooth test field: random Gaussian bumps under a boundary taper."""
    c = -extent + (np.arange(n) + 0.5) * (2.0 * extent / n)
    X1, X2 = np.meshgrid(c, c, indexing="ij")
    v = np.zeros((n, n))
    for _ in range(bumps):
        x0, y0 = rng.uniform(-0.55 * extent, 0.55 * extent, size=2)
        w = rng.uniform(0.08, 0.3) * extent
        amp = rng.uniform(0.3, 1.0)
        v += amp * np.exp(-((X1 - x0) ** 2 + (X2 - y0) ** 2) / (2.0 * w * w))
    taper = np.cos(np.clip(0.5 * math.pi * np.sqrt(X1**2 + X2**2) / extent, 0.0, 0.5 * math.pi)) ** 2
    return GridField(2, extent, n, v * taper)


def save_field(field: GridField, path) -> None:
    """Plain-text format: first line ``dim n L``, then row-major values."""
    from .reports import fmt

    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{field.dim} {field.n} {fmt(field.extent)}\n")
        for row in field.values:
            f.write(" ".join(fmt(float(x)) for x in row) + "\n")


def load_field(path) -> GridField:
    with open(path, "r", encoding="utf-8") as f:
        head = f.readline().split()
        dim, n, extent = int(head[0]), int(head[1]), float(head[2])
        vals = np.loadtxt(f)
    return GridField(dim, extent, n, vals.reshape(n, n))
