"""Discretized linearized radial operators and their lowest eigenpairs.

Around a ground state u, the linearization acting on the k-th spherical
harmonic sector reduces to the radial operator

    L_k v = -v'' - ((d-1+2a)/r) v' + mu_k v/r^2 + omega v/r^(2a)
            - (p-1) u^(p-2) v / r^(2a),        mu_k = k (k + d - 2).

In the measure r^(d-1) dr this is the generalized symmetric pencil

    -(r^(d-1+2a) v')' + [mu_k r^(d-3+2a) + r^(d-1)(omega - (p-1) u^(p-2))] v
        = lam r^(d-1) v

on [r_start, r_max], discretized with a flux-conservative second-order
scheme: the stiffness matrix is exactly symmetric tridiagonal and the mass
matrix is the diagonal of dual-cell r^(d-1) weights.  Boundary conditions:
no-flux at r_start for k = 0 (kernel-type solutions stay bounded with
v' = o(1/r) there), homogeneous Dirichlet at r_start for k >= 1 (the
mu_k/r^2 barrier forces decay), homogeneous Dirichlet at r_max.

Negative-eigenvalue counts are certified with a Sturm sequence (LDL^T
pivot signs of the shifted pencil), independently of the eigensolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .params import ProblemParams
from .radial_ode import RadialGrid, RadialProfile, make_grid, series_eval


class ProfileNotConverged(ValueError):
    pass


class SolverBreakdown(RuntimeError):
    pass


class ZeroVector(ValueError):
    pass


class WeightOutOfLemmaRange(ValueError):
    """The linearized far-field rate is established only for 0 < a < 1/2."""


@dataclass(frozen=True)
class HarmonicIndex:
    k: int
    mu: float

    @staticmethod
    def of(k: int, d: int) -> "HarmonicIndex":
        if k < 0:
            raise ValueError("harmonic index k must be >= 0")
        return HarmonicIndex(k=k, mu=float(k * (k + d - 2)))


@dataclass
class DiscreteOperator:
    grid: RadialGrid
    diag: np.ndarray  # stiffness diagonal
    off: np.ndarray  # stiffness first off-diagonal
    mass: np.ndarray  # diagonal mass weights (positive)
    k: HarmonicIndex
    bc_left: str
    bc_right: str
    node_index: np.ndarray  # grid-node index of each unknown

    @property
    def size(self) -> int:
        return self.diag.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out

    def quadratic_form(self, v: np.ndarray) -> float:
        return float(v @ self.matvec(v))


@dataclass
class SpectrumReport:
    k: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, mass-normalized
    sign_changes: list[int]
    negative_count: int
    negative_count_certificate: int
    zero_gap: float
    boundary_condition: str
    grid: RadialGrid
    node_index: np.ndarray


def potential_on_grid(
    profile: RadialProfile, params: ProblemParams, r: np.ndarray
) -> np.ndarray:
    """omega - (p-1) u^(p-2) sampled at r, series value below the hand-off."""
    u = np.empty_like(r)
    below = r < profile.grid.r_start
    if np.any(below):
        u[below] = series_eval(params, profile.beta, r[below])[0]
    if np.any(~below):
        u[~below] = profile.model(params).eval(r[~below])[0]
    return params.omega - (params.p - 1.0) * u ** (params.p - 2.0)


def assemble(
    profile: RadialProfile,
    params: ProblemParams,
    k: int,
    n: Optional[int] = None,
    bc_left: Optional[str] = None,
) -> DiscreteOperator:
    """Assemble the symmetric-definite pencil for harmonic index k.

    ``n`` resamples the operator grid (defaults to the profile grid);
    ``bc_left`` overrides the default left boundary condition, which is
    the documented sensitivity diagnostic.
    """
    if profile.u[-1] <= 0.0 or profile.u[0] <= 0.0:
        raise ProfileNotConverged("operator assembly needs a positive profile")
    harmonic = HarmonicIndex.of(k, params.d)
    if bc_left is None:
        bc_left = "neumann" if k == 0 else "dirichlet"
    if bc_left not in ("neumann", "dirichlet"):
        raise ValueError(f"unknown left boundary condition {bc_left!r}")

    if n is None:
        grid = profile.grid
    else:
        grid = make_grid(profile.grid.r_start, profile.grid.r_max, n)
    r = grid.nodes
    N = r.size
    d, a = params.d, params.a

    W = harmonic.mu * r ** (d - 3.0 + 2.0 * a) + r ** (d - 1.0) * potential_on_grid(
        profile, params, r
    )

    h = np.diff(r)
    flux = (0.5 * (r[:-1] + r[1:])) ** (d - 1.0 + 2.0 * a) / h  # r^(d-1+2a) at midpoints

    # dual cell widths: half-open at both domain ends
    cell = np.empty(N)
    cell[0] = 0.5 * h[0]
    cell[-1] = 0.5 * h[-1]
    cell[1:-1] = 0.5 * (h[1:] + h[:-1])

    lo = 0 if bc_left == "neumann" else 1
    hi = N - 1  # Dirichlet at r_max drops the last node
    idx = np.arange(lo, hi)
    m = idx.size
    if m < 3:
        raise SolverBreakdown("operator grid too small after boundary elimination")

    diag = W[idx] * cell[idx]
    # flux couplings: node i couples to i-1 via flux[i-1], to i+1 via flux[i]
    diag += flux[idx]  # right flux always present (interior or Dirichlet ghost)
    has_left = idx - 1 >= 0
    diag[has_left] += flux[idx[has_left] - 1]
    off = -flux[idx[:-1]]

    mass = r[idx] ** (d - 1.0) * cell[idx]
    return DiscreteOperator(
        grid=grid,
        diag=diag,
        off=off,
        mass=mass,
        k=harmonic,
        bc_left=bc_left,
        bc_right="dirichlet",
        node_index=idx,
    )


def sturm_negative_count(op: DiscreteOperator, shift: float = 0.0) -> int:
    """Eigenvalues of the pencil below ``shift`` via LDL^T pivot signs.

    The Sturm sequence of the shifted tridiagonal S - shift*M counts sign
    changes exactly (with the standard guard against zero pivots).
    """
    d = op.diag - shift * op.mass
    e = op.off
    count = 0
    q = d[0]
    tiny = np.finfo(float).tiny
    for i in range(d.size):
        if i > 0:
            q = d[i] - e[i - 1] * e[i - 1] / q
        if q == 0.0:
            q = tiny
        if q < 0.0:
            count += 1
    return count


def eigen_lowest(op: DiscreteOperator, n: int = 6, tol: float = None) -> SpectrumReport:
    """Lowest n eigenpairs, mass-normalized, with an inertia certificate.

    The generalized pencil is reduced to a standard symmetric tridiagonal
    problem by the diagonal congruence M^(-1/2) S M^(-1/2), solved with
    LAPACK's bisection + inverse iteration for the selected indices.  The
    bisection tolerance defaults to twice the underflow threshold, the
    setting under which eigenvalues come out most accurately despite the
    huge norm spread the singular weight induces near the origin.
    """
    if n < 2:
        raise ValueError("need n >= 2 eigenpairs")
    n = min(n, op.size)
    if tol is None:
        tol = 2.0 * np.finfo(float).tiny
    s = 1.0 / np.sqrt(op.mass)
    d = op.diag * s * s
    e = op.off * s[:-1] * s[1:]
    try:
        vals, vecs = eigh_tridiagonal(
            d, e, select="i", select_range=(0, n - 1), tol=tol
        )
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolverBreakdown(str(exc)) from exc
    vecs = s[:, None] * vecs
    # mass-normalize and fix a deterministic sign (largest-|component| positive)
    for j in range(vals.size):
        v = vecs[:, j]
        nrm = math.sqrt(float(v @ (op.mass * v)))
        v /= nrm
        i = int(np.argmax(np.abs(v)))
        if v[i] < 0:
            v *= -1.0
    changes = [count_sign_changes(vecs[:, j]) for j in range(vals.size)]
    neg = int(np.count_nonzero(vals < 0.0))
    cert = sturm_negative_count(op, 0.0)
    return SpectrumReport(
        k=op.k.k,
        eigenvalues=vals,
        eigenvectors=vecs,
        sign_changes=changes,
        negative_count=neg,
        negative_count_certificate=cert,
        zero_gap=float(np.min(np.abs(vals))),
        boundary_condition=f"{op.bc_left}@r_start,{op.bc_right}@r_max",
        grid=op.grid,
        node_index=op.node_index,
    )


def count_sign_changes(vector: np.ndarray, dead_band: float = 1e-12) -> int:
    """Strict sign alternations in node order, skipping near-zero entries.

    Entries below dead_band * max|entry| are ignored.
    """
    v = np.asarray(vector, dtype=float)
    top = float(np.max(np.abs(v))) if v.size else 0.0
    if top == 0.0:
        raise ZeroVector("sign changes undefined for the zero vector")
    keep = np.abs(v) > dead_band * top
    signs = np.sign(v[keep])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def moment_identities(
    profile: RadialProfile, candidate: np.ndarray, params: ProblemParams, r: np.ndarray
) -> tuple[float, float]:
    """Quadrature of the two kernel moments of a candidate radial function:

        m1 = Int r^(d-1) u^(p-1) v dr,
        m2 = Int r^(d-1) (omega u - u^(p-1)) v dr.

    A genuine kernel element of the k = 0 operator annihilates both.
    """
    u = profile.model(params).eval(r)[0]
    d, p, omega = params.d, params.p, params.omega
    w = r ** (d - 1.0)
    m1 = float(np.trapezoid(w * u ** (p - 1.0) * candidate, r))
    m2 = float(np.trapezoid(w * (omega * u - u ** (p - 1.0)) * candidate, r))
    return m1, m2


def linearized_tail_check(
    report: SpectrumReport, params: ProblemParams, profile: RadialProfile
) -> dict:
    """Stretched-exponential fit of the near-zero eigenvector's tail.

    Valid for 0 < a < 1/2 only.  Returns the fitted kappa and algebraic
    power sigma together with two reference rates: the kernel-equation
    rate 1/(1-a) and the eigenvalue-adjusted rate
    sqrt(omega - lam)/(1-a) of the mode actually fitted.
    """
    if not (0.0 < params.a < 0.5):
        raise WeightOutOfLemmaRange(f"a={params.a} outside (0, 1/2)")
    j = int(np.argmin(np.abs(report.eigenvalues)))
    lam = float(report.eigenvalues[j])
    v = report.eigenvectors[:, j]
    r = report.grid.nodes[report.node_index]

    # The mode decays like exp(-q r^(1-a)/(1-a)) with q = sqrt(omega - lam).
    # The Dirichlet wall at r_max reflects a growing component whose relative
    # size at radius r is exp(-2q (r_max^(1-a) - r^(1-a))/(1-a)); the window
    # ends where that contamination reaches 1e-3.
    q = math.sqrt(max(params.omega - lam, 1e-12))
    ex = 1.0 - params.a
    rmax = float(r[-1])
    s_hi = rmax**ex - ex * math.log(1e3) / (2.0 * q)
    if s_hi <= r[0] ** ex:
        raise SolverBreakdown("eigenvector decays too slowly for a tail window")
    r_hi = s_hi ** (1.0 / ex)
    # left edge: the potential well must be negligible against omega - lam
    u_all = profile.model(params).eval(r)[0]
    well = (params.p - 1.0) * u_all ** (params.p - 2.0)
    deep = well > 0.05 * max(params.omega - lam, 1e-12)
    r_lo = float(r[np.nonzero(deep)[0][-1]]) if np.any(deep) else float(r[0])
    sel = (r > r_lo) & (r < r_hi)
    sign = np.sign(v[sel][-1]) if np.any(sel) else 1.0
    sel &= sign * v > 0
    if int(np.count_nonzero(sel)) < 8:
        raise SolverBreakdown("eigenvector tail window too short for a fit")
    rr = r[sel]
    y = np.log(sign * v[sel])
    A = np.column_stack([np.ones_like(rr), -(rr ** (1.0 - params.a)), -np.log(rr)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    kappa, sigma_fit = float(coef[1]), float(coef[2])
    rate_kernel = 1.0 / (1.0 - params.a) * math.sqrt(params.omega)
    rate_adjusted = math.sqrt(max(params.omega - lam, 0.0)) / (1.0 - params.a)
    return {
        "eigenvalue": lam,
        "kappa": kappa,
        "sigma": sigma_fit,
        "kernel_rate": rate_kernel,
        "eigenvalue_adjusted_rate": rate_adjusted,
        "prefactor_power_reference": (params.d - 1.0) / 2.0 + params.a / 2.0,
    }


def ground_state_quadratic_form(
    op: DiscreteOperator, profile: RadialProfile, params: ProblemParams
) -> float:
    """<L u, u> assembled through the discrete matrices (k = 0 operator).

    Substituting the equation into the linearization gives the closed form
    -(p-2) Int u^p r^(d-1) dr, so the value must come out negative; it is
    the Morse-index witness.
    """
    r = op.grid.nodes[op.node_index]
    u = profile.model(params).eval(r)[0]
    return op.quadratic_form(u)
