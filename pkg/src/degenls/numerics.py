"""Shared finite-difference and quadrature kernels for nonuniform radial grids."""

from __future__ import annotations

import numpy as np

# 4-point Gauss-Legendre nodes/weights on [-1, 1]; degree-7 exactness per panel.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


def centered_derivative(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Second-order first derivative on a nonuniform grid (3-point stencil).

    Interior nodes use the quadratic-exact centered formula; the two end
    nodes use one-sided second-order stencils.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 nodes")
    out = np.empty_like(f)
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    out[1:-1] = (
        -hp / (hm * (hm + hp)) * f[:-2]
        + (hp - hm) / (hm * hp) * f[1:-1]
        + hm / (hp * (hm + hp)) * f[2:]
    )
    # one-sided quadratic at the ends
    h0, h1 = x[1] - x[0], x[2] - x[1]
    out[0] = (
        -(2 * h0 + h1) / (h0 * (h0 + h1)) * f[0]
        + (h0 + h1) / (h0 * h1) * f[1]
        - h0 / (h1 * (h0 + h1)) * f[2]
    )
    g0, g1 = x[-1] - x[-2], x[-2] - x[-3]
    out[-1] = (
        (2 * g0 + g1) / (g0 * (g0 + g1)) * f[-1]
        - (g0 + g1) / (g0 * g1) * f[-2]
        + g0 / (g1 * (g0 + g1)) * f[-3]
    )
    return out


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at z from nodes x.

    Fornberg's recursive algorithm; exact for polynomials of degree
    len(x)-1.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - z
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def stencil_derivative(x: np.ndarray, f: np.ndarray, half_width: int = 2) -> np.ndarray:
    """First derivative with centered (2*half_width+1)-point stencils.

    Near the ends the stencil slides one-sided, keeping the same width and
    order.  half_width=2 gives fourth-order accuracy on smooth data.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    n = x.size
    w = 2 * half_width + 1
    if n < w:
        return centered_derivative(x, f)
    out = np.empty_like(f)
    for i in range(n):
        lo = min(max(i - half_width, 0), n - w)
        sl = slice(lo, lo + w)
        out[i] = fornberg_weights(x[i], x[sl], 1) @ f[sl]
    return out


# Two-point Taylor (quintic Hermite) interpolation: power-basis coefficients
# from values and first/second derivatives at both panel ends, in the scaled
# variable s = (r - r_i)/h in [0, 1].
_H6 = np.linalg.inv(
    np.array(
        [
            [1, 0, 0, 0, 0, 0],
            [0, 1, 0, 0, 0, 0],
            [0, 0, 2, 0, 0, 0],
            [1, 1, 1, 1, 1, 1],
            [0, 1, 2, 3, 4, 5],
            [0, 0, 2, 6, 12, 20],
        ],
        dtype=float,
    )
)


class QuinticModel:
    """Piecewise-quintic reconstruction of (u, u') between grid nodes.

    Built from nodal values u, u' and the second derivative u'' supplied by
    the governing equation, so each panel interpolates all six endpoint
    conditions.  Evaluation error is O(h^6) for u and O(h^5) for u'.
    """

    def __init__(self, r: np.ndarray, u: np.ndarray, du: np.ndarray, d2u: np.ndarray):
        r = np.asarray(r, dtype=float)
        self.r = r
        self.h = np.diff(r)
        h = self.h
        data = np.stack(
            [
                u[:-1],
                h * du[:-1],
                h * h * d2u[:-1],
                u[1:],
                h * du[1:],
                h * h * d2u[1:],
            ]
        )
        # coefficients per panel: shape (6, n_panels)
        self.coef = _H6 @ data

    def _locate(self, rq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = np.searchsorted(self.r, rq, side="right") - 1
        idx = np.clip(idx, 0, self.r.size - 2)
        s = (rq - self.r[idx]) / self.h[idx]
        return idx, s

    def eval(self, rq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rq = np.asarray(rq, dtype=float)
        idx, s = self._locate(rq)
        c = self.coef[:, idx]
        u = np.zeros_like(s)
        du = np.zeros_like(s)
        for k in range(5, 0, -1):
            u = (u + c[k]) * s
            du = du * s + k * c[k]
        u += c[0]
        return u, du / self.h[idx]


def panel_integrals(r: np.ndarray, f_of_r) -> np.ndarray:
    """Per-panel 4-point Gauss integrals over the intervals of grid r.

    ``f_of_r`` receives the flat array of all Gauss abscissae and must
    return integrand values there.
    """
    r = np.asarray(r, dtype=float)
    h = np.diff(r)
    mid = 0.5 * (r[:-1] + r[1:])
    pts = (mid[:, None] + 0.5 * h[:, None] * _GL_X[None, :]).ravel()
    vals = np.asarray(f_of_r(pts), dtype=float).reshape(-1, _GL_X.size)
    return (vals @ _GL_W) * (0.5 * h)


def panel_gauss_integral(r: np.ndarray, f_of_r) -> float:
    """Composite 4-point Gauss quadrature over the panels of grid r."""
    return float(np.sum(panel_integrals(r, f_of_r)))


def cumulative_trapezoid(r: np.ndarray, f: np.ndarray, initial: float = 0.0) -> np.ndarray:
    """Running trapezoid integral with a caller-supplied value at the first node."""
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    out[0] = initial
    np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(r), out=out[1:])
    out[1:] += initial
    return out
