"""Closed-form Pohozaev weights, the monotonicity quantity J(r,u), and its driver G.

With sigma = (4a + 2(d-1+2a)p)/(p+2), the weights

    A(r) = r^sigma,
    B(r) = ((2d-2+2a)/(p+2)) r^(sigma-1),
    C(r) = ((2d-2+2a)/(p+2)) (d+2a-sigma) r^(sigma-2)

make the quantity

    J(r,u) = A/2 (u')^2 + B u'u + C/2 u^2 - omega A/2 u^2/r^2a + A/p u^p/r^2a

satisfy dJ/dr = G(r) u^2 along any solution of the radial equation, where

    G(r) = -omega (p-2)(d-1+a)/(p+2) * r^(sigma-2a-1)
           + ((2d-2+2a)/(p+2)) (d+2a-sigma) (sigma-2)/2 * r^(sigma-3).

At omega = 1 these are the standard printed forms; the omega factors are
exactly what the same derivation produces for general frequency.  On the
admissible window d+2a-sigma > 0 always holds, so when additionally
sigma > 2 the driver G has exactly one sign change

    r0 = (c2/c1)^(1/(2-2a)),

positive before it and negative after, which forces J >= 0 with a single
interior maximum.  (sigma > 2 can fail for d = 2 with small a; then G < 0
everywhere and the sign-change radius degenerates to 0.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numerics import centered_derivative
from .params import ProblemParams
from .radial_ode import RadialProfile, series_eval


@dataclass
class PohozaevDiagnostics:
    sigma: float
    r: np.ndarray
    J: np.ndarray
    G: np.ndarray
    dJdr_residual: float
    r0: Optional[float]
    J_min: float
    J_max: float
    J_limits: tuple[float, float]
    limit_probes: tuple[float, float]


def sigma_exponent(params: ProblemParams) -> float:
    d, a, p = params.d, params.a, params.p
    return (4.0 * a + 2.0 * (d - 1.0 + 2.0 * a) * p) / (p + 2.0)


def preflight_exponents(params: ProblemParams) -> dict[str, float]:
    """Positivity margins behind the endpoint limits of J.

    sigma - 2a > 0 and sigma + 2 - 4a > 0 control the mass/power and
    (u')^2 terms as r -> 0; d + 2a - sigma > 0 is equivalent to the
    admissibility window itself.  All three are asserted.
    """
    sigma = sigma_exponent(params)
    margins = {
        "sigma_minus_2a": sigma - 2.0 * params.a,
        "sigma_plus_2_minus_4a": sigma + 2.0 - 4.0 * params.a,
        "d_plus_2a_minus_sigma": params.d + 2.0 * params.a - sigma,
    }
    for name, val in margins.items():
        if val <= 0.0:
            raise AssertionError(f"exponent check {name} = {val} not positive")
    margins["sigma_minus_2"] = sigma - 2.0  # may be negative for d=2, small a
    return margins


def weights(params: ProblemParams, r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pohozaev weights (A, B, C) at radius r (vectorized)."""
    r = np.asarray(r, dtype=float)
    d, a, p = params.d, params.a, params.p
    sigma = sigma_exponent(params)
    b = (2.0 * d - 2.0 + 2.0 * a) / (p + 2.0)
    A = r**sigma
    B = b * r ** (sigma - 1.0)
    C = b * (d + 2.0 * a - sigma) * r ** (sigma - 2.0)
    return A, B, C


def _J_terms(params: ProblemParams, r, u, du) -> np.ndarray:
    A, B, C = weights(params, r)
    a, p, omega = params.a, params.p, params.omega
    r = np.asarray(r, dtype=float)
    w2a = r ** (2.0 * a)
    return (
        0.5 * A * du * du
        + B * du * u
        + 0.5 * C * u * u
        - 0.5 * omega * A * u * u / w2a
        + A / p * u**p / w2a
    )


def J_of_r(params: ProblemParams, profile: RadialProfile) -> np.ndarray:
    """Sampled J along the profile grid."""
    return _J_terms(params, profile.grid.nodes, profile.u, profile.du)


def J_series(params: ProblemParams, beta: float, r) -> np.ndarray:
    """J evaluated through the origin series expansion (for r below hand-off)."""
    r = np.asarray(r, dtype=float)
    u, du = series_eval(params, beta, r)
    return _J_terms(params, r, u, du)


def J_tail(params: ProblemParams, profile: RadialProfile, r) -> np.ndarray:
    """J evaluated through the fitted far-field model (for r beyond the grid)."""
    r = np.asarray(r, dtype=float)
    u = profile.tail_eval(params, r)
    t = profile.tail
    du = u * (
        -t.decay_rate * (1.0 - params.a) * r ** (-params.a) - t.algebraic_power / r
    )
    return _J_terms(params, r, u, du)


def G_of_r(params: ProblemParams, r) -> np.ndarray:
    """Driver of dJ/dr = G u^2 (two-term power law)."""
    r = np.asarray(r, dtype=float)
    d, a, p, omega = params.d, params.a, params.p, params.omega
    sigma = sigma_exponent(params)
    c1 = omega * (p - 2.0) * (d - 1.0 + a) / (p + 2.0)
    c2 = (
        (2.0 * d - 2.0 + 2.0 * a)
        / (p + 2.0)
        * (d + 2.0 * a - sigma)
        * (sigma - 2.0)
        / 2.0
    )
    return -c1 * r ** (sigma - 2.0 * a - 1.0) + c2 * r ** (sigma - 3.0)


def r0_closed_form(params: ProblemParams) -> Optional[float]:
    """Unique positive root of G, or None when G has no interior sign change."""
    d, a, p, omega = params.d, params.a, params.p, params.omega
    sigma = sigma_exponent(params)
    c1 = omega * (p - 2.0) * (d - 1.0 + a) / (p + 2.0)
    c2 = (
        (2.0 * d - 2.0 + 2.0 * a)
        / (p + 2.0)
        * (d + 2.0 * a - sigma)
        * (sigma - 2.0)
        / 2.0
    )
    if c2 <= 0.0:
        return None
    return (c2 / c1) ** (1.0 / (2.0 - 2.0 * a))


def verify_dJ(params: ProblemParams, profile: RadialProfile) -> float:
    """Max-norm defect of dJ/dr = G u^2, normalized by max |G u^2|.

    J is differentiated with centered differences on the profile grid, so
    the defect shrinks at second order under grid refinement.
    """
    r = profile.grid.nodes
    J = J_of_r(params, profile)
    dJ = centered_derivative(r, J)
    target = G_of_r(params, r) * profile.u**2
    norm = float(np.max(np.abs(target)))
    if norm == 0.0:
        return 0.0
    return float(np.max(np.abs(dJ[1:-1] - target[1:-1])) / norm)


def diagnostics(
    params: ProblemParams,
    profile: RadialProfile,
    probe_lo: float = 1e-12,
    probe_hi_factor: float = 1.5,
) -> PohozaevDiagnostics:
    """Full J/G package for a converged ground-state profile.

    The endpoint limits of J are verified by asymptotic continuation: the
    series expansion carries J below the hand-off radius and the fitted
    tail carries it beyond r_max, where J(r) -> 0 is checked directly at
    probe radii (at r_start itself J is still ~ r_start^(sigma-2), far
    from zero at any practical hand-off).
    """
    preflight_exponents(params)
    r = profile.grid.nodes
    J = J_of_r(params, profile)
    G = G_of_r(params, r)
    res = verify_dJ(params, profile)
    r0 = r0_closed_form(params)
    J_lo = float(J_series(params, profile.beta, np.array([probe_lo]))[0])
    if profile.tail is not None:
        J_hi = float(J_tail(params, profile, np.array([probe_hi_factor * r[-1]]))[0])
        probe_hi = probe_hi_factor * float(r[-1])
    else:
        J_hi = float(J[-1])
        probe_hi = float(r[-1])
    return PohozaevDiagnostics(
        sigma=sigma_exponent(params),
        r=r,
        J=J,
        G=G,
        dJdr_residual=res,
        r0=r0,
        J_min=float(np.min(J)),
        J_max=float(np.max(J)),
        J_limits=(J_lo, J_hi),
        limit_probes=(probe_lo, probe_hi),
    )


def export_csv(params: ProblemParams, profile: RadialProfile, path) -> None:
    """Write ``r,J,G,u`` at 17 significant digits."""
    from .reports import write_csv

    r = profile.grid.nodes
    write_csv(path, "r,J,G,u", [r, J_of_r(params, profile), G_of_r(params, r), profile.u])
