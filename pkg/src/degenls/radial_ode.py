"""Outward integration of the singular radial profile equation.

The radial reduction of the degenerate equation reads

    u'' + ((d-1+2a)/r) u' - omega*u/r^(2a) + u^(p-1)/r^(2a) = 0,

equivalently, in self-adjoint (flux) form,

    (r^(d-1+2a) u')' = r^(d-1) (omega*u - u^(p-1)).

The equation is singular at r = 0: u'' blows up there for every
a in (0, 1), so integration starts from a truncated series expansion at a
small hand-off radius r_start instead of from the origin.  The leading
behavior is

    u(r)  = beta - c * r^(2-2a) / (2-2a) + o(r^(2-2a)),
    u'(r) = -c * r^(1-2a) + o(r^(1-2a)),        c = (beta^(p-1) - omega*beta)/d,

which cancels the singular terms of the equation exactly at order r^(-2a)
because (1-2a) + (d-1+2a) = d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .numerics import QuinticModel, stencil_derivative
from .params import ProblemParams


class NonpositiveBeta(ValueError):
    pass


class SeriesStartInvalid(ValueError):
    """r_start is not small against the trajectory scale at this beta."""


class StepSizeUnderflow(RuntimeError):
    """The adaptive controller failed; grid or tolerances must change."""


# Event kinds
CROSSED_ZERO = "CrossedZero"
TURNED_UPWARD = "TurnedUpward"
EXCEEDED_BOUND = "ExceededBound"
REACHED_RMAX = "ReachedRmax"


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    r_start: float
    r_max: float

    def __post_init__(self):
        n = np.asarray(self.nodes, dtype=float)
        if n.ndim != 1 or n.size < 2:
            raise ValueError("grid needs at least 2 nodes")
        if not (n[0] > 0 and np.all(np.diff(n) > 0)):
            raise ValueError("nodes must be strictly increasing and positive")
        object.__setattr__(self, "nodes", n)


def make_grid(r_start: float, r_max: float, n: int) -> RadialGrid:
    """Geometric grid from r_start to r_max with n nodes.

    Geometric spacing resolves the r^(-2a) singularity near the origin and
    keeps the relative step constant across the decades of the domain.
    """
    if not (0 < r_start < r_max):
        raise ValueError("need 0 < r_start < r_max")
    nodes = np.geomspace(r_start, r_max, n)
    nodes[0], nodes[-1] = r_start, r_max
    return RadialGrid(nodes=nodes, r_start=r_start, r_max=r_max)


@dataclass(frozen=True)
class Tail:
    """Far-field model u(r) = amplitude * r^(-algebraic_power) * exp(-decay_rate * r^(1-a))."""

    amplitude: float
    decay_rate: float
    algebraic_power: float = 0.0


@dataclass
class RadialProfile:
    grid: RadialGrid
    u: np.ndarray
    du: np.ndarray
    beta: float
    tail: Optional[Tail] = None

    def model(self, params: ProblemParams) -> QuinticModel:
        """Piecewise-quintic (u, u') reconstruction using the equation for u''."""
        r = self.grid.nodes
        d2u = np.array([ode_rhs(params, ri, ui, dui) for ri, ui, dui in zip(r, self.u, self.du)])
        return QuinticModel(r, self.u, self.du, d2u)

    def tail_eval(self, params: ProblemParams, r: np.ndarray) -> np.ndarray:
        if self.tail is None:
            raise ValueError("profile has no fitted tail")
        t = self.tail
        r = np.asarray(r, dtype=float)
        return t.amplitude * r ** (-t.algebraic_power) * np.exp(
            -t.decay_rate * r ** (1.0 - params.a)
        )


@dataclass(frozen=True)
class IntegrationEvent:
    kind: str
    radius: float


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-12
    atol: float = 1e-14
    max_step: float = math.inf
    method: str = "DOP853"


def ode_rhs(params: ProblemParams, r: float, u: float, du: float) -> float:
    """u'' from the profile equation at radius r > 0.

    The nonlinearity is extended oddly (sign(u)|u|^(p-1)) so that the
    integrator remains well defined past a zero crossing while the crossing
    radius is being refined.
    """
    if r <= 0.0:
        raise ValueError("ode_rhs requires r > 0")
    au = abs(u)
    # cap the power to avoid overflow noise in rejected trial steps
    nonlin = math.copysign(au ** (params.p - 1.0) if au < 1e150 else math.inf, u)
    return (
        -(params.d - 1.0 + 2.0 * params.a) / r * du
        + (params.omega * u - nonlin) / r ** (2.0 * params.a)
    )


def series_coefficient(params: ProblemParams, beta: float) -> float:
    """Leading origin coefficient c = (beta^(p-1) - omega*beta)/d of -u'(r)/r^(1-2a)."""
    return (beta ** (params.p - 1.0) - params.omega * beta) / params.d


def series_start(params: ProblemParams, beta: float, r_start: float) -> tuple[float, float]:
    """Series values (u, u') at the hand-off radius."""
    if beta <= 0.0:
        raise NonpositiveBeta(f"beta={beta} must be positive")
    c = series_coefficient(params, beta)
    ex = 2.0 - 2.0 * params.a
    u = beta - c * r_start**ex / ex
    du = -c * r_start ** (1.0 - 2.0 * params.a)
    return u, du


def series_eval(params: ProblemParams, beta: float, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized leading-order series, used for the origin segment of integrals."""
    r = np.asarray(r, dtype=float)
    c = series_coefficient(params, beta)
    ex = 2.0 - 2.0 * params.a
    return beta - c * r**ex / ex, -c * r ** (1.0 - 2.0 * params.a)


def integrate(
    params: ProblemParams,
    beta: float,
    grid: RadialGrid,
    controller: IntegratorConfig = IntegratorConfig(),
    sample: bool = True,
) -> tuple[RadialProfile, IntegrationEvent]:
    """Integrate outward from the series hand-off, stopping at the first event.

    Events:
      * CrossedZero   -- u hits 0 from above (root-refined radius);
      * TurnedUpward  -- u' changes sign from negative to positive while u > 0;
      * ExceededBound -- u exceeds 2*beta (non-decaying branch);
      * ReachedRmax   -- no event fired before the end of the grid.

    With ``sample=False`` only the trajectory endpoints are kept (used by
    the bisection loop, which needs events and endpoint data only).
    """
    if beta <= 0.0:
        raise NonpositiveBeta(f"beta={beta} must be positive")
    r0, rmax = grid.r_start, grid.r_max
    u0, du0 = series_start(params, beta, r0)
    if not (0.0 < u0 <= 2.0 * beta) or abs(u0 - beta) > 0.5 * beta:
        raise SeriesStartInvalid(
            f"series hand-off at r_start={r0} moves u from beta={beta} to {u0}; "
            "decrease r_start for this beta range"
        )

    beta_eq = params.omega ** (1.0 / (params.p - 2.0))
    if beta == beta_eq:
        # exact equilibrium: u is constant, no event machinery needed
        nodes = grid.nodes if sample else np.array([r0, rmax])
        prof = RadialProfile(
            grid=RadialGrid(nodes, r0, rmax) if not sample else grid,
            u=np.full(nodes.size, beta),
            du=np.zeros(nodes.size),
            beta=beta,
        )
        return prof, IntegrationEvent(REACHED_RMAX, rmax)

    def rhs(r, y):
        return (y[1], ode_rhs(params, r, y[0], y[1]))

    def ev_zero(r, y):
        return y[0]

    ev_zero.terminal = True
    ev_zero.direction = -1.0

    def ev_upturn(r, y):
        return y[1]

    ev_upturn.terminal = True
    ev_upturn.direction = 1.0

    bound = 2.0 * beta

    def ev_bound(r, y):
        return y[0] - bound

    ev_bound.terminal = True
    ev_bound.direction = 1.0

    scale = max(abs(u0), abs(du0), 1.0)
    sol = solve_ivp(
        rhs,
        (r0, rmax),
        (u0, du0),
        method=controller.method,
        rtol=controller.rtol,
        atol=controller.atol * scale,
        max_step=controller.max_step,
        t_eval=grid.nodes if sample else None,
        events=(ev_zero, ev_upturn, ev_bound),
        dense_output=False,
    )
    if sol.status == -1:
        raise StepSizeUnderflow(sol.message)

    if sol.status == 1:
        kinds = (CROSSED_ZERO, TURNED_UPWARD, EXCEEDED_BOUND)
        fired = [
            (te[0], kinds[i]) for i, te in enumerate(sol.t_events) if te.size > 0
        ]
        radius, kind = min(fired)
        event = IntegrationEvent(kind, float(radius))
    else:
        event = IntegrationEvent(REACHED_RMAX, rmax)

    r_nodes = sol.t
    u, du = sol.y
    if r_nodes.size < 2:
        # event fired before the second sample node; keep endpoint data
        r_nodes = np.array([r0, max(event.radius, np.nextafter(r0, np.inf))])
        ye = np.array([sol.y_events[i] for i in range(3) if sol.y_events[i].size > 0][0][0])
        u = np.array([u0, ye[0]])
        du = np.array([du0, ye[1]])
    prof = RadialProfile(
        grid=RadialGrid(r_nodes, float(r_nodes[0]), float(r_nodes[-1])),
        u=np.asarray(u, dtype=float),
        du=np.asarray(du, dtype=float),
        beta=beta,
    )
    return prof, event


def residual(profile: RadialProfile, params: ProblemParams) -> float:
    """Max interior defect of the flux form, normalized by max(r^(d-1)|u|).

    The flux F = r^(d-1+2a) u' is differentiated with centered five-point
    stencils and compared against r^(d-1)(omega*u - u^(p-1)) node by node.
    """
    r = profile.grid.nodes
    if r.size < 3:
        raise ValueError("residual needs at least 3 nodes")
    u, du = profile.u, profile.du
    e = params.d - 1.0 + 2.0 * params.a
    flux = r**e * du
    dflux = stencil_derivative(r, flux)
    nonlin = np.sign(u) * np.abs(u) ** (params.p - 1.0)
    rhs = r ** (params.d - 1.0) * (params.omega * u - nonlin)
    norm = float(np.max(r ** (params.d - 1.0) * np.abs(u)))
    if norm == 0.0:
        return 0.0
    return float(np.max(np.abs(dflux[1:-1] - rhs[1:-1])) / norm)


def apply_scaling(profile: RadialProfile, smap, params_src: ProblemParams) -> RadialProfile:
    """Transport a sampled omega = 1 profile to the original-frequency problem.

    The transported samples live at nodes r_i / dilation_factor and carry
    values amp * u_i and derivatives amp * dil * u'_i.
    """
    amp, dil = smap.amplitude_factor, smap.dilation_factor
    nodes = profile.grid.nodes / dil
    tail = None
    if profile.tail is not None:
        t = profile.tail
        tail = Tail(
            amplitude=amp * t.amplitude * dil ** (-t.algebraic_power),
            decay_rate=t.decay_rate * dil ** (1.0 - params_src.a),
            algebraic_power=t.algebraic_power,
        )
    return RadialProfile(
        grid=RadialGrid(nodes, float(nodes[0]), float(nodes[-1])),
        u=amp * profile.u,
        du=amp * dil * profile.du,
        beta=amp * profile.beta,
        tail=tail,
    )


def export_profile_csv(profile: RadialProfile, path) -> None:
    """Write ``r,u,du`` with 17 significant digits, one node per line."""
    from .reports import fmt

    with open(path, "w", encoding="utf-8") as f:
        f.write("r,u,du\n")
        for r, u, du in zip(profile.grid.nodes, profile.u, profile.du):
            f.write(f"{fmt(r)},{fmt(u)},{fmt(du)}\n")
