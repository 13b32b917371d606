"""Problem parameters, admissibility window, and frequency normalization.

The equation under study is

    -div(|x|^(2a) grad u) + omega*u = u^(p-1)   on R^d,

with d >= 2, weight exponent 0 < a < 1, frequency omega > 0 and
nonlinearity power 2 < p < 2d/(d - 2(1-a)).  The upper endpoint of the
power window is the weighted critical exponent; it degenerates to
+infinity when d - 2(1-a) <= 0.

The a = 0 case (the classical unweighted equation) is admitted only when
``oracle_mode`` is set: it serves as an independently solvable reference
problem for cross-checks, not as part of the weighted theory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


class ParameterError(ValueError):
    """Base class for admissibility violations."""


class DimensionTooSmall(ParameterError):
    pass


class WeightOutOfRange(ParameterError):
    pass


class NonpositiveOmega(ParameterError):
    pass


class PowerOutOfWindow(ParameterError):
    pass


@dataclass(frozen=True)
class ProblemParams:
    """Parameter tuple (d, a, omega, p) of the profile equation."""

    d: int
    a: float
    omega: float
    p: float
    oracle_mode: bool = False

    @property
    def critical_p(self) -> float:
        return critical_exponent(self.d, self.a)


@dataclass(frozen=True)
class ScalingMap:
    """Dilation covariance between an omega != 1 solution and the omega = 1 one.

    If u solves the normalized (omega = 1) problem then

        x -> amplitude_factor * u(dilation_factor * x)

    solves the original problem.  Both factors are 1 when omega = 1.
    """

    amplitude_factor: float
    dilation_factor: float

    def inverse(self) -> "ScalingMap":
        return ScalingMap(1.0 / self.amplitude_factor, 1.0 / self.dilation_factor)

    def compose(self, other: "ScalingMap") -> "ScalingMap":
        return ScalingMap(
            self.amplitude_factor * other.amplitude_factor,
            self.dilation_factor * other.dilation_factor,
        )


def critical_exponent(d: int, a: float) -> float:
    """Upper endpoint 2d/(d - 2(1-a)) of the admissible power window.

    Returns ``math.inf`` when the denominator d - 2(1-a) is not positive
    (the window is then unbounded above).
    """
    den = d - 2.0 * (1.0 - a)
    if den <= 0.0:
        return math.inf
    return 2.0 * d / den


def validate(params: ProblemParams) -> ProblemParams:
    """Check every admissibility bound; return the params unchanged if valid.

    The window check is strict: p equal to the critical exponent is
    rejected, as is a = 1.  a = 0 passes only under ``oracle_mode``.
    """
    if params.d < 2:
        raise DimensionTooSmall(f"dimension d={params.d} violates d >= 2")
    if not (0.0 <= params.a < 1.0):
        raise WeightOutOfRange(f"weight a={params.a} violates 0 <= a < 1")
    if params.a == 0.0 and not params.oracle_mode:
        raise WeightOutOfRange("weight a=0 admitted only with oracle_mode set")
    if not (params.omega > 0.0):
        raise NonpositiveOmega(f"omega={params.omega} violates omega > 0")
    pc = critical_exponent(params.d, params.a)
    if not (2.0 < params.p < pc):
        raise PowerOutOfWindow(
            f"power p={params.p} violates 2 < p < {pc} (d={params.d}, a={params.a})"
        )
    return params


def normalize_omega(params: ProblemParams) -> tuple[ProblemParams, ScalingMap]:
    """Reduce to the omega = 1 problem and return the transport map.

    The returned map sends a sampled omega = 1 solution to a solution of
    the original problem:  u_omega(x) = amp * u1(dil * x)  with
    amp = omega^(1/(p-2)) and dil = omega^(1/(2(1-a))).
    """
    validate(params)
    omega = params.omega
    amp = omega ** (1.0 / (params.p - 2.0))
    dil = omega ** (1.0 / (2.0 * (1.0 - params.a)))
    normalized = replace(params, omega=1.0)
    return normalized, ScalingMap(amplitude_factor=amp, dilation_factor=dil)
