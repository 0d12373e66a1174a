"""Ambiguity sets, their worst-case capacities, robust Lambda VaR, and
distortion risk-measure bounds.

Likelihood-ratio bands use the fractional-atom convention: the worst-case
probability of an event A is the value of the relaxed density maximization
``max E[Z 1_A]`` over ``Y1 <= Z <= Y2, E[Z] = 1``, which collapses to

    min( E[Y2 1_A], E[Y1 1_A] + 1 - E[Y1] ).

On a finite space the tight subset construction may require splitting an
atom; the relaxed optimum is exactly what an atomless refinement would
yield, and it reproduces both constant-band and unbounded-below special
cases exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .core import ATOL, Capacity, ProbabilityMeasure, RandomVariable
from .divergence import DistortionCurve, PhiFn, transform_lambda  # noqa: F401
from .errors import ContractError, DomainError, StructuralError
from .lambdavar import LambdaFn, lambda_var

ROUTE_TOL = 1e-9


@dataclass(frozen=True)
class PhiBall:
    """Divergence ball around a reference measure: D_phi(Q || P) <= delta."""

    phi: PhiFn
    delta: float
    base: ProbabilityMeasure

    def __post_init__(self):
        if self.delta <= 0.0:
            raise DomainError("delta must be positive")

    def curve(self) -> DistortionCurve:
        return DistortionCurve.build(self.phi, self.delta)


@dataclass(frozen=True)
class LikelihoodBand:
    """Densities constrained by Y1 <= dQ/dP <= Y2 around a reference P."""

    y1: RandomVariable
    y2: RandomVariable
    base: ProbabilityMeasure

    def __post_init__(self):
        if self.y1.space != self.base.space or self.y2.space != self.base.space:
            raise StructuralError("band bounds live on a different space")
        if any(v < -ATOL for v in self.y1.values):
            raise DomainError("Y1 must be nonnegative")
        if any(a > b + ATOL for a, b in zip(self.y1.values, self.y2.values)):
            raise DomainError("Y1 must be pointwise below Y2")
        e1 = self.base.expectation(self.y1)
        e2 = self.base.expectation(self.y2)
        if not e1 < 1.0 < e2 < math.inf:
            raise DomainError(
                f"band requires E[Y1] < 1 < E[Y2] < inf, got {e1!r}, {e2!r}")

    @classmethod
    def constant(cls, k1: float, k2: float, base: ProbabilityMeasure
                 ) -> "LikelihoodBand":
        space = base.space
        return cls(RandomVariable.constant(space, k1),
                   RandomVariable.constant(space, k2), base)

    def is_constant(self) -> bool:
        return (len(set(self.y1.values)) == 1 and len(set(self.y2.values)) == 1)


AmbiguitySet = PhiBall | LikelihoodBand


def worst_case_capacity(ambiguity: AmbiguitySet) -> Capacity:
    """The capacity ``A -> sup_Q Q(A)`` over the ambiguity set."""
    if isinstance(ambiguity, PhiBall):
        return Capacity.distortion(ambiguity.curve(), ambiguity.base,
                                   label=f"phi_ball({ambiguity.phi.kind})")
    if isinstance(ambiguity, LikelihoodBand):
        base, y1, y2 = ambiguity.base, ambiguity.y1, ambiguity.y2
        if all(v == 0.0 for v in y1.values):
            return Capacity.expectation_cap(y2, base)
        if ambiguity.is_constant():
            curve = DistortionCurve.build(
                PhiFn.band(y1.values[0], y2.values[0]), 1.0)
            return Capacity.distortion(curve, base, label="band")
        slack = 1.0 - base.expectation(y1)

        def value(mask: int) -> float:
            top = base.partial_expectation(y2, mask)
            low = base.partial_expectation(y1, mask)
            return min(top, low + slack)

        return Capacity(base.space, "likelihood_band", value)
    raise DomainError(f"unknown ambiguity set {type(ambiguity).__name__}")


def invertible_curve(ambiguity: AmbiguitySet
                     ) -> tuple[DistortionCurve, ProbabilityMeasure] | None:
    """The (curve, base) pair when the worst case is an invertible
    distortion of a reference measure: divergence balls with band or
    strictly convex superlinear phi, and constant likelihood bands."""
    if isinstance(ambiguity, PhiBall):
        phi = ambiguity.phi
        if phi.kind == "band" or (phi.superlinear and phi.strictly_convex):
            return ambiguity.curve(), ambiguity.base
        return None
    if isinstance(ambiguity, LikelihoodBand) and ambiguity.is_constant():
        curve = DistortionCurve.build(
            PhiFn.band(ambiguity.y1.values[0], ambiguity.y2.values[0]), 1.0)
        return curve, ambiguity.base
    return None


def robust_lambda_var(ambiguity: AmbiguitySet, lam: LambdaFn, x: RandomVariable,
                      *, route_tol: float = ROUTE_TOL) -> float:
    """Worst-case Lambda VaR over the ambiguity set (increasing Lambda).

    Divergence balls with an invertible distortion are also evaluated
    through the transformed-Lambda route; a disagreement beyond
    ``route_tol`` signals an implementation bug and raises.
    """
    if not lam.is_increasing:
        raise ContractError("robust evaluation requires an increasing Lambda")
    primary = lambda_var(worst_case_capacity(ambiguity), lam, x)
    if isinstance(ambiguity, PhiBall) and lam.in_open_unit:
        pair = invertible_curve(ambiguity)
        if pair is not None:
            curve, base = pair
            transformed = lambda_var(Capacity.from_measure(base),
                                     transform_lambda(curve, lam), x)
            if not _ext_close(primary, transformed, route_tol):
                raise ContractError(
                    "capacity route and transformed-Lambda route disagree",
                    capacity_route=primary, transformed_route=transformed)
    return primary


def _ext_close(a: float, b: float, tol: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


def distortion_rm(w: Capacity, g: Callable[[float], float],
                  x: RandomVariable) -> float:
    """Distorted Choquet integral of X against ``g(w(X > .))``.

    Exact piecewise-constant integration over the sorted distinct values:
    the positive part integrates ``g(w(X > t))`` above 0, the negative part
    integrates ``g(w(X > t)) - 1`` below 0.
    """
    if w.space != x.space:
        raise StructuralError("capacity and variable live on different spaces")
    total = 0.0
    # 0 is always a knot, so the unbounded pieces contribute nothing:
    # g(w(X > t)) - 1 = g(1) - 1 = 0 below, g(0) = 0 above.
    knots = sorted(set(x.values) | {0.0})
    for left, right in zip(knots, knots[1:]):
        level = g(w.tail_value(x, left))
        if left >= 0.0:
            total += (right - left) * level
        else:
            total += (right - left) * (level - 1.0)
    return total


def robust_distortion_bound(ambiguity: PhiBall, g: Callable[[float], float],
                            x: RandomVariable) -> float:
    """Upper bound for the worst-case distortion risk measure over a
    divergence ball: the base-measure integral distorted by ``g ∘ g_phi``."""
    if not isinstance(ambiguity, PhiBall):
        raise DomainError("the distortion bound is defined for divergence balls")
    curve = ambiguity.curve()
    return distortion_rm(Capacity.from_measure(ambiguity.base),
                         lambda t: g(curve(t)), x)
