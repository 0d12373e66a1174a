"""Phi-divergence distortions: the worst-case event-probability curve, its
saturation threshold, inverse, and Lambda transforms.

The central object is

    g(x) = sup { t in [x, 1] : x*phi(t/x) + (1-x)*phi((1-t)/(1-x)) <= delta }

with g(0) = 0 and g(1) = 1. For convex phi the objective is convex in t with
minimum 0 at t = x, hence nondecreasing on [x, 1], so the boundary of the
feasible set is located by bisection. Bisection rather than Newton
everywhere: the objective's t-derivative can blow up at the endpoints (the
entropy kind near t -> 1) and robustness beats speed at this scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import ContractError, DomainError, NumericError
from .lambdavar import LambdaFn

BISECT_TOL = 1e-10
BISECT_MAX_ITER = 200
# The threshold solve runs tighter than the public 1e-10 contract so that
# closed-form comparisons at 1e-10 hold with margin.
THRESHOLD_TOL = 1e-12


@dataclass(frozen=True)
class PhiFn:
    """Convex divergence generator with phi(1) = 0.

    ``kind`` is one of ``"kl"``, ``"alpha"``, ``"chi_squared"``, ``"band"``,
    ``"custom"``. ``superlinear`` and ``strictly_convex`` record whether
    phi(u)/u -> inf and strict convexity hold; they gate the threshold and
    inverse operations.
    """

    kind: str
    fn: Callable[[float], float] = field(repr=False, compare=False)
    phi_zero: float
    superlinear: bool
    strictly_convex: bool
    params: tuple[float, ...] = ()

    def __call__(self, u: float) -> float:
        if u < 0:
            raise DomainError("phi is defined on [0, inf)")
        if u == 0.0:
            return self.phi_zero
        return self.fn(u)

    def __post_init__(self):
        v1 = self.fn(1.0)
        if abs(v1) > 1e-12:
            raise DomainError(f"phi(1) must be 0, got {v1!r}")
        if self.kind == "custom":
            _sampled_convexity_check(self)

    # -- standard kinds ------------------------------------------------------

    @classmethod
    def kl(cls) -> "PhiFn":
        """phi(u) = u ln u, with 0 ln 0 = 0."""
        return cls("kl", lambda u: u * math.log(u), 0.0, True, True)

    @classmethod
    def alpha(cls, a: float) -> "PhiFn":
        """phi(u) = u**a - 1 for a > 1, exactly as printed (no normalization,
        hence the constant offset phi(0) = -1)."""
        if a <= 1.0:
            raise DomainError("alpha kind requires a > 1")
        return cls("alpha", lambda u: u ** a - 1.0, -1.0, True, True, (a,))

    @classmethod
    def chi_squared(cls) -> "PhiFn":
        """phi(u) = (u - 1)**2."""
        return cls("chi_squared", lambda u: (u - 1.0) ** 2, 1.0, True, True)

    @classmethod
    def band(cls, k1: float, k2: float) -> "PhiFn":
        """phi(u) = 0 on [k1, k2] and +inf outside, 0 <= k1 < 1 < k2."""
        if not (0.0 <= k1 < 1.0 < k2 < math.inf):
            raise DomainError("band kind requires 0 <= k1 < 1 < k2 < inf")

        def fn(u: float) -> float:
            return 0.0 if k1 <= u <= k2 else math.inf

        return cls("band", fn, 0.0 if k1 == 0.0 else math.inf, False, False, (k1, k2))

    @classmethod
    def custom(cls, fn: Callable[[float], float], *, phi_zero: float | None = None,
               superlinear: bool = False, strictly_convex: bool = False) -> "PhiFn":
        z = fn(0.0) if phi_zero is None else phi_zero
        return cls("custom", fn, z, superlinear, strictly_convex)


def _clamp_unit(v: float, name: str) -> float:
    """Absorb float accumulation drift around the unit interval's ends."""
    if -1e-9 <= v <= 1.0 + 1e-9:
        return min(1.0, max(0.0, v))
    raise DomainError(f"{name} must lie in [0, 1], got {v!r}")


def _sampled_convexity_check(phi: PhiFn, points: int = 64):
    us = [0.05 + 2.95 * i / (points - 1) for i in range(points)]
    vals = [phi(u) for u in us]
    for i in range(len(us) - 2):
        a, b, c = vals[i], vals[i + 1], vals[i + 2]
        if math.isinf(a) or math.isinf(c):
            continue
        if b > (a + c) / 2.0 + 1e-9:
            raise DomainError("custom phi failed the sampled convexity check")


def divergence_objective(phi: PhiFn, x: float, t: float) -> float:
    """``x*phi(t/x) + (1-x)*phi((1-t)/(1-x))`` with the boundary conventions
    0*phi(0/0) = 0 and 0*phi(a/0) = a * lim phi(u)/u."""
    if x == 0.0:
        head = 0.0 if t == 0.0 else (math.inf if phi.superlinear else t * _slope_at_inf(phi))
    else:
        head = x * phi(t / x)
    rest = 1.0 - x
    if rest == 0.0:
        tail_arg = 1.0 - t
        tail = 0.0 if tail_arg == 0.0 else (
            math.inf if phi.superlinear else tail_arg * _slope_at_inf(phi))
    else:
        tail = rest * phi((1.0 - t) / rest)
    return head + tail


def _slope_at_inf(phi: PhiFn) -> float:
    if phi.kind == "band":
        return math.inf  # phi jumps to +inf beyond k2
    return phi(1e8) / 1e8


def phi_divergence(phi: PhiFn, density: "list[float] | tuple[float, ...]",
                   weights: "list[float] | tuple[float, ...]") -> float:
    """``sum_w P(w) * phi(z_w)`` for a density z with respect to P."""
    total = 0.0
    for p, z in zip(weights, density):
        if p > 0.0:
            term = p * phi(z)
            if math.isinf(term):
                return math.inf
            total += term
    return total


def x_delta(phi: PhiFn, delta: float) -> float:
    """Saturation threshold: the root of ``x*phi(1/x) + (1-x)*phi(0) = delta``.

    Defined for strictly convex, superlinear phi; bisection to width 1e-12.
    """
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    if not (phi.superlinear and phi.strictly_convex):
        raise ContractError(
            "threshold needs a strictly convex phi with superlinear growth")

    def h(x: float) -> float:
        return x * phi(1.0 / x) + (1.0 - x) * phi.phi_zero

    lo, hi = 0.0, 1.0  # h(0+) = +inf > delta, h(1-) = 0 < delta
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= THRESHOLD_TOL:
            break
        mid = (lo + hi) / 2.0
        if h(mid) > delta:
            lo = mid
        else:
            hi = mid
    else:
        raise NumericError("threshold bisection failed to converge",
                           residual=hi - lo)
    return (lo + hi) / 2.0


def g_value(phi: PhiFn, delta: float, x: float, *, tol: float = BISECT_TOL) -> float:
    """Worst-case distorted probability ``g(x)`` on [0, 1].

    Closed forms for the chi-squared and band kinds; bisection on the
    divergence objective for everything else.
    """
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    x = _clamp_unit(x, "x")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if phi.kind == "chi_squared":
        if x >= 1.0 / (1.0 + delta):
            return 1.0
        return x + math.sqrt(delta * x * (1.0 - x))
    if phi.kind == "band":
        k1, k2 = phi.params
        return min(k2 * x, k1 * x + 1.0 - k1)
    if divergence_objective(phi, x, 1.0) <= delta:
        return 1.0
    lo, hi = x, 1.0  # objective is 0 at t = x and exceeds delta at t = 1
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= tol:
            return lo
        mid = (lo + hi) / 2.0
        if divergence_objective(phi, x, mid) <= delta:
            lo = mid
        else:
            hi = mid
    raise NumericError("distortion bisection failed to converge",
                       residual=hi - lo, x=x, delta=delta)


@dataclass(frozen=True)
class DistortionCurve:
    """Callable distortion ``g`` together with its threshold and inverse.

    ``x_delta`` is the saturation point for strictly convex superlinear
    kinds and 1.0 (not applicable) for the band kind. The smallest-preimage
    convention ``g^{-1}(1) = x_delta`` keeps the transformed-Lambda route
    consistent with the distorted-capacity route.
    """

    phi: PhiFn
    delta: float
    x_delta: float
    tol: float = BISECT_TOL

    @classmethod
    def build(cls, phi: PhiFn, delta: float, *, tol: float = BISECT_TOL
              ) -> "DistortionCurve":
        if delta <= 0.0:
            raise DomainError("delta must be positive")
        if phi.kind == "chi_squared":
            xd = 1.0 / (1.0 + delta)
        elif phi.superlinear and phi.strictly_convex:
            xd = x_delta(phi, delta)
        else:
            xd = 1.0
        return cls(phi, delta, xd, tol)

    def __call__(self, x: float) -> float:
        x = _clamp_unit(x, "x")
        if self.phi.kind not in ("chi_squared", "band") and x >= self.x_delta:
            return 1.0
        return g_value(self.phi, self.delta, x, tol=self.tol)

    def inverse(self, t: float) -> float:
        """Smallest x with g(x) = t; exact for band and chi-squared,
        bisection against g elsewhere."""
        t = _clamp_unit(t, "t")
        if self.phi.kind == "band":
            k1, k2 = self.phi.params
            if k1 == 0.0:
                return t / k2
            return min(1.0, max(t / k2, (t - 1.0 + k1) / k1, 0.0))
        if not (self.phi.superlinear and self.phi.strictly_convex):
            raise ContractError(
                "inverse requires strict monotonicity (band or strictly "
                "convex superlinear kinds)")
        if t >= 1.0:
            return self.x_delta
        if t <= 0.0:
            return 0.0
        if self.phi.kind == "chi_squared":
            d = self.delta
            disc = d * (d + 4.0 * t * (1.0 - t))
            return ((2.0 * t + d) - math.sqrt(disc)) / (2.0 * (1.0 + d))
        lo, hi = 0.0, self.x_delta
        for _ in range(BISECT_MAX_ITER):
            if hi - lo <= self.tol:
                return (lo + hi) / 2.0
            mid = (lo + hi) / 2.0
            if self(mid) <= t:
                lo = mid
            else:
                hi = mid
        raise NumericError("inverse bisection failed to converge",
                           residual=hi - lo, t=t)


def g_inverse(curve: DistortionCurve, t: float) -> float:
    """Functional alias for :meth:`DistortionCurve.inverse`."""
    return curve.inverse(t)


def transform_lambda(curve: DistortionCurve, lam: LambdaFn) -> LambdaFn:
    """Apply ``g^{-1}`` to each step value; breakpoints and direction kept."""
    if not lam.in_open_unit:
        raise DomainError("transforming requires Lambda values in (0, 1)")
    return lam.transform(curve.inverse)
