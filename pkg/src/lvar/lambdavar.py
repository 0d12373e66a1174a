"""Lambda Value-at-Risk under capacities and its representation machinery.

Values are extended reals: plain IEEE floats where ``math.inf`` and
``-math.inf`` carry the empty-infimum and empty-supremum conventions
(``inf {} = +inf``, ``sup {} = -inf``). No finite sentinel values are used
anywhere. Sums of extended reals go through :func:`ext_add`, which treats
any ``+inf`` operand as absorbing and rejects ``-inf + inf``.

Both the tail function ``x -> w(X > x)`` (right-continuous, jumps only at
values of X) and a step Lambda function are piecewise constant, so every
infimum here is computed exactly by scanning the merged breakpoint grid:
each grid point is tested individually and each open gap is tested through
its midpoint.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .core import ATOL, Capacity, FiniteSpace, RandomVariable
from .errors import ContractError, DomainError, StructuralError

INF = math.inf


def ext_add(*values: float) -> float:
    """Extended-real sum: any ``+inf`` operand gives ``+inf``; mixing
    ``-inf`` with ``+inf`` is a contract error."""
    if any(v == INF for v in values):
        if any(v == -INF for v in values):
            raise ContractError("sum of -inf and +inf is undefined")
        return INF
    if any(v == -INF for v in values):
        return -INF
    return math.fsum(values)


@dataclass(frozen=True)
class LambdaFn:
    """Monotone step function R -> (0, 1] with finitely many pieces.

    ``values`` has one entry per piece, ``len(breakpoints) + 1`` in total.
    Increasing and constant functions are right-continuous (piece i covers
    ``[b_i, b_{i+1})``); decreasing functions are left-continuous (piece i
    covers ``(b_i, b_{i+1}]``).
    """

    direction: str  # "increasing" | "decreasing" | "constant"
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if self.direction not in ("increasing", "decreasing", "constant"):
            raise DomainError(f"unknown direction {self.direction!r}")
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(self.breakpoints) + 1:
            raise DomainError("need exactly one value per piece (breakpoints + 1)")
        if any(b2 <= b1 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if any(not 0.0 < v <= 1.0 for v in self.values):
            raise DomainError("values must lie in (0, 1]")
        pairs = zip(self.values, self.values[1:])
        if self.direction == "increasing" and any(b < a for a, b in pairs):
            raise DomainError("values must be nondecreasing for an increasing function")
        if self.direction == "decreasing" and any(b > a for a, b in pairs):
            raise DomainError("values must be nonincreasing for a decreasing function")
        if self.direction == "constant" and any(v != self.values[0] for v in self.values):
            raise DomainError("constant function must have a single value")

    @classmethod
    def const(cls, value: float) -> "LambdaFn":
        return cls("constant", (), (value,))

    @classmethod
    def step(cls, direction: str, breakpoints: Sequence[float],
             values: Sequence[float]) -> "LambdaFn":
        return cls(direction, tuple(breakpoints), tuple(values))

    @property
    def lambda_minus(self) -> float:
        return min(self.values)

    @property
    def lambda_plus(self) -> float:
        return max(self.values)

    @property
    def is_increasing(self) -> bool:
        return self.direction in ("increasing", "constant")

    @property
    def in_open_unit(self) -> bool:
        """True when every value lies strictly inside (0, 1)."""
        return all(v < 1.0 for v in self.values)

    def __call__(self, x: float) -> float:
        if self.direction == "decreasing":
            # left-continuous: value at a breakpoint belongs to the piece ending there
            idx = bisect.bisect_left(self.breakpoints, x)
        else:
            idx = bisect.bisect_right(self.breakpoints, x)
        return self.values[idx]

    def lower_inverse(self, p: float) -> float:
        """``inf { y : Lambda(y) >= p }`` for increasing/constant direction.

        Right continuity makes the infimum attained whenever the set is
        nonempty; returns ``-inf`` when every y qualifies and ``+inf`` when
        none does. Comparison carries the set-function tolerance.
        """
        if not self.is_increasing:
            raise ContractError("lower_inverse requires an increasing function")
        q = p - ATOL
        if self.values[0] >= q:
            return -INF
        for i in range(1, len(self.values)):
            if self.values[i] >= q:
                return self.breakpoints[i - 1]
        return INF

    def upper_inverse(self, p: float) -> float:
        """``sup { y : Lambda(y) >= p }`` for the decreasing direction.

        Left continuity makes the supremum attained; returns ``+inf`` when
        every y qualifies and ``-inf`` when none does.
        """
        if self.direction != "decreasing":
            raise ContractError("upper_inverse requires a decreasing function")
        q = p - ATOL
        if self.values[-1] >= q:
            return INF
        for i in range(len(self.values) - 2, -1, -1):
            if self.values[i] >= q:
                return self.breakpoints[i]
        return -INF

    def transform(self, fn: Callable[[float], float]) -> "LambdaFn":
        """Apply ``fn`` to each piece value; breakpoints and direction kept."""
        return LambdaFn(self.direction, self.breakpoints,
                        tuple(fn(v) for v in self.values))

    def shifted(self, m: float) -> "LambdaFn":
        """``x -> Lambda(x + m)``."""
        return LambdaFn(self.direction,
                        tuple(b - m for b in self.breakpoints), self.values)

    def is_constant_below(self, x0: float) -> bool:
        """True when the function is constant on ``(-inf, x0)``."""
        for i, b in enumerate(self.breakpoints):
            if b < x0 and self.values[i + 1] != self.values[0]:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "direction": self.direction,
            "breakpoints": list(self.breakpoints),
            "values": list(self.values),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LambdaFn":
        return cls(doc["direction"], tuple(doc["breakpoints"]), tuple(doc["values"]))


def _merged_grid(x_values: Iterable[float], breakpoints: Iterable[float]) -> list[float]:
    return sorted(set(x_values) | set(breakpoints))


def _scan_infimum(grid: Sequence[float], feasible: Callable[[float], bool]) -> float:
    """Infimum of ``{x : feasible(x)}`` for a predicate that is constant on
    each open gap between consecutive grid points."""
    if not grid:
        return -INF if feasible(0.0) else INF
    if feasible(grid[0] - 1.0):
        return -INF
    last = len(grid) - 1
    for i, g in enumerate(grid):
        if feasible(g):
            return g
        probe = g + 1.0 if i == last else (g + grid[i + 1]) / 2.0
        if feasible(probe):
            return g
    return INF


def _scan_supremum(grid: Sequence[float], feasible: Callable[[float], bool]) -> float:
    """Supremum of ``{x : feasible(x)}`` under the same grid assumption."""
    if not grid:
        return INF if feasible(0.0) else -INF
    if feasible(grid[-1] + 1.0):
        return INF
    for i in range(len(grid) - 1, -1, -1):
        g = grid[i]
        if feasible(g):
            return g
        probe = g - 1.0 if i == 0 else (grid[i - 1] + g) / 2.0
        if feasible(probe):
            return g
    return -INF


def _check_shared_space(w: Capacity, x: RandomVariable):
    if w.space != x.space:
        raise StructuralError("capacity and variable live on different spaces")


def lambda_var(w: Capacity, lam: LambdaFn, x: RandomVariable) -> float:
    """``inf { t : w(X > t) <= Lambda(t) }`` (exact, extended-real)."""
    _check_shared_space(w, x)
    grid = _merged_grid(x.values, lam.breakpoints)
    return _scan_infimum(grid, lambda t: w.tail_value(x, t) <= lam(t) + ATOL)


def lambda_var_plus(w: Capacity, lam: LambdaFn, x: RandomVariable) -> float:
    """``sup { t : w(X > t) >= Lambda(t) }`` (exact, extended-real)."""
    _check_shared_space(w, x)
    grid = _merged_grid(x.values, lam.breakpoints)
    return _scan_supremum(grid, lambda t: w.tail_value(x, t) >= lam(t) - ATOL)


def choquet_quantile(w: Capacity, p: float, x: RandomVariable) -> float:
    """Quantile under a capacity: lambda_var with the constant function p."""
    if not 0.0 < p < 1.0:
        raise DomainError("quantile level must lie in (0, 1)")
    return lambda_var(w, LambdaFn.const(p), x)


def lambda_var_via_choquet(w: Capacity, lam: LambdaFn, x: RandomVariable) -> float:
    """Evaluate ``inf_t { VaR_{Lambda(t)}(X) ∨ t }`` over the merged grid.

    Valid for increasing Lambda only; must coincide with :func:`lambda_var`
    on all inputs, which makes it an internal cross-check oracle.
    """
    if not lam.is_increasing:
        raise ContractError("representation requires an increasing Lambda")
    _check_shared_space(w, x)

    def quant(level: float) -> float:
        if level >= 1.0:
            return -INF
        grid_q = list(x.distinct_values())
        return _scan_infimum(grid_q, lambda t: w.tail_value(x, t) <= level + ATOL)

    grid = _merged_grid(x.values, lam.breakpoints)
    if not grid:
        return -INF
    best = quant(lam(grid[0] - 1.0))  # inf over the unbounded left piece
    for i, g in enumerate(grid):
        best = min(best, max(quant(lam(g)), g))
        probe = g + 1.0 if i == len(grid) - 1 else (g + grid[i + 1]) / 2.0
        best = min(best, max(quant(lam(probe)), g))
    return best


@dataclass(frozen=True)
class DownsetFamily:
    """A step family of downward-closed event collections.

    ``cells`` holds one collection per grid piece (``len(thresholds) + 1``),
    each an explicit frozenset of event masks for spaces of at most 12
    outcomes (validated exhaustively) or a membership predicate
    ``mask -> bool`` beyond that. Increasing families are right-continuous on
    the threshold grid, decreasing families are left-continuous, mirroring
    the Lambda conventions. ``overrides`` may replace the collection at an
    exact threshold point, which is the only freedom a step family has; it
    models sandwich perturbations between the one-sided limits.

    A cell may be empty, meaning no event is acceptable there; the induced
    risk measure is ``+inf`` when no grid piece accepts its tail event.
    """

    space: FiniteSpace
    thresholds: tuple[float, ...]
    cells: tuple
    monotonic: str  # "increasing" | "decreasing"
    overrides: tuple[tuple[float, frozenset[int]], ...] = field(default=())

    def __post_init__(self):
        if self.monotonic not in ("increasing", "decreasing"):
            raise DomainError(f"unknown monotonicity flag {self.monotonic!r}")
        if len(self.cells) != len(self.thresholds) + 1:
            raise DomainError("need exactly one cell per grid piece")
        if any(b2 <= b1 for b1, b2 in zip(self.thresholds, self.thresholds[1:])):
            raise DomainError("thresholds must be strictly increasing")
        explicit = all(isinstance(c, frozenset) for c in self.cells)
        if self.space.size > 12 and explicit:
            raise DomainError("use predicate cells beyond 12 outcomes")
        if explicit:
            for cell in self.cells:
                _check_downset(self.space, cell)
            ordered = self.cells if self.monotonic == "increasing" else self.cells[::-1]
            for small, big in zip(ordered, ordered[1:]):
                if not small <= big:
                    raise DomainError("cells must be nested along the grid")

    @classmethod
    def from_lambda(cls, lam: LambdaFn, w: Capacity) -> "DownsetFamily":
        """The family ``A_t = { A : w(A) <= Lambda(t) }`` on Lambda's grid."""
        if w.space.size <= 12:
            cells = tuple(
                frozenset(m for m in range(1 << w.space.size)
                          if w.value_mask(m) <= v + ATOL)
                for v in lam.values
            )
        else:
            cells = tuple(
                (lambda v: lambda mask: w.value_mask(mask) <= v + ATOL)(v)
                for v in lam.values
            )
        flag = "increasing" if lam.is_increasing else "decreasing"
        return cls(w.space, lam.breakpoints, cells, flag)

    def cell_at(self, t: float):
        for point, cell in self.overrides:
            if t == point:
                return cell
        if self.monotonic == "decreasing":
            idx = bisect.bisect_left(self.thresholds, t)
        else:
            idx = bisect.bisect_right(self.thresholds, t)
        return self.cells[idx]

    def contains(self, t: float, mask: int) -> bool:
        cell = self.cell_at(t)
        if isinstance(cell, frozenset):
            return mask in cell
        return bool(cell(mask))

    def with_overrides(self, overrides: Sequence[tuple[float, frozenset[int]]]
                       ) -> "DownsetFamily":
        for point, cell in overrides:
            _check_downset(self.space, cell)
            if point not in self.thresholds:
                raise DomainError("overrides are only meaningful at thresholds")
        return DownsetFamily(self.space, self.thresholds, self.cells,
                             self.monotonic, tuple(overrides))


def _check_downset(space: FiniteSpace, cell: frozenset[int]):
    for mask in cell:
        for i in range(space.size):
            if mask >> i & 1 and mask ^ (1 << i) not in cell:
                raise DomainError("collection is not downward closed")


def induced_rho(family: DownsetFamily, x: RandomVariable) -> float:
    """``inf { t : {X > t} in A_t }`` for a step downset family."""
    if family.space != x.space:
        raise StructuralError("family and variable live on different spaces")
    grid = _merged_grid(x.values, family.thresholds)
    return _scan_infimum(grid, lambda t: family.contains(t, x.tail_mask(t)))
