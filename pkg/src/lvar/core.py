"""Finite probability spaces, random variables, measures, and capacities.

Events are bitmasks over the outcome indices, so every set function is a map
``mask -> float`` and exhaustive subset loops are honest ``2**n`` sweeps.
The space size is capped at 24 outcomes; exhaustive verification loops are
capped at 16.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import DomainError, StructuralError

# Absolute tolerance for all comparisons at the set-function layer.
ATOL = 1e-12

MAX_OUTCOMES = 24
MAX_EXHAUSTIVE = 16


def _bits(mask: int) -> Iterable[int]:
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


@dataclass(frozen=True)
class FiniteSpace:
    """Finite outcome set; outcomes are addressed by index or label."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if not (1 <= len(self.labels) <= MAX_OUTCOMES):
            raise DomainError(
                f"space size must be in [1, {MAX_OUTCOMES}], got {len(self.labels)}"
            )
        if len(set(self.labels)) != len(self.labels):
            raise DomainError("outcome labels must be unique")

    @classmethod
    def of_size(cls, n: int, prefix: str = "w") -> "FiniteSpace":
        return cls(tuple(f"{prefix}{i}" for i in range(n)))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def events(self) -> Iterable["Event"]:
        """All 2**n events, ascending by mask."""
        for mask in range(1 << self.size):
            yield Event(self, mask)


@dataclass(frozen=True)
class Event:
    """Subset of a finite space, stored as a bitmask."""

    space: FiniteSpace
    mask: int

    def __post_init__(self):
        if not 0 <= self.mask <= self.space.full_mask:
            raise DomainError(f"event mask {self.mask:#x} outside the space")

    @classmethod
    def from_indices(cls, space: FiniteSpace, indices: Iterable[int]) -> "Event":
        mask = 0
        for i in indices:
            if not 0 <= i < space.size:
                raise DomainError(f"outcome index {i} outside the space")
            mask |= 1 << i
        return cls(space, mask)

    @classmethod
    def from_labels(cls, space: FiniteSpace, labels: Iterable[str]) -> "Event":
        return cls.from_indices(space, (space.index(l) for l in labels))

    @classmethod
    def empty(cls, space: FiniteSpace) -> "Event":
        return cls(space, 0)

    @classmethod
    def full(cls, space: FiniteSpace) -> "Event":
        return cls(space, space.full_mask)

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(_bits(self.mask))

    @property
    def member_labels(self) -> tuple[str, ...]:
        return tuple(self.space.labels[i] for i in _bits(self.mask))

    def complement(self) -> "Event":
        return Event(self.space, self.space.full_mask ^ self.mask)

    def union(self, other: "Event") -> "Event":
        self._check(other)
        return Event(self.space, self.mask | other.mask)

    def intersect(self, other: "Event") -> "Event":
        self._check(other)
        return Event(self.space, self.mask & other.mask)

    def issubset(self, other: "Event") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def _check(self, other: "Event"):
        if other.space != self.space:
            raise StructuralError("events live on different spaces")

    def __len__(self) -> int:
        return self.mask.bit_count()


@dataclass(frozen=True)
class RandomVariable:
    """One finite real value per outcome."""

    space: FiniteSpace
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != self.space.size:
            raise DomainError("value list length must equal the space size")
        for v in self.values:
            if v != v or v in (float("inf"), float("-inf")):
                raise DomainError("random variables must be finite, no NaN")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def constant(cls, space: FiniteSpace, c: float) -> "RandomVariable":
        return cls(space, (float(c),) * space.size)

    @classmethod
    def indicator(cls, event: Event) -> "RandomVariable":
        return cls(
            event.space,
            tuple(1.0 if event.mask >> i & 1 else 0.0 for i in range(event.space.size)),
        )

    def tail_mask(self, x: float) -> int:
        """Bitmask of ``{self > x}``."""
        mask = 0
        for i, v in enumerate(self.values):
            if v > x:
                mask |= 1 << i
        return mask

    def tail_event(self, x: float) -> Event:
        return Event(self.space, self.tail_mask(x))

    def distinct_values(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.values)))

    def map(self, fn: Callable[[float], float]) -> "RandomVariable":
        return RandomVariable(self.space, tuple(fn(v) for v in self.values))

    def __add__(self, other):
        if isinstance(other, RandomVariable):
            if other.space != self.space:
                raise StructuralError("variables live on different spaces")
            return RandomVariable(
                self.space, tuple(a + b for a, b in zip(self.values, other.values))
            )
        return self.map(lambda v: v + float(other))

    __radd__ = __add__

    def __neg__(self):
        return self.map(lambda v: -v)

    def __sub__(self, other):
        return self + (-other if isinstance(other, RandomVariable) else -float(other))

    def __mul__(self, scalar: float):
        return self.map(lambda v: v * float(scalar))

    __rmul__ = __mul__

    def min(self) -> float:
        return min(self.values)

    def max(self) -> float:
        return max(self.values)


@dataclass(frozen=True)
class ProbabilityMeasure:
    """Nonnegative outcome weights summing to one (tolerance 1e-12)."""

    space: FiniteSpace
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != self.space.size:
            raise DomainError("weight list length must equal the space size")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if any(w < -ATOL for w in self.weights):
            raise DomainError("weights must be nonnegative")
        total = sum(self.weights)
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"weights must sum to 1, got {total!r}")

    @classmethod
    def uniform(cls, space: FiniteSpace) -> "ProbabilityMeasure":
        return cls(space, (1.0 / space.size,) * space.size)

    def prob_mask(self, mask: int) -> float:
        return sum(self.weights[i] for i in _bits(mask))

    def prob(self, event: Event) -> float:
        if event.space != self.space:
            raise StructuralError("event lives on a different space")
        return self.prob_mask(event.mask)

    def expectation(self, rv: RandomVariable) -> float:
        if rv.space != self.space:
            raise StructuralError("variable lives on a different space")
        return sum(w * v for w, v in zip(self.weights, rv.values))

    def partial_expectation(self, rv: RandomVariable, mask: int) -> float:
        """``E[rv * 1_A]`` for the event with bitmask ``mask``."""
        return sum(self.weights[i] * rv.values[i] for i in _bits(mask))


@dataclass(frozen=True)
class Capacity:
    """Increasing set function with ``w(empty)=0`` and ``w(full)=1``.

    Backends are closures over their parameters; ``kind`` records which
    constructor built the capacity. All instances are immutable and safe to
    share across threads. Continuity along shrinking event sequences is
    automatic on a finite space, so no operation exposes it.
    """

    space: FiniteSpace
    kind: str
    _fn: Callable[[int], float] = field(repr=False, compare=False)
    dual_of: "Capacity | None" = field(default=None, repr=False, compare=False)

    def value_mask(self, mask: int) -> float:
        return self._fn(mask)

    def value(self, event: Event) -> float:
        if event.space != self.space:
            raise StructuralError("event lives on a different space")
        return self._fn(event.mask)

    def tail_value(self, rv: RandomVariable, x: float) -> float:
        """``w(rv > x)``."""
        if rv.space != self.space:
            raise StructuralError("variable lives on a different space")
        return self._fn(rv.tail_mask(x))

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_measure(cls, p: ProbabilityMeasure) -> "Capacity":
        return cls(p.space, "measure", p.prob_mask)

    @classmethod
    def distortion(cls, g: Callable[[float], float], base: ProbabilityMeasure,
                   label: str = "distortion") -> "Capacity":
        """``w(A) = g(P(A))`` for an increasing g with g(0)=0, g(1)=1."""
        return cls(base.space, label, lambda m: g(base.prob_mask(m)))

    @classmethod
    def sup_of(cls, measures: Sequence[ProbabilityMeasure]) -> "Capacity":
        if not measures:
            raise DomainError("sup_of needs at least one measure")
        space = measures[0].space
        for p in measures[1:]:
            if p.space != space:
                raise StructuralError("measures live on different spaces")
        return cls(space, "sup_of_measures",
                   lambda m: max(p.prob_mask(m) for p in measures))

    @classmethod
    def expectation_cap(cls, y: RandomVariable, base: ProbabilityMeasure) -> "Capacity":
        """``w(A) = 1 ∧ E[Y·1_A]`` for Y >= 0 with E[Y] >= 1.

        E[Y] >= 1 keeps w(Omega) = 1; the degenerate Y = 1 gives back the
        base measure, which the no-ambiguity collapse tests rely on.
        """
        if y.space != base.space:
            raise StructuralError("Y lives on a different space")
        if any(v < -ATOL for v in y.values):
            raise DomainError("Y must be nonnegative")
        if base.expectation(y) < 1.0 - ATOL:
            raise DomainError("expectation cap requires E[Y] >= 1")
        return cls(base.space, "expectation_cap",
                   lambda m: min(1.0, base.partial_expectation(y, m)))

    @classmethod
    def from_table(cls, space: FiniteSpace,
                   values: Mapping[int, float] | Sequence[float]) -> "Capacity":
        """Explicit value per subset mask; rejects non-monotone input."""
        n = space.size
        if n > MAX_EXHAUSTIVE:
            raise DomainError(f"table backend limited to {MAX_EXHAUSTIVE} outcomes")
        size = 1 << n
        if isinstance(values, Mapping):
            table = [0.0] * size
            for mask, v in values.items():
                table[mask] = float(v)
            if len(values) != size:
                raise DomainError("table must supply a value for every subset")
        else:
            table = [float(v) for v in values]
            if len(table) != size:
                raise DomainError("table must supply a value for every subset")
        if abs(table[0]) > ATOL:
            raise DomainError("table capacity must have w(empty) = 0")
        if abs(table[size - 1] - 1.0) > ATOL:
            raise DomainError("table capacity must have w(full) = 1")
        for mask in range(size):
            for i in range(n):
                if not mask >> i & 1:
                    if table[mask] > table[mask | 1 << i] + ATOL:
                        raise DomainError(
                            "table capacity is not monotone",
                            mask=mask, bit=i,
                        )
        frozen = tuple(table)
        return cls(space, "table", lambda m: frozen[m])

    # -- operations ---------------------------------------------------------

    def dual(self) -> "Capacity":
        """``ŵ(A) = 1 - w(A^c)``; the dual of a dual is the original."""
        if self.dual_of is not None:
            return self.dual_of
        full = self.space.full_mask
        inner = self._fn
        return Capacity(self.space, f"dual({self.kind})",
                        lambda m: 1.0 - inner(full ^ m), dual_of=self)


def capacity_eval(w: Capacity, event: Event) -> float:
    """Evaluate ``w(A)``; functional alias for ``Capacity.value``."""
    return w.value(event)


def capacity_dual(w: Capacity) -> Capacity:
    return w.dual()


def is_monotone(w: Capacity, *, sample_pairs: int = 4096, seed: int = 0) -> bool:
    """Check A ⊆ B ⇒ w(A) ≤ w(B).

    Exhaustive over the one-bit covering relation for spaces of at most 16
    outcomes (which implies full monotonicity along chains); sampled pairs
    with a declared count beyond that.
    """
    n = w.space.size
    if n <= MAX_EXHAUSTIVE:
        for mask in range(1 << n):
            wm = w.value_mask(mask)
            for i in range(n):
                if not mask >> i & 1:
                    if wm > w.value_mask(mask | 1 << i) + ATOL:
                        return False
        return True
    rng = random.Random(seed)
    full = w.space.full_mask
    for _ in range(sample_pairs):
        a = rng.randint(0, full)
        b = a | rng.randint(0, full)
        if w.value_mask(a) > w.value_mask(b) + ATOL:
            return False
    return True


def is_subadditive(w: Capacity, *, sample_pairs: int = 4096, seed: int = 0) -> bool:
    """Check w(A∪B) ≤ w(A) + w(B).

    For monotone w it suffices to check disjoint pairs, so the exhaustive
    mode walks every (A, B) with B ⊆ A^c via submask enumeration (3**n
    pairs); spaces beyond 16 outcomes fall back to ``sample_pairs`` random
    pairs.
    """
    n = w.space.size
    if n <= MAX_EXHAUSTIVE:
        table = [w.value_mask(m) for m in range(1 << n)]
        full = (1 << n) - 1
        for a in range(1 << n):
            wa = table[a]
            comp = full ^ a
            b = comp
            while b:
                if table[a | b] > wa + table[b] + ATOL:
                    return False
                b = (b - 1) & comp
        return True
    rng = random.Random(seed)
    full = w.space.full_mask
    for _ in range(sample_pairs):
        a = rng.randint(0, full)
        b = rng.randint(0, full)
        if w.value_mask(a | b) > w.value_mask(a) + w.value_mask(b) + ATOL:
            return False
    return True


def partitions(space: FiniteSpace, n_cells: int) -> Iterable[tuple[int, ...]]:
    """All ordered partitions of the space into ``n_cells`` labeled masks."""
    size = space.size
    for assignment in itertools.product(range(n_cells), repeat=size):
        masks = [0] * n_cells
        for outcome, cell in enumerate(assignment):
            masks[cell] |= 1 << outcome
        yield tuple(masks)
