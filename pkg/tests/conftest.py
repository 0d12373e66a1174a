"""Shared fixture builders: random spaces, measures, step Lambda functions,
and the decreasing-Lambda counterexample fixture used across suites."""

from __future__ import annotations

import numpy as np
import pytest

from lvar import (Agent, Capacity, FiniteSpace, LambdaFn, ProbabilityMeasure,
                  RandomVariable)


def make_uniform(n: int) -> tuple[FiniteSpace, ProbabilityMeasure]:
    space = FiniteSpace.of_size(n)
    return space, ProbabilityMeasure.uniform(space)


def random_measure(rng: np.random.Generator, space: FiniteSpace,
                   zero_ok: bool = False) -> ProbabilityMeasure:
    raw = rng.random(space.size) + (0.0 if zero_ok else 0.05)
    if zero_ok and space.size > 1:
        raw[rng.integers(space.size)] = 0.0
    raw /= raw.sum()
    return ProbabilityMeasure(space, tuple(raw))


def random_variable(rng: np.random.Generator, space: FiniteSpace,
                    lo: float = -2.0, hi: float = 4.0,
                    lattice: float | None = None) -> RandomVariable:
    vals = rng.uniform(lo, hi, space.size)
    if lattice is not None:
        vals = np.round(vals / lattice) * lattice
    return RandomVariable(space, tuple(float(v) for v in vals))


def random_step_lambda(rng: np.random.Generator, direction: str,
                       max_pieces: int = 3, lo: float = 0.05, hi: float = 0.95,
                       span: tuple[float, float] = (-1.5, 3.5),
                       lattice: float | None = None) -> LambdaFn:
    pieces = int(rng.integers(1, max_pieces + 1))
    if pieces == 1 or direction == "constant":
        level = float(rng.uniform(lo, hi))
        return LambdaFn.const(level)
    breaks = np.sort(rng.uniform(span[0], span[1], pieces - 1))
    if lattice is not None:
        breaks = np.unique(np.round(breaks / lattice) * lattice)
    levels = np.sort(rng.uniform(lo, hi, len(breaks) + 1))
    if direction == "decreasing":
        levels = levels[::-1]
    return LambdaFn(direction, tuple(float(b) for b in breaks),
                    tuple(float(v) for v in levels))


def example_decreasing_lambda(step: float = 1e-3) -> LambdaFn:
    """Step encoding of clip(1 - x, 0.2, 0.8) on a uniform grid; the values
    at the decision points 0, 0.5, 0.75 are exact."""
    count = int(round(0.6 / step))
    breaks = tuple(round(0.2 + k * step, 12) for k in range(count + 1))
    values = (0.8,) + tuple(min(max(1.0 - b, 0.2), 0.8) for b in breaks)
    return LambdaFn("decreasing", breaks, values)


def example_sup_fixture():
    """Three-outcome discretization of the decreasing-Lambda counterexample:
    two measures whose sup-capacity strictly beats both individual values."""
    space = FiniteSpace(("hi", "mid", "lo"))
    x = RandomVariable(space, (0.75, 0.5, 0.0))
    p1 = ProbabilityMeasure(space, (0.625, 0.125, 0.25))
    p2 = ProbabilityMeasure(space, (0.15, 0.7, 0.15))
    return space, x, p1, p2


def measure_agents(labels, lams, measures) -> list[Agent]:
    return [Agent(label, lam, Capacity.from_measure(p))
            for label, lam, p in zip(labels, lams, measures)]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
