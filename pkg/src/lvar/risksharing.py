"""Multi-agent risk sharing: inf-convolution of Lambda VaR under capacities,
optimal allocations, finiteness diagnostics, homogeneous-belief shortcuts,
and comonotonic sharing.

The inf-convolution engine scans the tail sets ``{X > t}``, which take at
most ``m + 1`` values as t crosses the sorted values of X. For each tail it
enumerates assignments of tail outcomes to agents; a partition admits the
cash split ``sum y_i = t`` exactly when t lies in an extended-real budget
interval [A, B] assembled from per-agent generalized inverses of the step
Lambda functions (increasing agents contribute lower bounds, decreasing
agents upper bounds). Outcomes outside the tail never enter the constraints
and are assigned to the first agent. Everything is exact for step Lambda
functions; no grid refinement is involved.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .ambiguity import AmbiguitySet, invertible_curve, worst_case_capacity
from .core import (ATOL, Capacity, Event, FiniteSpace, ProbabilityMeasure,
                   RandomVariable, is_subadditive)
from .divergence import transform_lambda
from .errors import ContractError, DomainError, StructuralError
from .lambdavar import INF, LambdaFn, _scan_infimum, lambda_var

MAX_AGENTS = 4
MAX_SHARING_OUTCOMES = 12
CERT_TOL = 1e-9


@dataclass(frozen=True)
class Agent:
    """One participant: a step Lambda function and a capacity."""

    label: str
    lam: LambdaFn
    w: Capacity

    def __post_init__(self):
        if not self.lam.is_increasing and not self.lam.in_open_unit:
            raise DomainError(
                "decreasing agents need Lambda values strictly inside (0, 1)")


@dataclass(frozen=True)
class SharingResult:
    """Inf-convolution value together with the optimal-allocation witness.

    ``certificate`` lists per-agent pairs ``(w_i(tail ∩ A_i), Lambda_i(y_i))``
    backing feasibility. When the value is ``-inf`` (or an allocation is not
    constructible, see ``metadata``) the witness fields are ``None``.
    """

    value: float
    x_star: float | None
    y_star: tuple[float, ...] | None
    partition: tuple[Event, ...] | None
    allocations: tuple[RandomVariable, ...] | None
    certificate: tuple[tuple[float, float], ...] | None
    attained: bool
    metadata: dict = field(default_factory=dict)


class FinitenessClass(Enum):
    MINUS_INFINITY = "minus_infinity"
    FINITE = "finite"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class FinitenessReport:
    classification: FinitenessClass
    kappa: float
    witness_partition: tuple[int, ...] | None


def _shared_space(agents: Sequence[Agent], x: RandomVariable) -> FiniteSpace:
    if not agents:
        raise DomainError("at least one agent is required")
    space = agents[0].w.space
    for a in agents:
        if a.w.space != space:
            raise StructuralError("agents live on different spaces")
    if x.space != space:
        raise StructuralError("the shared risk lives on a different space")
    if len(agents) > MAX_AGENTS:
        raise DomainError(f"at most {MAX_AGENTS} agents are supported")
    if space.size > MAX_SHARING_OUTCOMES:
        raise DomainError(
            f"exhaustive partition search is capped at {MAX_SHARING_OUTCOMES} outcomes")
    return space


def _budget_interval(agents: Sequence[Agent], cells: Sequence[int]
                     ) -> tuple[float, float] | None:
    """Extended-real interval of feasible total budgets for one partition of
    the tail, or None when some agent cannot accept its cell at any cash
    level."""
    lo_terms, hi_terms = [], []
    lo_inf = hi_inf = False
    for agent, cell in zip(agents, cells):
        p = agent.w.value_mask(cell)
        if agent.lam.is_increasing:
            bound = agent.lam.lower_inverse(p)
            if bound == INF:
                return None
            if bound == -INF:
                lo_inf = True
            else:
                lo_terms.append(bound)
            hi_inf = True  # increasing agents absorb any upward slack
        else:
            bound = agent.lam.upper_inverse(p)
            if bound == -INF:
                return None
            if bound == INF:
                hi_inf = True
            else:
                hi_terms.append(bound)
            lo_inf = True  # decreasing agents absorb any downward slack
    lo = -INF if lo_inf else math.fsum(lo_terms)
    hi = INF if hi_inf else math.fsum(hi_terms)
    return lo, hi


def _tail_frontier(agents: Sequence[Agent], tail_mask: int
                   ) -> list[tuple[float, float, tuple[int, ...]]]:
    """Pareto frontier of budget intervals over assignments of the tail's
    outcomes to agents: smaller lower end and larger upper end both help.
    Lexicographically earlier assignments win ties."""
    outcomes = [i for i in range(agents[0].w.space.size) if tail_mask >> i & 1]
    n = len(agents)
    frontier: list[tuple[float, float, tuple[int, ...]]] = []
    for assignment in itertools.product(range(n), repeat=len(outcomes)):
        cells = [0] * n
        for outcome, agent_idx in zip(outcomes, assignment):
            cells[agent_idx] |= 1 << outcome
        interval = _budget_interval(agents, cells)
        if interval is None:
            continue
        lo, hi = interval
        if any(f_lo <= lo and f_hi >= hi for f_lo, f_hi, _ in frontier):
            continue
        frontier = [(f_lo, f_hi, f_a) for f_lo, f_hi, f_a in frontier
                    if not (f_lo >= lo and f_hi <= hi)]
        frontier.append((lo, hi, assignment))
    frontier.sort(key=lambda e: (e[0], e[2]))
    return frontier


def _segments(x: RandomVariable) -> list[tuple[float, float, int]]:
    """(left, right, tail_mask) pieces on which ``{X > t}`` is constant."""
    values = x.distinct_values()
    edges = [-INF, *values, INF]
    return [(edges[k], edges[k + 1], x.tail_mask(edges[k]) if k else x.space.full_mask)
            for k in range(len(edges) - 1)]


def inf_convolution(agents: Sequence[Agent], x: RandomVariable) -> SharingResult:
    """Minimal total risk over all splits of X, with the optimal allocation
    ``X_i = (X - x*) 1_{A_i} + y_i`` reconstructed from the winning tail
    partition. Exact for monotone step Lambda functions, including agents of
    mixed direction."""
    _shared_space(agents, x)
    best: tuple[float, int, tuple[int, ...]] | None = None
    for left, right, tail in _segments(x):
        for lo, hi, assignment in _tail_frontier(agents, tail):
            cand = max(left, lo)
            if cand > hi or cand >= right:
                continue
            if best is None or cand < best[0]:
                best = (cand, tail, assignment)
            break  # frontier is sorted by lo; later entries cannot do better
    if best is None:
        # Unreachable for Lambda values in (0, 1]: the empty tail is free.
        return SharingResult(INF, None, None, None, None, None, False,
                             {"diagnostic": "no feasible budget at any level"})
    value, tail, assignment = best
    if value == -INF:
        return SharingResult(
            -INF, None, None, None, None, None, False,
            {"diagnostic": "unbounded below",
             "witness_assignment": assignment})
    assignment = _lex_witness(agents, tail, value) or assignment
    return _build_result(agents, x, value, tail, assignment)


def _lex_witness(agents: Sequence[Agent], tail: int, x_star: float
                 ) -> tuple[int, ...] | None:
    """Lexicographically smallest tail assignment feasible at the optimum."""
    outcomes = [i for i in range(agents[0].w.space.size) if tail >> i & 1]
    n = len(agents)
    for assignment in itertools.product(range(n), repeat=len(outcomes)):
        cells = [0] * n
        for outcome, agent_idx in zip(outcomes, assignment):
            cells[agent_idx] |= 1 << outcome
        interval = _budget_interval(agents, cells)
        if interval is not None and interval[0] <= x_star <= interval[1]:
            return assignment
    return None


def _build_result(agents: Sequence[Agent], x: RandomVariable, x_star: float,
                  tail: int, assignment: tuple[int, ...],
                  metadata: dict | None = None) -> SharingResult:
    space = x.space
    n = len(agents)
    outcomes = [i for i in range(space.size) if tail >> i & 1]
    cells = [0] * n
    for outcome, agent_idx in zip(outcomes, assignment):
        cells[agent_idx] |= 1 << outcome
    y_star = _witness_budget(agents, cells, x_star)
    full_cells = list(cells)
    full_cells[0] |= space.full_mask ^ tail  # off-tail outcomes are inert
    partition = tuple(Event(space, m) for m in full_cells)
    allocations = tuple(
        RandomVariable(space, tuple(
            (x.values[i] - x_star if full_cells[k] >> i & 1 else 0.0) + y_star[k]
            for i in range(space.size)))
        for k in range(n))
    certificate = tuple(
        (agents[k].w.value_mask(cells[k]), agents[k].lam(y_star[k]))
        for k in range(n))
    for w_cell, lam_y in certificate:
        if w_cell > lam_y + CERT_TOL:
            raise ContractError("optimal allocation failed its own certificate",
                                certificate=certificate)
    return SharingResult(x_star, x_star, y_star, partition, allocations,
                         certificate, True, metadata or {})


def _witness_budget(agents: Sequence[Agent], cells: Sequence[int],
                    x_star: float) -> tuple[float, ...]:
    """Deterministic cash split: constrained agents sit at their generalized
    inverse, unconstrained agents share the slack equally; with everyone
    constrained the slack lands on the last agent able to absorb it."""
    n = len(agents)
    y = [0.0] * n
    unconstrained: list[int] = []
    for k, (agent, cell) in enumerate(zip(agents, cells)):
        p = agent.w.value_mask(cell)
        bound = (agent.lam.lower_inverse(p) if agent.lam.is_increasing
                 else agent.lam.upper_inverse(p))
        if math.isinf(bound):
            unconstrained.append(k)
        else:
            y[k] = bound
    rem = x_star - math.fsum(y[k] for k in range(n) if k not in unconstrained)
    if unconstrained:
        share = rem / len(unconstrained)
        for k in unconstrained:
            y[k] = share
        return tuple(y)
    if abs(rem) <= 1e-12:
        return tuple(y)
    if rem > 0.0:
        absorbers = [k for k in range(n) if agents[k].lam.is_increasing]
    else:
        absorbers = [k for k in range(n) if not agents[k].lam.is_increasing]
    if not absorbers:
        raise ContractError("no agent can absorb the budget slack", slack=rem)
    y[absorbers[-1]] += rem
    return tuple(y)


# -- sup-convolution of Lambda functions ------------------------------------


def _sup_convolution_frontier(lams: Sequence[LambdaFn]):
    """Enumerate breakpoint configurations of ``sup { sum Lambda_i(y_i) }``.

    Each agent either sits below its first breakpoint (the floor, feasible
    for every total budget) or exactly at one of its breakpoints (cost =
    that breakpoint). Returns the best floor configuration and the Pareto
    frontier of (total cost, total value) pairs over all-finite
    configurations, cost-sorted with strictly increasing values.
    """
    for lam in lams:
        if not lam.is_increasing:
            raise ContractError("sup-convolution requires increasing functions")
    options = []
    for lam in lams:
        opts: list[tuple[float | None, float]] = [(None, lam.values[0])]
        opts += [(b, lam.values[k + 1]) for k, b in enumerate(lam.breakpoints)]
        options.append(opts)
    floor_best: tuple[float, tuple] | None = None
    finite: list[tuple[float, float, tuple]] = []
    for combo in itertools.product(*options):
        val = math.fsum(v for _, v in combo)
        costs = tuple(c for c, _ in combo)
        if any(c is None for c in costs):
            if floor_best is None or val > floor_best[0] + ATOL:
                floor_best = (val, costs)
        else:
            finite.append((math.fsum(costs), val, costs))
    finite.sort(key=lambda e: (e[0], -e[1]))
    frontier: list[tuple[float, float, tuple]] = []
    for cost, val, costs in finite:
        if not frontier or val > frontier[-1][1] + ATOL:
            frontier.append((cost, val, costs))
    assert floor_best is not None  # the all-floor configuration always exists
    return floor_best, frontier


def sup_convolution_value(lams: Sequence[LambdaFn], budget: float) -> float:
    """Uncapped ``sup { sum Lambda_i(y_i) : sum y_i = budget }``."""
    floor_best, frontier = _sup_convolution_frontier(lams)
    best = floor_best[0]
    for cost, val, _ in frontier:
        if cost <= budget + ATOL:
            best = max(best, val)
    return best


def lambda_star(lams: Sequence[LambdaFn], budget: float) -> float:
    """Pooled confidence curve: the sup-convolution capped at one."""
    return min(1.0, sup_convolution_value(lams, budget))


def _sup_convolution_witness(lams: Sequence[LambdaFn], budget: float
                             ) -> tuple[float, tuple[float, ...]]:
    """A cash split attaining the uncapped sup at the given budget."""
    floor_best, frontier = _sup_convolution_frontier(lams)
    best_val, best_costs = floor_best
    for cost, val, costs in frontier:
        if cost <= budget + ATOL and val > best_val + ATOL:
            best_val, best_costs = val, costs
    y = [0.0] * len(lams)
    floor_agents = [k for k, c in enumerate(best_costs) if c is None]
    for k, c in enumerate(best_costs):
        if c is not None:
            y[k] = c
        elif lams[k].breakpoints:
            y[k] = lams[k].breakpoints[0] - 1.0
    rem = budget - math.fsum(y)
    if floor_agents:
        y[floor_agents[-1]] += rem
    else:
        y[-1] += rem
    return best_val, tuple(y)


# -- homogeneous-belief shortcut ---------------------------------------------


def inf_convolution_homogeneous(agents: Sequence[Agent], y: RandomVariable,
                                base: ProbabilityMeasure, x: RandomVariable
                                ) -> SharingResult:
    """One-dimensional evaluation when every agent carries the same
    expectation-cap capacity ``A -> 1 ∧ E[Y 1_A]``: the value is the least t
    with ``E[Y 1_{X > t}]`` below the pooled confidence curve.

    This is the atomless-limit value. The allocation witness packs tail
    atoms greedily into the per-agent budgets; when an exact packing does
    not exist the result is flagged ``fractional_allocation`` and the
    witness fields stay None.
    """
    space = _shared_space(agents, x)
    if y.space != space or base.space != space:
        raise StructuralError("Y or the base measure lives on a different space")
    reference = Capacity.expectation_cap(y, base)
    for agent in agents:
        if not agent.lam.is_increasing:
            raise ContractError("the homogeneous shortcut requires increasing Lambdas")
        for mask in range(1 << space.size):
            if abs(agent.w.value_mask(mask) - reference.value_mask(mask)) > CERT_TOL:
                raise ContractError(
                    "agent capacity is not the shared expectation cap",
                    agent=agent.label, mask=mask)
    lams = [a.lam for a in agents]
    floor_best, frontier = _sup_convolution_frontier(lams)

    def pooled(t: float) -> float:
        best = floor_best[0]
        for cost, val, _ in frontier:
            if cost <= t + ATOL:
                best = max(best, val)
        return best

    grid = sorted(set(x.values) | {c for c, _, _ in frontier})
    value = _scan_infimum(grid, lambda t: base.partial_expectation(y, x.tail_mask(t))
                          <= pooled(t) + ATOL)
    if value == -INF:
        return SharingResult(-INF, None, None, None, None, None, False,
                             {"diagnostic": "unbounded below"})
    sup_val, y_star = _sup_convolution_witness(lams, value)
    packing = _greedy_pack(agents, y_star, y, base, x.tail_mask(value))
    if packing is None:
        return SharingResult(value, value, y_star, None, None, None, True,
                             {"fractional_allocation": True,
                              "diagnostic": "tail atoms do not pack into the "
                                            "per-agent budgets"})
    cells = packing
    outcomes = [i for i in range(space.size) if x.tail_mask(value) >> i & 1]
    assignment = tuple(next(k for k in range(len(agents)) if cells[k] >> i & 1)
                       for i in outcomes)
    return _build_result(agents, x, value, x.tail_mask(value), assignment,
                         {"pooled_value": sup_val})


def _greedy_pack(agents: Sequence[Agent], y_star: Sequence[float],
                 y: RandomVariable, base: ProbabilityMeasure,
                 tail: int) -> list[int] | None:
    """First-fit-decreasing packing of tail atoms (by Y-weighted mass) into
    the per-agent capacities Lambda_i(y_i); None when an atom fits nowhere."""
    budgets = [agents[k].lam(y_star[k]) + CERT_TOL for k in range(len(agents))]
    atoms = sorted((i for i in range(y.space.size) if tail >> i & 1),
                   key=lambda i: -(base.weights[i] * y.values[i]))
    cells = [0] * len(agents)
    for i in atoms:
        mass = base.weights[i] * y.values[i]
        k = max(range(len(agents)), key=lambda j: budgets[j])
        if budgets[k] < mass:
            return None
        budgets[k] -= mass
        cells[k] |= 1 << i
    return cells


def homogeneous_grid_value(agents: Sequence[Agent], y: RandomVariable,
                           base: ProbabilityMeasure, x: RandomVariable,
                           resolution: float, span: float = 2.0) -> float:
    """Grid fallback for the homogeneous case: sweep the first n-1 cash
    levels over a lattice and evaluate the resulting one-dimensional
    condition. Upper-bounds the exact homogeneous value and converges to it
    as the resolution shrinks (nested lattices give monotone improvement)."""
    _shared_space(agents, x)
    if len(agents) < 2:
        raise DomainError("the grid fallback is defined for two or more agents")
    lams = [a.lam for a in agents]
    for lam in lams:
        if not lam.is_increasing:
            raise ContractError("the grid fallback requires increasing Lambdas")
    points = [b for lam in lams for b in lam.breakpoints] or [0.0]
    lo = min(points) - span
    hi = max(points) + span
    steps = int(round((hi - lo) / resolution))
    lattice = [lo + k * resolution for k in range(steps + 1)]
    n = len(agents)
    best = INF

    def shifted_sum(t: float, knots: Sequence[float]) -> float:
        # knots are the cumulative cash levels y_1, y_1+y_2, ...
        total = lams[0](knots[0])
        for j in range(1, n - 1):
            total += lams[j](knots[j] - knots[j - 1])
        total += lams[n - 1](t - knots[n - 2])
        return total

    grid_values = sorted(set(x.values))
    for knots in itertools.product(lattice, repeat=n - 1):
        grid = sorted(set(grid_values)
                      | {b + knots[-1] for b in lams[n - 1].breakpoints})
        val = _scan_infimum(grid, lambda t: base.partial_expectation(y, x.tail_mask(t))
                            <= shifted_sum(t, knots) + ATOL)
        best = min(best, val)
    return best


# -- finiteness --------------------------------------------------------------


def finiteness_check(agents: Sequence[Agent],
                     x: RandomVariable | None = None) -> FinitenessReport:
    """Classify the inf-convolution as unbounded below or finite by the
    partition statistic kappa; Boundary is returned in the inconclusive band
    around one. The statistic does not depend on X."""
    if not agents:
        raise DomainError("at least one agent is required")
    space = agents[0].w.space
    n = len(agents)
    if n > MAX_AGENTS or space.size > MAX_SHARING_OUTCOMES:
        raise DomainError("exhaustive partition search limits exceeded")
    for agent in agents:
        if not agent.lam.is_increasing:
            raise ContractError("the finiteness test requires increasing Lambdas")
        if not (0.0 < agent.lam.lambda_minus <= agent.lam.lambda_plus < 1.0):
            raise ContractError(
                "the finiteness test requires Lambda ranges inside (0, 1)",
                agent=agent.label)
        if not is_subadditive(agent.w):
            raise ContractError("the finiteness test requires subadditive "
                                "capacities", agent=agent.label)
    kappa = INF
    witness: tuple[int, ...] | None = None
    for assignment in itertools.product(range(n), repeat=space.size):
        cells = [0] * n
        for outcome, agent_idx in enumerate(assignment):
            cells[agent_idx] |= 1 << outcome
        ws = [agents[k].w.value_mask(cells[k]) for k in range(n)]
        stat = min(
            max(ws[i] / agents[i].lam.lambda_minus,
                max((ws[j] / agents[j].lam.lambda_plus for j in range(n) if j != i),
                    default=0.0))
            for i in range(n))
        if stat < kappa:
            kappa, witness = stat, assignment
    if kappa < 1.0 - 1e-9:
        cls = FinitenessClass.MINUS_INFINITY
    elif kappa > 1.0 + 1e-9:
        cls = FinitenessClass.FINITE
    else:
        cls = FinitenessClass.BOUNDARY
    return FinitenessReport(cls, kappa, witness)


# -- comonotonic sharing ------------------------------------------------------


def comonotone_inf_convolution(agents: Sequence[Agent],
                               x: RandomVariable) -> SharingResult:
    """Comonotonic sharing: the total is the smallest individual Lambda VaR
    and the minimizing agent takes all of X.

    The identity is guaranteed when every individual value is nonnegative or
    every Lambda is constant below zero; otherwise the value is still
    returned but flagged ``sufficient_condition_met = False``.
    """
    space = _shared_space(agents, x)
    for agent in agents:
        if not agent.lam.is_increasing:
            raise ContractError("comonotonic sharing requires increasing Lambdas")
    values = [lambda_var(a.w, a.lam, x) for a in agents]
    winner = min(range(len(agents)), key=lambda k: (values[k], k))
    condition = (all(v >= 0.0 for v in values)
                 or all(a.lam.is_constant_below(0.0) for a in agents))
    partition = tuple(Event.full(space) if k == winner else Event.empty(space)
                      for k in range(len(agents)))
    allocations = tuple(x if k == winner else RandomVariable.constant(space, 0.0)
                        for k in range(len(agents)))
    return SharingResult(
        values[winner], None, None, partition, allocations, None,
        not math.isinf(values[winner]),
        {"per_agent_values": tuple(values), "winner": agents[winner].label,
         "sufficient_condition_met": condition})


# -- sharing under ambiguity --------------------------------------------------


@dataclass(frozen=True)
class RobustAgent:
    """One participant whose belief is an ambiguity set instead of a capacity."""

    label: str
    lam: LambdaFn
    ambiguity: AmbiguitySet


def robust_sharing(robust_agents: Sequence[RobustAgent], x: RandomVariable,
                   *, route_tol: float = CERT_TOL) -> SharingResult:
    """Replace each ambiguity set by its worst-case capacity and share.

    When every ambiguity admits an invertible distortion the transformed
    route (plain measures with distorted Lambdas) is evaluated as well; a
    disagreement beyond ``route_tol`` raises, signalling an implementation
    bug rather than a modeling failure.
    """
    if not robust_agents:
        raise DomainError("at least one agent is required")
    for ra in robust_agents:
        if not ra.lam.is_increasing:
            raise ContractError("robust sharing requires increasing Lambdas")
    agents = [Agent(ra.label, ra.lam, worst_case_capacity(ra.ambiguity))
              for ra in robust_agents]
    result = inf_convolution(agents, x)
    curves = [invertible_curve(ra.ambiguity) for ra in robust_agents]
    if all(c is not None for c in curves) and all(
            ra.lam.in_open_unit for ra in robust_agents):
        transformed = [
            Agent(ra.label, transform_lambda(curve, ra.lam),
                  Capacity.from_measure(base))
            for ra, (curve, base) in zip(robust_agents, curves)]
        alt = inf_convolution(transformed, x)
        if not _ext_close(result.value, alt.value, route_tol):
            raise ContractError(
                "worst-case-capacity route and transformed-Lambda route disagree",
                capacity_route=result.value, transformed_route=alt.value)
        result.metadata["transformed_value"] = alt.value
    return result


def _ext_close(a: float, b: float, tol: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol
