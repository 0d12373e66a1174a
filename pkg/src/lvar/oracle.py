"""Independent brute-force verifiers.

Every headline identity in the library has a second, dumber implementation
here: direct definition scans on explicit grids, exhaustive searches over
restricted allocation families, and feasible-density sampling. The oracles
re-derive their own feasibility logic (piece scans instead of generalized
inverses, t-grids instead of bisection); per-allocation risk numbers are the
exact ``lambda_var`` evaluator, whose own definition scan lives in
:func:`brute_lambda_var`.

Known bound directions: ``brute_sup_over_ball`` never exceeds the analytic
robust value; ``brute_inf_convolution`` and ``brute_comonotone`` never fall
below the exact optimum (they search restricted families), and the former is
within ``n * y_resolution`` above it.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ambiguity import AmbiguitySet, LikelihoodBand, PhiBall
from .core import ATOL, Capacity, ProbabilityMeasure, RandomVariable
from .errors import DomainError
from .lambdavar import INF, LambdaFn, lambda_var
from .risksharing import Agent

TWO_POINT_T_RES = 1e-4


@dataclass(frozen=True)
class GridSpec:
    """Scan resolutions and sampling budget; identical specs (including the
    seed) give identical oracle outputs."""

    x_resolution: float = 1e-3
    y_resolution: float = 1e-2
    sample_count: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.x_resolution <= 0.0 or self.y_resolution <= 0.0:
            raise DomainError("grid resolutions must be positive")
        if self.sample_count <= 0:
            raise DomainError("sample count must be positive")


def _worker_count() -> int:
    raw = os.environ.get("LVAR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def brute_lambda_var(w: Capacity, lam: LambdaFn, x: RandomVariable,
                     grid: GridSpec = GridSpec()) -> float:
    """Definition scan on an explicit x-grid over [min X - 1, max X + 1];
    within one x_resolution of the exact value whenever that value lies in
    the window."""
    lo = x.min() - 1.0
    hi = x.max() + 1.0
    steps = int(math.ceil((hi - lo) / grid.x_resolution))
    for k in range(steps + 1):
        t = lo + k * grid.x_resolution
        if w.tail_value(x, t) <= lam(t) + ATOL:
            return t
    return INF


# -- feasible-density samplers -------------------------------------------------


def _phi_ball_divergence(ball: PhiBall, density: np.ndarray) -> float:
    total = 0.0
    for p, z in zip(ball.base.weights, density):
        if p > 0.0:
            term = p * ball.phi(float(z))
            if math.isinf(term):
                return math.inf
            total += term
    return total


def _project_into_ball(ball: PhiBall, density: np.ndarray) -> np.ndarray:
    """Scale a density toward the flat density until it enters the ball;
    the divergence is convex along the segment and zero at the flat end."""
    if _phi_ball_divergence(ball, density) <= ball.delta:
        return density
    lo, hi = 0.0, 1.0  # mix weight on the proposed density
    for _ in range(60):
        mid = (lo + hi) / 2.0
        mixed = mid * density + (1.0 - mid)
        if _phi_ball_divergence(ball, mixed) <= ball.delta:
            lo = mid
        else:
            hi = mid
    return lo * density + (1.0 - lo)


def sample_phi_ball_densities(ball: PhiBall, grid: GridSpec) -> list[np.ndarray]:
    """Dirichlet draws projected into the ball plus the systematic family of
    two-point densities (one level on an event, one off it), whose largest
    feasible on-event level is located by a t-grid scan."""
    rng = np.random.default_rng(grid.seed)
    weights = np.asarray(ball.base.weights)
    support = weights > 0.0
    out: list[np.ndarray] = []
    for _ in range(grid.sample_count):
        q = np.zeros_like(weights)
        q[support] = rng.dirichlet(np.ones(int(support.sum())))
        density = np.zeros_like(weights)
        density[support] = q[support] / weights[support]
        out.append(_project_into_ball(ball, density))
    n = ball.base.space.size
    if n <= 10:
        masks = range(1, (1 << n) - 1)
    else:
        masks = rng.integers(1, (1 << n) - 1, size=256)
    for mask in masks:
        mask = int(mask)
        p = ball.base.prob_mask(mask)
        if not 0.0 < p < 1.0:
            continue
        on_event = np.array([mask >> i & 1 for i in range(n)], dtype=bool)

        def density_at(t: float) -> np.ndarray:
            return np.where(on_event, t / p, (1.0 - t) / (1.0 - p))

        # largest lattice t with the two-point density inside the ball,
        # located by bisection over the lattice (feasibility is monotone)
        steps = int(round((1.0 - p) / TWO_POINT_T_RES))
        lo_k, hi_k = 0, steps  # t = p is always feasible
        while lo_k < hi_k:
            mid = (lo_k + hi_k + 1) // 2
            t = min(1.0, p + mid * TWO_POINT_T_RES)
            if _phi_ball_divergence(ball, density_at(t)) <= ball.delta:
                lo_k = mid
            else:
                hi_k = mid - 1
        out.append(density_at(min(1.0, p + lo_k * TWO_POINT_T_RES)))
    return out


def greedy_band_mass(band: LikelihoodBand, mask: int) -> float:
    """Worst-case probability of an event under a likelihood band, built by
    greedily raising the density from Y1 toward Y2 on the event until the
    unit budget runs out (the final atom may be raised fractionally)."""
    base, y1, y2 = band.base, band.y1, band.y2
    budget = 1.0 - base.expectation(y1)
    filled = 0.0
    for i in range(base.space.size):
        if not mask >> i & 1:
            continue
        capacity = base.weights[i] * (y2.values[i] - y1.values[i])
        take = min(budget, capacity)
        filled += take
        budget -= take
        if budget <= 0.0:
            break
    return base.partial_expectation(y1, mask) + filled


def sample_band_densities(band: LikelihoodBand, grid: GridSpec) -> list[np.ndarray]:
    """Random band densities rebalanced to unit mass by shifting a clipped
    interpolation level, plus the greedy per-event extremal densities."""
    rng = np.random.default_rng(grid.seed)
    weights = np.asarray(band.base.weights)
    lo = np.asarray(band.y1.values)
    hi = np.asarray(band.y2.values)
    out: list[np.ndarray] = []

    def rebalance(v: np.ndarray) -> np.ndarray | None:
        def mass(shift: float) -> float:
            z = lo + np.clip(v + shift, 0.0, 1.0) * (hi - lo)
            return float(np.dot(weights, z))

        a, b = -1.0, 1.0
        if mass(a) > 1.0 or mass(b) < 1.0:
            return None
        for _ in range(80):
            mid = (a + b) / 2.0
            if mass(mid) < 1.0:
                a = mid
            else:
                b = mid
        return lo + np.clip(v + (a + b) / 2.0, 0.0, 1.0) * (hi - lo)

    for _ in range(grid.sample_count):
        z = rebalance(rng.random(len(weights)))
        if z is not None:
            out.append(z)
    n = band.base.space.size
    masks = range(1, (1 << n) - 1) if n <= 10 else \
        np.random.default_rng(grid.seed + 1).integers(1, (1 << n) - 1, size=256)
    for mask in masks:
        mask = int(mask)
        budget = 1.0 - band.base.expectation(band.y1)
        z = np.array(lo)
        for i in sorted(range(n), key=lambda i: not mask >> i & 1):
            room = weights[i] * (hi[i] - lo[i])
            if room <= 0.0 or budget <= 0.0:
                continue
            take = min(budget, room)
            z[i] += take / weights[i] if weights[i] > 0.0 else 0.0
            budget -= take
        if abs(float(np.dot(weights, z)) - 1.0) <= 1e-9:
            out.append(z)
    return out


def brute_sup_over_ball(ambiguity: AmbiguitySet, lam: LambdaFn,
                        x: RandomVariable, grid: GridSpec = GridSpec()) -> float:
    """Max of ``lambda_var`` over sampled feasible measures; a lower bound
    for the analytic robust value, attaining it within one X-value spacing
    when the worst case is a two-point density."""
    if isinstance(ambiguity, PhiBall):
        densities = sample_phi_ball_densities(ambiguity, grid)
        base = ambiguity.base
    elif isinstance(ambiguity, LikelihoodBand):
        densities = sample_band_densities(ambiguity, grid)
        base = ambiguity.base
    else:
        raise DomainError(f"unknown ambiguity set {type(ambiguity).__name__}")
    space = base.space

    def evaluate(density: np.ndarray) -> float:
        weights = tuple(float(p * z) for p, z in zip(base.weights, density))
        total = sum(weights)
        if total <= 0.0:
            return -INF
        weights = tuple(max(0.0, wt) / total for wt in weights)
        return lambda_var(Capacity.from_measure(ProbabilityMeasure(space, weights)),
                          lam, x)

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(evaluate, densities))
    else:
        values = [evaluate(d) for d in densities]
    return max(values, default=-INF)


# -- restricted-allocation searches --------------------------------------------


def brute_inf_convolution(agents: Sequence[Agent], x: RandomVariable,
                          grid: GridSpec = GridSpec()) -> float:
    """Exhaustive search over allocations ``X_i = (X - x) 1_{A_i} + y_i``
    with every ``y_i`` on an absolute lattice of step ``y_resolution`` (the
    total ``x = sum y_i`` follows), partitions of the whole space exhaustive.
    Upper-bounds the true inf-convolution within ``n * y_resolution``."""
    n = len(agents)
    space = x.space
    if n > 3 or space.size > 6:
        raise DomainError("brute inf-convolution is capped at 3 agents and 6 outcomes")
    res = grid.y_resolution
    points = list(x.values) + [b for a in agents for b in a.lam.breakpoints] + [0.0]
    # widen the floor with the agent count: a cash split can park one agent
    # far below the data range while the others sit at their breakpoints
    span = max(1.0, max(points) - min(points))
    lo = math.floor((min(points) - 1.0 - (n - 1) * span) / res) * res
    hi = max(points) + 1.0
    width = int(math.ceil((hi - lo) / res)) + 1
    lattice = [lo + k * res for k in range(width)]
    xsums = [n * lo + k * res for k in range(n * (width - 1) + 1)]

    tables: dict[tuple[int, int], np.ndarray] = {}

    def table(agent_idx: int, cell: int) -> np.ndarray:
        key = (agent_idx, cell)
        if key not in tables:
            agent = agents[agent_idx]
            out = np.empty((width, len(xsums)))
            for iy, yv in enumerate(lattice):
                for ix, xv in enumerate(xsums):
                    values = tuple(
                        (x.values[i] - xv if cell >> i & 1 else 0.0) + yv
                        for i in range(space.size))
                    out[iy, ix] = lambda_var(agent.w, agent.lam,
                                             RandomVariable(space, values))
            tables[key] = out
        return tables[key]

    iy = np.arange(width)
    best = INF
    for assignment in itertools.product(range(n), repeat=space.size):
        cells = [0] * n
        for outcome, agent_idx in enumerate(assignment):
            cells[agent_idx] |= 1 << outcome
        if n == 1:
            total = table(0, cells[0])[iy, iy]
        elif n == 2:
            s = iy[:, None] + iy[None, :]
            total = (table(0, cells[0])[iy[:, None], s]
                     + table(1, cells[1])[iy[None, :], s])
        else:
            s = iy[:, None, None] + iy[None, :, None] + iy[None, None, :]
            total = (table(0, cells[0])[iy[:, None, None], s]
                     + table(1, cells[1])[iy[None, :, None], s]
                     + table(2, cells[2])[iy[None, None, :], s])
        best = min(best, float(total.min()))
    return best


def _simplex_lattice(n: int, steps: int) -> list[tuple[float, ...]]:
    """All nonnegative slope vectors summing to one on a 1/steps lattice."""
    out = []
    for cuts in itertools.combinations(range(steps + n - 1), n - 1):
        parts = []
        prev = -1
        for c in [*cuts, steps + n - 1]:
            parts.append(c - prev - 1)
            prev = c
        out.append(tuple(p / steps for p in parts))
    return out


def brute_comonotone(agents: Sequence[Agent], x: RandomVariable,
                     grid: GridSpec = GridSpec()) -> float:
    """Min total over comonotone splits: piecewise-linear functions anchored
    at zero whose slopes on each segment between sorted X knots form a
    simplex-lattice vector. Sign compatibility holds by construction since
    every component vanishes at zero and has nonnegative slopes."""
    n = len(agents)
    if n > 3 or len(set(x.values)) > 6:
        raise DomainError(
            "brute comonotone search is capped at 3 agents and 6 distinct values")
    knots = sorted(set(x.values) | {0.0})
    zero_idx = knots.index(0.0)
    segments = len(knots) - 1
    steps = max(1, int(round(1.0 / grid.y_resolution)))
    slopes = _simplex_lattice(n, steps)
    value_cache: dict[tuple[int, tuple[float, ...]], float] = {}

    def agent_value(agent_idx: int, knot_values: tuple[float, ...]) -> float:
        key = (agent_idx, knot_values)
        if key not in value_cache:
            outcome_values = tuple(knot_values[knots.index(v)] for v in x.values)
            value_cache[key] = lambda_var(
                agents[agent_idx].w, agents[agent_idx].lam,
                RandomVariable(x.space, outcome_values))
        return value_cache[key]

    best = INF
    for combo in itertools.product(range(len(slopes)), repeat=segments):
        per_agent_knots = []
        for k in range(n):
            vals = [0.0] * len(knots)
            for j in range(zero_idx + 1, len(knots)):
                seg = j - 1
                vals[j] = vals[j - 1] + slopes[combo[seg]][k] * (knots[j] - knots[j - 1])
            for j in range(zero_idx - 1, -1, -1):
                seg = j
                vals[j] = vals[j + 1] - slopes[combo[seg]][k] * (knots[j + 1] - knots[j])
            per_agent_knots.append(tuple(vals))
        total = sum(agent_value(k, per_agent_knots[k]) for k in range(n))
        best = min(best, total)
    return best


# -- finiteness witness ---------------------------------------------------------


def brute_divergence_witness(agents: Sequence[Agent], x: RandomVariable,
                             grid: GridSpec = GridSpec()) -> bool:
    """True when deep-left probes stay feasible, i.e. the inf-convolution
    diverges to -inf. Re-derives per-agent minimal cash levels by a direct
    scan of the Lambda pieces instead of the generalized inverses."""
    n = len(agents)
    space = x.space
    if n > 4 or space.size > 6:
        raise DomainError("the divergence witness search is capped at 6 outcomes")

    def minimal_cash(agent: Agent, need: float) -> float:
        lam = agent.lam
        pieces = [(-INF, lam.values[0])]
        pieces += [(b, lam.values[k + 1]) for k, b in enumerate(lam.breakpoints)]
        for start, val in pieces:
            if val >= need - ATOL:
                return start
        return INF

    anchors = list(x.values) + [b for a in agents for b in a.lam.breakpoints]
    base_probe = min(anchors) - 10.0
    for probe in (base_probe, base_probe - 1e3, base_probe - 1e6):
        tail = x.tail_mask(probe)
        feasible = False
        for assignment in itertools.product(range(n), repeat=space.size):
            cells = [0] * n
            for outcome, agent_idx in enumerate(assignment):
                if tail >> outcome & 1:
                    cells[agent_idx] |= 1 << outcome
            needs = [minimal_cash(a, a.w.value_mask(c))
                     for a, c in zip(agents, cells)]
            if any(v == INF for v in needs):
                continue
            if any(v == -INF for v in needs) or math.fsum(needs) <= probe:
                feasible = True
                break
        if not feasible:
            return False
    return True
