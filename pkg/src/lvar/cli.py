"""Batch CLI: scenario files in, result documents (and optional figures) out.

Exit codes: 0 success, 2 schema error, 3 contract or domain error, 4 numeric
non-convergence. Outputs are written atomically; errors go to stderr as a
JSON document with a machine-readable reason and never leave partial output
behind.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

from .ambiguity import (PhiBall, invertible_curve, robust_lambda_var,
                        worst_case_capacity)
from .core import Capacity
from .divergence import transform_lambda
from .errors import LvarError, SchemaError
from .lambdavar import lambda_var, lambda_var_plus
from .oracle import (GridSpec, brute_comonotone, brute_inf_convolution,
                     brute_lambda_var, brute_sup_over_ball)
from .risksharing import (SharingResult, comonotone_inf_convolution,
                          inf_convolution, robust_sharing)
from .scenario import Scenario, build_curve, load_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lvar",
        description="Scenario-based Lambda VaR, robust evaluation, and risk sharing")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
            ("eval", "Lambda VaR and its upper version under a capacity"),
            ("robust", "worst-case Lambda VaR over an ambiguity set"),
            ("share", "inf-convolution risk sharing with optimal allocations"),
            ("como_share", "comonotonic risk sharing"),
            ("curve", "worst-case distortion curve as (x, g(x)) CSV")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--scenario", required=True, help="scenario JSON path")
        cmd.add_argument("--out", help="output path (default: stdout)")
        cmd.add_argument("--format", choices=("json", "csv"),
                         help="output format (curve defaults to csv)")
        cmd.add_argument("--oracle", action="store_true",
                         help="run brute-force cross-checks and report deltas")
        cmd.add_argument("--grid-x", type=float, dest="grid_x",
                         help="x resolution override (also the curve grid)")
        cmd.add_argument("--grid-y", type=float, dest="grid_y",
                         help="y resolution override")
        cmd.add_argument("--samples", type=int, help="oracle sample count")
        cmd.add_argument("--seed", type=int, help="oracle seed override")
        cmd.add_argument("--figure", help="render a matplotlib figure here "
                                          "(curve and sharing commands)")
    return parser


def _grid_spec(scenario: Scenario, args, need_seed: bool) -> GridSpec:
    grid = dict(scenario.grid)
    if args.grid_x is not None:
        grid["x_resolution"] = args.grid_x
    if args.grid_y is not None:
        grid["y_resolution"] = args.grid_y
    if args.samples is not None:
        grid["sample_count"] = args.samples
    if args.seed is not None:
        grid["seed"] = args.seed
    if need_seed and "seed" not in grid:
        raise SchemaError("oracle runs require an explicit seed "
                          "(scenario grid.seed or --seed)")
    known = {k: grid[k] for k in
             ("x_resolution", "y_resolution", "sample_count", "seed") if k in grid}
    return GridSpec(**known)


def _require(value, name: str):
    if value is None:
        raise SchemaError(f"this command needs the scenario field {name!r}")
    return value


def _sharing_doc(result: SharingResult, labels: list[str],
                 outcome_labels: tuple[str, ...]) -> dict:
    doc: dict = {
        "value": result.value,
        "x_star": result.x_star,
        "attained": result.attained,
        "metadata": _plain(result.metadata),
    }
    if result.y_star is not None:
        doc["y_star"] = list(result.y_star)
    if result.partition is not None:
        doc["partition"] = {label: list(ev.member_labels)
                            for label, ev in zip(labels, result.partition)}
    if result.allocations is not None:
        doc["allocations"] = {label: list(rv.values)
                              for label, rv in zip(labels, result.allocations)}
    if result.certificate is not None:
        doc["certificate"] = [
            {"agent": label, "w_tail_cell": w, "lambda_at_y": lv}
            for label, (w, lv) in zip(labels, result.certificate)]
    return doc


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _run_eval(scenario: Scenario, args) -> dict:
    x = _require(scenario.x, "X")
    lam = _require(scenario.lam, "lambda")
    w = _require(scenario.capacity, "capacity")
    doc = {
        "command": "eval",
        "value": lambda_var(w, lam, x),
        "plus_value": lambda_var_plus(w, lam, x),
    }
    if args.oracle:
        grid = _grid_spec(scenario, args, need_seed=True)
        oracle_value = brute_lambda_var(w, lam, x, grid)
        doc["oracle"] = {
            "value": oracle_value,
            "delta": _delta(oracle_value, doc["value"]),
            "bound": f"within x_resolution={grid.x_resolution}",
        }
    return doc


def _run_robust(scenario: Scenario, args) -> dict:
    x = _require(scenario.x, "X")
    lam = _require(scenario.lam, "lambda")
    ambiguity = _require(scenario.ambiguity, "ambiguity")
    value = robust_lambda_var(ambiguity, lam, x)
    routes: dict = {"worst_case_capacity": value, "transformed_lambda": None}
    pair = invertible_curve(ambiguity)
    if pair is not None and lam.in_open_unit:
        curve, base = pair
        routes["transformed_lambda"] = lambda_var(
            Capacity.from_measure(base), transform_lambda(curve, lam), x)
    doc = {"command": "robust", "value": value, "routes": routes,
           "lambda_touches_one": not lam.in_open_unit}
    if args.oracle:
        grid = _grid_spec(scenario, args, need_seed=True)
        lower = brute_sup_over_ball(ambiguity, lam, x, grid)
        doc["oracle"] = {"sampled_lower_bound": lower,
                         "delta": _delta(value, lower),
                         "direction": "sampled <= robust"}
    return doc


def _run_share(scenario: Scenario, args) -> dict:
    x = _require(scenario.x, "X")
    if scenario.agents and scenario.robust_agents:
        raise SchemaError("share scenarios cannot mix capacity and ambiguity agents")
    if scenario.robust_agents:
        labels = [a.label for a in scenario.robust_agents]
        result = robust_sharing(scenario.robust_agents, x)
    elif scenario.agents:
        labels = [a.label for a in scenario.agents]
        result = inf_convolution(scenario.agents, x)
    else:
        raise SchemaError("share scenarios need an agent list")
    doc = {"command": "share",
           **_sharing_doc(result, labels, scenario.space.labels)}
    if args.oracle:
        grid = _grid_spec(scenario, args, need_seed=True)
        if scenario.robust_agents:
            from .risksharing import Agent
            agents = [Agent(ra.label, ra.lam, worst_case_capacity(ra.ambiguity))
                      for ra in scenario.robust_agents]
        else:
            agents = scenario.agents
        brute = brute_inf_convolution(agents, x, grid)
        doc["oracle"] = {"brute_value": brute,
                         "delta": _delta(brute, result.value),
                         "direction": "brute >= value, within n*y_resolution"}
    return doc


def _run_como(scenario: Scenario, args) -> dict:
    x = _require(scenario.x, "X")
    if not scenario.agents:
        raise SchemaError("como_share scenarios need capacity agents")
    labels = [a.label for a in scenario.agents]
    result = comonotone_inf_convolution(scenario.agents, x)
    doc = {"command": "como_share",
           **_sharing_doc(result, labels, scenario.space.labels)}
    if args.oracle:
        grid = _grid_spec(scenario, args, need_seed=True)
        brute = brute_comonotone(scenario.agents, x, grid)
        doc["oracle"] = {"brute_value": brute,
                         "delta": _delta(brute, result.value),
                         "direction": "brute from the restricted split family"}
    return doc


def _delta(a: float, b: float) -> float:
    if math.isinf(a) or math.isinf(b):
        return 0.0 if a == b else math.inf
    return a - b


def _run_curve(scenario: Scenario, args):
    ambiguity = _require(scenario.ambiguity, "ambiguity")
    if not isinstance(ambiguity, PhiBall):
        raise SchemaError("curve scenarios need a phi_ball ambiguity set")
    resolution = args.grid_x or scenario.resolution or 1e-2
    points = build_curve(ambiguity, resolution)
    if args.figure:
        from .plots import render_curve
        render_curve(points, args.figure,
                     title=f"{ambiguity.phi.kind}, delta={ambiguity.delta}")
    if (args.format or "csv") == "csv":
        lines = ["x,g"] + [f"{x!r},{g!r}" for x, g in points]
        return "\n".join(lines) + "\n"
    return {"command": "curve", "points": [[x, g] for x, g in points]}


def _maybe_render_sharing(doc: dict, scenario: Scenario, args):
    if not args.figure:
        return
    allocations = doc.get("allocations")
    if not allocations:
        raise SchemaError("no allocation available to render")
    from .plots import render_allocations
    labels = list(allocations.keys())
    render_allocations(labels, list(scenario.space.labels),
                       [allocations[label] for label in labels], args.figure)


def _emit(payload, args) -> None:
    if isinstance(payload, dict):
        if args.format == "csv":
            payload = _tabular(payload)
        else:
            payload = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        directory = os.path.dirname(os.path.abspath(args.out))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lvar-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(payload)
            os.replace(tmp, args.out)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    else:
        sys.stdout.write(payload)


def _tabular(doc: dict) -> str:
    """CSV rendering for sharing documents: one row per agent and outcome."""
    allocations = doc.get("allocations")
    if not allocations:
        raise SchemaError("csv output is limited to curves and allocation dumps")
    lines = ["agent,outcome,value"]
    for label, values in allocations.items():
        for i, v in enumerate(values):
            lines.append(f"{label},{i},{v!r}")
    return "\n".join(lines) + "\n"


_RUNNERS = {
    "eval": _run_eval,
    "robust": _run_robust,
    "share": _run_share,
    "como_share": _run_como,
    "curve": _run_curve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        if scenario.command != args.command:
            raise SchemaError(
                f"scenario command {scenario.command!r} does not match "
                f"subcommand {args.command!r}")
        if args.figure and args.command in ("eval", "robust"):
            raise SchemaError(f"{args.command} has no figure output")
        payload = _RUNNERS[args.command](scenario, args)
        if args.command in ("share", "como_share") and isinstance(payload, dict):
            _maybe_render_sharing(payload, scenario, args)
        _emit(payload, args)
        return 0
    except LvarError as exc:
        error_doc = {"error": {"code": type(exc).__name__,
                               "reason": exc.reason,
                               "details": _plain(exc.details)}}
        sys.stderr.write(json.dumps(error_doc, sort_keys=True, default=str) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
