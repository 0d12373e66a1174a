"""Scenario files: a single JSON document describing a space, measures,
variables, Lambda functions, capacities or ambiguity sets, agents, and
exactly one command.

Named references ("base": "P", "X": "X0") resolve against the top-level
reference measure, the ``measures`` table, and the ``variables`` table;
broken references are schema errors, not contract errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .ambiguity import AmbiguitySet, LikelihoodBand, PhiBall
from .core import Capacity, FiniteSpace, ProbabilityMeasure, RandomVariable
from .divergence import DistortionCurve, PhiFn
from .errors import LvarError, SchemaError
from .lambdavar import LambdaFn
from .risksharing import Agent, RobustAgent

SCHEMA_VERSION = 1
COMMANDS = ("eval", "robust", "share", "como_share", "curve")


@dataclass
class Scenario:
    """Parsed scenario; agent entries keep capacity/ambiguity flavors apart."""

    command: str
    space: FiniteSpace
    measures: dict[str, ProbabilityMeasure]
    variables: dict[str, RandomVariable]
    x: RandomVariable | None
    lam: LambdaFn | None
    capacity: Capacity | None
    ambiguity: AmbiguitySet | None
    agents: list[Agent]
    robust_agents: list[RobustAgent]
    grid: dict[str, Any] = field(default_factory=dict)
    resolution: float | None = None
    raw: dict = field(default_factory=dict)


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise SchemaError(f"cannot read scenario file: {exc}")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scenario is not valid JSON: {exc}")
    return parse_scenario(doc)


def parse_scenario(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise SchemaError("scenario must be a JSON object")
    version = doc.get("version")
    if version is None:
        raise SchemaError("scenario is missing the schema version field")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {version!r}")
    command = doc.get("command")
    if command not in COMMANDS:
        raise SchemaError(f"command must be one of {COMMANDS}, got {command!r}")
    try:
        return _parse_body(command, doc)
    except LvarError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise SchemaError(f"malformed scenario: {exc}")


def _parse_body(command: str, doc: dict) -> Scenario:
    outcomes = doc.get("outcomes")
    if command != "curve" and not outcomes:
        raise SchemaError("scenario is missing the outcome list")
    space = FiniteSpace(tuple(str(o) for o in outcomes)) if outcomes else \
        FiniteSpace(("w0",))

    measures: dict[str, ProbabilityMeasure] = {}
    if "P" in doc:
        measures["P"] = ProbabilityMeasure(space, tuple(doc["P"]))
    for name, weights in doc.get("measures", {}).items():
        measures[name] = ProbabilityMeasure(space, tuple(weights))

    variables: dict[str, RandomVariable] = {}
    for name, values in doc.get("variables", {}).items():
        variables[name] = RandomVariable(space, tuple(values))

    def resolve_variable(ref, what: str) -> RandomVariable:
        if isinstance(ref, str):
            if ref not in variables:
                raise SchemaError(f"{what} references unknown variable {ref!r}")
            return variables[ref]
        return RandomVariable(space, tuple(ref))

    def resolve_measure(ref, what: str) -> ProbabilityMeasure:
        if isinstance(ref, str):
            if ref not in measures:
                raise SchemaError(f"{what} references unknown measure {ref!r}")
            return measures[ref]
        return ProbabilityMeasure(space, tuple(ref))

    def parse_capacity(spec: dict) -> Capacity:
        kind = spec.get("kind")
        if kind == "measure":
            return Capacity.from_measure(resolve_measure(spec["base"], "capacity"))
        if kind == "distortion":
            ball = _parse_phi_ball(spec, resolve_measure)
            return Capacity.distortion(ball.curve(), ball.base,
                                       label=f"distortion({ball.phi.kind})")
        if kind == "sup_of_measures":
            return Capacity.sup_of([resolve_measure(m, "capacity")
                                    for m in spec["measures"]])
        if kind == "expectation_cap":
            return Capacity.expectation_cap(
                resolve_variable(spec["Y"], "capacity"),
                resolve_measure(spec["base"], "capacity"))
        if kind == "table":
            return Capacity.from_table(space, [float(v) for v in spec["values"]])
        raise SchemaError(f"unknown capacity kind {kind!r}")

    def parse_ambiguity(spec: dict) -> AmbiguitySet:
        kind = spec.get("kind")
        if kind == "phi_ball":
            return _parse_phi_ball(spec, resolve_measure)
        if kind == "band":
            return LikelihoodBand(
                resolve_variable(spec["Y1"], "ambiguity"),
                resolve_variable(spec["Y2"], "ambiguity"),
                resolve_measure(spec.get("base", "P"), "ambiguity"))
        raise SchemaError(f"unknown ambiguity kind {kind!r}")

    x = resolve_variable(doc["X"], "X") if "X" in doc else None
    lam = LambdaFn.from_json(doc["lambda"]) if "lambda" in doc else None
    capacity = parse_capacity(doc["capacity"]) if "capacity" in doc else None
    ambiguity = parse_ambiguity(doc["ambiguity"]) if "ambiguity" in doc else None

    agents: list[Agent] = []
    robust_agents: list[RobustAgent] = []
    for idx, entry in enumerate(doc.get("agents", [])):
        label = str(entry.get("label", f"agent{idx}"))
        entry_lam = LambdaFn.from_json(entry["lambda"])
        if "capacity" in entry and "ambiguity" in entry:
            raise SchemaError(f"agent {label!r} mixes capacity and ambiguity")
        if "capacity" in entry:
            agents.append(Agent(label, entry_lam, parse_capacity(entry["capacity"])))
        elif "ambiguity" in entry:
            robust_agents.append(
                RobustAgent(label, entry_lam, parse_ambiguity(entry["ambiguity"])))
        else:
            raise SchemaError(f"agent {label!r} has neither capacity nor ambiguity")

    grid = dict(doc.get("grid", {}))
    resolution = doc.get("resolution")
    return Scenario(command, space, measures, variables, x, lam, capacity,
                    ambiguity, agents, robust_agents, grid, resolution, doc)


def _parse_phi_ball(spec: dict, resolve_measure) -> PhiBall:
    phi_name = spec.get("phi")
    if phi_name == "kl":
        phi = PhiFn.kl()
    elif phi_name == "alpha":
        phi = PhiFn.alpha(float(spec["alpha"]))
    elif phi_name == "chi_squared":
        phi = PhiFn.chi_squared()
    elif phi_name == "band":
        phi = PhiFn.band(float(spec["k1"]), float(spec["k2"]))
    else:
        raise SchemaError(f"unknown phi kind {phi_name!r}")
    delta = float(spec.get("delta", 1.0))
    return PhiBall(phi, delta, resolve_measure(spec.get("base", "P"), "phi ball"))


def build_curve(ball: PhiBall, resolution: float) -> list[tuple[float, float]]:
    """(x, g(x)) samples of the worst-case distortion on a uniform grid."""
    if resolution <= 0.0 or resolution > 0.5:
        raise SchemaError("curve resolution must lie in (0, 0.5]")
    curve = DistortionCurve.build(ball.phi, ball.delta)
    steps = int(round(1.0 / resolution))
    return [(k * resolution if k < steps else 1.0,
             curve(min(1.0, k * resolution))) for k in range(steps + 1)]
