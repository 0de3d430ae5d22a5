"""Run scripted multi-replica scenarios under many delivery schedules.

A scenario file is JSON::

    {"name": ..., "element": "rich" | "recipe" | "slides",
     "replicas": ["A", "B", "C"],
     "script": [{"at": "A", "op": "type", "index": 0, "text": "hi"},
                {"sync": true}, ...],
     "schedules": {"exhaustive": true, "random": 3}}

Operations issued between two ``sync`` steps are concurrent. At a sync every
replica receives all pending messages, in an order picked by the schedule.
Index arguments are resolved against the issuing replica's list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Any

from ..codec import dumps, encode_elements
from ..elements import Ingredient, RichChar, Vec2
from ..foreach_list import InnerList, InsertAt
from ..oracle import History, expected_document
from ..positions import POS_INF
from ..simulator import ExhaustiveChooser, Network, RandomChooser
from .builders import (
    CLOSED,
    HALF_OPEN,
    clockwise,
    rich_text_bold,
    rich_text_delete_range,
    rotate_group,
    scale_recipe,
    translate_object,
)


class ScenarioError(ValueError):
    pass


def available() -> list[str]:
    data = resources.files(__package__) / "data"
    return sorted(
        p.name[: -len(".json")]
        for p in data.iterdir()
        if p.name.endswith(".json") and not p.name.endswith(".golden.json")
    )


def load(name: str) -> dict:
    path = resources.files(__package__) / "data" / f"{name}.json"
    if not path.is_file():
        raise ScenarioError(f"unknown scenario {name!r}")
    return json.loads(path.read_text(encoding="utf-8"))


def load_golden(name: str) -> dict | None:
    path = resources.files(__package__) / "data" / f"{name}.golden.json"
    if not path.is_file():
        return None
    return json.loads(path.read_text(encoding="utf-8"))


# rendering


def render(kind: str, elements, labels: dict | None = None) -> Any:
    values = [s for _, s in elements]
    if kind == "rich":
        return render_rich(values)
    if kind == "recipe":
        return [
            {"name": ing.name.value, "amount": str(ing.amount.value), "unit": ing.amount.unit}
            for ing in values
        ]
    if kind == "slides":
        labels = labels or {}
        out = []
        for p, obj in elements:
            x, y = object_position(obj)
            out.append({"object": labels.get(str(p), str(p)), "x": str(x), "y": str(y)})
        return out
    raise ScenarioError(f"unknown element kind {kind!r}")


def render_rich(chars: list[RichChar]) -> dict:
    text = "".join(c.char for c in chars)
    markup = []
    bold = False
    for c in chars:
        now = c.attrs.get("bold") is True
        if now != bold:
            markup.append("**")
            bold = now
        markup.append(c.char)
    if bold:
        markup.append("**")
    return {"text": text, "markup": "".join(markup)}


def object_position(obj: InnerList) -> tuple[Fraction, Fraction]:
    """Sum of an object's translation vectors."""
    x = sum((v.x for v in obj.values()), Fraction(0))
    y = sum((v.y for v in obj.values()), Fraction(0))
    return x, y


# execution


@dataclass
class ScenarioRun:
    net: Network
    labels: dict[str, str] = field(default_factory=dict)
    traffic: list[dict] = field(default_factory=list)

    def snapshots(self) -> dict[str, str]:
        return {r: dumps(encode_elements(self.net[r].elements())) for r in self.net.ids}


def _end_bound(rep, j):
    return rep.position_at(j) if j < len(rep) else POS_INF


def _step(net: Network, step: dict, kind: str, labels: dict) -> None:
    rep = net[step["at"]]
    op = step["op"]
    sent = []
    if op == "type":
        for offset, ch in enumerate(step["text"]):
            sent.append(rep.insert(step["index"] + offset, RichChar(ch)))
    elif op == "format":
        i, j = step["start"], step["end"]
        mode = step.get("mode", HALF_OPEN)
        end = _end_bound(rep, j) if mode == HALF_OPEN else rep.position_at(j - 1)
        f = rich_text_bold(rep.position_at(i), end, mode, step.get("key", "bold"), step.get("value", True))
        sent = rep.for_each_prior(f) if step.get("prior") else [rep.for_each(f)]
    elif op == "delete_range":
        i, j = step["start"], step["end"]
        start = rep.position_at(i) if i < len(rep) else POS_INF
        f = rich_text_delete_range(start, _end_bound(rep, j))
        sent = rep.for_each_prior(f) if step.get("prior") else [rep.for_each(f)]
    elif op == "add_ingredient":
        ing = Ingredient.new(step["name"], Fraction(step["amount"]), step.get("unit", ""))
        sent.append(rep.insert(step.get("index", len(rep)), ing))
    elif op == "scale":
        f = scale_recipe(Fraction(step["factor"]))
        sent = rep.for_each_prior(f) if step.get("prior") else [rep.for_each(f)]
    elif op == "add_object":
        env = rep.insert(step.get("index", len(rep)), InnerList())
        sent.append(env)
        labels[str(env.payload.p)] = step.get("label", str(env.payload.p))
        sent.append(rep.apply_at(env.payload.p, InsertAt(Vec2(Fraction(step["x"]), Fraction(step["y"])))))
    elif op == "translate":
        p = rep.position_at(step["object"])
        sent.append(translate_object(rep, p, Vec2(Fraction(step["dx"]), Fraction(step["dy"]))))
    elif op == "rotate_group":
        objects = [rep.position_at(i) for i in step["objects"]]
        f = rotate_group(objects, clockwise(step["degrees"]).matrix)
        sent = rep.for_each_prior(f) if step.get("prior") else [rep.for_each(f)]
    else:
        raise ScenarioError(f"unknown scenario op {op!r}")
    net.broadcast(sent)
    return len(sent)


def run(scenario: dict, chooser) -> ScenarioRun:
    net = Network(scenario["replicas"])
    result = ScenarioRun(net)
    kind = scenario["element"]
    for step in scenario["script"]:
        if step.get("sync"):
            net.flush(chooser)
        else:
            n = _step(net, step, kind, result.labels)
            result.traffic.append({"at": step["at"], "op": step["op"], "envelopes": n})
    net.flush(chooser)
    net.check_exactly_once()
    return result


def oracle_outcome(scenario: dict, result: ScenarioRun) -> dict:
    """Expected rendering and snapshot, derived from the history by the oracle."""
    doc = expected_document(History(result.net.sent))
    return {
        "render": render(scenario["element"], doc, result.labels),
        "elements": encode_elements(doc),
    }


@dataclass
class ScenarioReport:
    name: str
    schedules: int
    counts: dict
    traffic: list
    render: Any
    converged: bool
    oracle_match: bool
    golden_match: bool | None
    same_history: bool
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.converged and self.oracle_match and self.golden_match is not False and self.same_history

    def to_json(self) -> dict:
        return {
            "scenario": self.name,
            "schedules": self.schedules,
            "counts": self.counts,
            "traffic": self.traffic,
            "render": self.render,
            "converged": self.converged,
            "oracle_match": self.oracle_match,
            "golden_match": self.golden_match,
            "same_history": self.same_history,
            "problems": self.problems,
            "verdict": "PASS" if self.ok else "FAIL",
        }


def all_runs(scenario: dict, seed: int = 0) -> list[ScenarioRun]:
    plan = scenario.get("schedules", {"exhaustive": True})
    runs = []
    if plan.get("exhaustive"):
        chooser = ExhaustiveChooser(limit=plan.get("limit", 2000))
        while chooser.start_run():
            runs.append(run(scenario, chooser))
    for k in range(plan.get("random", 0)):
        runs.append(run(scenario, RandomChooser(f"{seed}/{k}")))
    if not runs:
        raise ScenarioError(f"scenario {scenario['name']!r} lists no schedules")
    return runs


def check(scenario: dict, seed: int = 0, golden: dict | None = None) -> tuple[ScenarioReport, list[ScenarioRun]]:
    runs = all_runs(scenario, seed)
    problems = []
    first = runs[0]
    expected = oracle_outcome(scenario, first)
    expected_snap = dumps(expected["elements"])
    history = dumps(sorted(str(e.dot) + repr(e.payload) for e in first.net.sent))
    converged = oracle_match = same_history = True
    for n, result in enumerate(runs):
        if dumps(sorted(str(e.dot) + repr(e.payload) for e in result.net.sent)) != history:
            same_history = False
            problems.append(f"schedule {n}: different history")
        for r, snap in result.snapshots().items():
            if snap != first.snapshots()[r] or snap != first.snapshots()[first.net.ids[0]]:
                converged = False
                problems.append(f"schedule {n}: replica {r} diverged")
            if snap != expected_snap:
                oracle_match = False
                problems.append(f"schedule {n}: replica {r} differs from oracle")
    golden_match = None
    if golden is not None:
        golden_match = golden == json.loads(dumps(expected))
        if not golden_match:
            problems.append("oracle outcome differs from golden file")
    final = render(scenario["element"], first.net[first.net.ids[0]].elements(), first.labels)
    report = ScenarioReport(
        scenario["name"], len(runs), first.net.counts(), first.traffic, final,
        converged, oracle_match, golden_match, same_history, problems,
    )
    return report, runs
