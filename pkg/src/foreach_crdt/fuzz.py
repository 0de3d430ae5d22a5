"""Randomized convergence testing against the oracle."""

from __future__ import annotations

import math
import random
import string
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

from .codec import snapshot
from .elements import AmountMult, AttrSet, Ingredient, NameSet, RichChar, Vec2, Vec2Mult
from .foreach_list import (
    DEL,
    NULL,
    All,
    Apply,
    Closed,
    ForEachList,
    Gate,
    HalfOpen,
    IdSet,
    InnerList,
    InsertAt,
    MutationFn,
    NestedForEach,
)
from .oracle import History, check_convergence, precedes
from .positions import NEG_INF, POS_INF
from .runlog import log_lines
from .simulator import Network, RandomChooser, random_causal_order

WORKLOADS = ("rich", "recipe", "slides")
FOREACH_SHARE = 0.3
OTHER_WEIGHTS = {"insert": 0.55, "delete": 0.12, "apply": 0.33}


def replica_names(n: int) -> list[str]:
    if n <= 26:
        return list(string.ascii_uppercase[:n])
    return [f"R{i:03d}" for i in range(n)]


# Workloads: how to build random element states and operations.


class RichText:
    name = "rich"
    _values = {"bold": [True, False], "italic": [True, False], "color": ["red", "blue", None]}

    def initial(self, rng, replica):
        return RichChar(rng.choice(string.ascii_lowercase))

    def pure_op(self, rng, replica):
        key = rng.choice(sorted(self._values))
        return AttrSet(key, rng.choice(self._values[key]))

    def op(self, rng, replica, sigma):
        return self.pure_op(rng, replica)


class Recipe:
    name = "recipe"
    _factors = [Fraction(2), Fraction(3), Fraction(1, 2), Fraction(2, 3), Fraction(5, 4)]
    _names = ["flour", "sugar", "eggs", "milk", "salt", "butter"]

    def initial(self, rng, replica):
        return Ingredient.new(rng.choice(self._names), Fraction(rng.randint(1, 12), rng.randint(1, 4)), "g")

    def pure_op(self, rng, replica):
        if rng.random() < 0.75:
            return AmountMult(rng.choice(self._factors))
        return NameSet(rng.choice(self._names))

    def op(self, rng, replica, sigma):
        return self.pure_op(rng, replica)


# Rotation-scalings [[a, b], [-b, a]] commute with each other.
_TURNS = [
    Vec2Mult(((0, 1), (-1, 0))),
    Vec2Mult(((-1, 0), (0, -1))),
    Vec2Mult(((2, 0), (0, 2))),
    Vec2Mult(((Fraction(3, 5), Fraction(4, 5)), (Fraction(-4, 5), Fraction(3, 5)))),
]


class Slides:
    name = "slides"

    def initial(self, rng, replica):
        return InnerList()

    def _inner_fn(self, rng, sigma=None):
        pred = All()
        if sigma is not None and sigma.elts and rng.random() < 0.4:
            pred = IdSet(frozenset(rng.sample([e.p for e in sigma.elts], k=1)))
        r = rng.random()
        if r < 0.85:
            instr = Apply(rng.choice(_TURNS))
        elif r < 0.95 and isinstance(pred, IdSet):
            instr = DEL
        else:
            instr = NULL
        return MutationFn(pred, rng.choice(list(Gate)), instr)

    def pure_op(self, rng, replica):
        return NestedForEach(self._inner_fn(rng))

    def op(self, rng, replica, sigma):
        if rng.random() < 0.85:
            vec = Vec2(rng.randint(-5, 5), rng.randint(-5, 5))
            index = rng.randint(0, len(sigma.elts)) if rng.random() < 0.3 else None
            return InsertAt(vec, index)
        return NestedForEach(self._inner_fn(rng, sigma))


def workload(name: str):
    return {"rich": RichText, "recipe": Recipe, "slides": Slides}[name]()


def random_mutation(rng: random.Random, replica: ForEachList, load) -> MutationFn:
    bounds = [NEG_INF] + replica.positions() + [POS_INF]
    i, j = sorted(rng.sample(range(len(bounds)), 2))
    r = rng.random()
    if r < 0.25:
        pred = All()
    elif r < 0.6:
        pred = HalfOpen(bounds[i], bounds[j])
    elif r < 0.8:
        pred = Closed(bounds[i], bounds[j])
    else:
        ps = replica.positions()
        pred = IdSet(frozenset(rng.sample(ps, k=rng.randint(0, len(ps))) if ps else ()))
    r = rng.random()
    if r < 0.82:
        instr = Apply(load.pure_op(rng, replica.replica_id))
    elif r < 0.92 and not isinstance(pred, All):
        instr = DEL
    else:
        instr = NULL
    gate = rng.choice([Gate.ANY, Gate.ANY, Gate.PRIOR_ONLY, Gate.CONCURRENT_ONLY])
    return MutationFn(pred, gate, instr)


@dataclass
class FuzzConfig:
    ops: int = 200
    replicas: int = 4
    seed: int = 0
    schedules: int = 10
    foreach: bool = True
    skip_buffer: bool = False
    workload: str | None = None

    def __post_init__(self):
        if self.ops < 1:
            raise ValueError("ops must be at least 1")
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if self.schedules < 0:
            raise ValueError("schedules must be non-negative")
        if self.workload is not None and self.workload not in WORKLOADS:
            raise ValueError(f"unknown workload {self.workload!r}")

    def factory(self):
        return partial(ForEachList, skip_buffer=self.skip_buffer)


def op_deck(cfg: FuzzConfig, rng: random.Random) -> list[str]:
    n_foreach = math.ceil(cfg.ops * FOREACH_SHARE) if cfg.foreach else 0
    kinds = list(OTHER_WEIGHTS)
    rest = rng.choices(kinds, weights=[OTHER_WEIGHTS[k] for k in kinds], k=cfg.ops - n_foreach)
    deck = ["foreach"] * n_foreach + rest
    rng.shuffle(deck)
    return deck


def generate(cfg: FuzzConfig, seed: int | None = None) -> Network:
    """Run ``cfg.ops`` random user operations with random partial delivery, then flush."""
    seed = cfg.seed if seed is None else seed
    rng = random.Random(seed)
    load = workload(cfg.workload or WORKLOADS[seed % len(WORKLOADS)])
    net = Network(replica_names(cfg.replicas), cfg.factory())
    chooser = RandomChooser(rng)
    for kind in op_deck(cfg, rng):
        for _ in range(rng.randrange(4)):
            target = rng.choice(net.ids)
            net.deliver_one(target, chooser)
        rep = net[rng.choice(net.ids)]
        if kind in ("delete", "apply") and not len(rep):
            kind = "insert"
        if kind == "insert":
            env = rep.insert(rng.randint(0, len(rep)), load.initial(rng, rep.replica_id))
        elif kind == "delete":
            env = rep.delete(rng.randrange(len(rep)))
        elif kind == "apply":
            i = rng.randrange(len(rep))
            env = rep.apply(i, load.op(rng, rep.replica_id, rep.values()[i]))
        else:
            env = rep.for_each(random_mutation(rng, rep, load))
        net.broadcast(env)
    net.flush(chooser)
    net.check_exactly_once()
    return net


def random_schedules(h: History, replica_ids, count: int, rng: random.Random) -> list[dict]:
    return [{r: random_causal_order(h.envelopes, rng) for r in replica_ids} for _ in range(count)]


@dataclass
class FuzzResult:
    seed: int
    workload: str
    counts: dict
    converged: bool
    oracle_match: bool
    diffs: dict = field(default_factory=dict)
    log: list[str] | None = None

    @property
    def ok(self) -> bool:
        return self.converged and self.oracle_match

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "workload": self.workload,
            "counts": self.counts,
            "converged": self.converged,
            "oracle_match": self.oracle_match,
            "verdict": "PASS" if self.ok else "FAIL",
        }


def fuzz_one(cfg: FuzzConfig, seed: int, keep_log: bool = False) -> FuzzResult:
    net = generate(cfg, seed)
    h = History(net.sent)
    rng = random.Random(f"schedules/{seed}")
    schedules = random_schedules(h, net.ids, cfg.schedules, rng)
    live = {f"run/{r}": net[r].elements() for r in net.ids}
    report = check_convergence(h, schedules, cfg.factory(), extra=live)
    name = cfg.workload or WORKLOADS[seed % len(WORKLOADS)]
    result = FuzzResult(seed, name, net.counts(), report.converged, report.oracle_match, report.diffs)
    if keep_log or not result.ok:
        snaps = {r: net[r].elements() for r in net.ids}
        meta = {"seed": seed, "workload": name, "skip_buffer": cfg.skip_buffer}
        result.log = log_lines(net.ids, net.events, snaps, meta)
    return result


def _fails(h: History, ids, cfg: FuzzConfig, seed: int) -> bool:
    rng = random.Random(f"minimize/{seed}")
    schedules = random_schedules(h, ids, max(cfg.schedules, 2), rng)
    return not check_convergence(h, schedules, cfg.factory()).ok


def minimize(h: History, ids, cfg: FuzzConfig, seed: int) -> History:
    """Drop causally maximal envelopes one at a time while the failure persists."""
    current = list(h.envelopes)
    changed = True
    while changed:
        changed = False
        for env in sorted(current, key=lambda e: -e.vc.total()):
            if any(precedes(env, other) for other in current):
                continue
            trial = [e for e in current if e.dot != env.dot]
            if trial and _fails(History(trial), ids, cfg, seed):
                current = trial
                changed = True
    return History(current)


def minimized_log(cfg: FuzzConfig, seed: int, h: History, ids) -> list[str]:
    small = minimize(h, ids, cfg, seed)
    rng = random.Random(f"minimize/{seed}")
    # Keep the first schedule that still shows the failure.
    for _ in range(50):
        schedule = random_schedules(small, ids, 1, rng)[0]
        replicas = {r: cfg.factory()(r) for r in ids}
        for r in ids:
            for dot in schedule[r]:
                replicas[r].receive(small.by_dot[dot])
        snaps = {r: rep.elements() for r, rep in replicas.items()}
        if len({snapshot(els) for els in snaps.values()}) > 1:
            break
    events: list[tuple] = [("send", e) for e in small.envelopes]
    for r in ids:
        events.extend(("deliver", r, d) for d in schedule[r])
    meta = {"seed": seed, "minimized": True, "skip_buffer": cfg.skip_buffer}
    return log_lines(ids, events, snaps, meta)


def fuzz(cfg: FuzzConfig, seeds=None) -> dict:
    """Fuzz every seed; the report is a pure function of the config."""
    seeds = [cfg.seed] if seeds is None else list(seeds)
    results = [fuzz_one(cfg, s) for s in seeds]
    failed = [r for r in results if not r.ok]
    totals: dict[str, int] = {}
    for r in results:
        for kind, n in r.counts.items():
            totals[kind] = totals.get(kind, 0) + n
    report = {
        "config": {
            "ops": cfg.ops,
            "replicas": cfg.replicas,
            "schedules": cfg.schedules,
            "seeds": seeds,
            "foreach": cfg.foreach,
            "skip_buffer": cfg.skip_buffer,
        },
        "runs": [r.to_json() for r in results],
        "counts": dict(sorted(totals.items())),
        "divergences": sum(not r.converged for r in results),
        "oracle_mismatches": sum(not r.oracle_match for r in results),
        "verdict": "FAIL" if failed else "PASS",
    }
    if failed:
        first = failed[0]
        net = generate(cfg, first.seed)
        report["failing_seed"] = first.seed
        report["diffs"] = first.diffs
        report["minimized_log"] = minimized_log(cfg, first.seed, History(net.sent), net.ids)
    return report
