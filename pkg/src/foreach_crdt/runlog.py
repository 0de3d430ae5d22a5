"""JSON-lines run logs and their replay.

A log is a sequence of lines, each one JSON object with sorted keys:

* ``{"log": {"replicas": [...], ...}}``: header, first line;
* an envelope object (``dot``, ``vc``, ``kind``, ``payload``), written when sent;
* ``{"deliver": {"replica": r, "sender": s, "clock": n}}``: one delivery,
  including the sender's own atomic delivery right after the envelope line;
* ``{"snapshot": {"replica": r, "elements": [...]}}``: final ``elements()``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Mapping, Sequence

from .causal import DeliveryError, Dot, Envelope
from .codec import CodecError, decode_envelope, dumps, encode_elements, encode_envelope
from .foreach_list import ForEachList


class LogError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def log_lines(
    replica_ids: Sequence[str],
    events: Iterable[tuple],
    snapshots: Mapping[str, Sequence[tuple]] | None = None,
    meta: Mapping | None = None,
) -> list[str]:
    """``events`` holds ``("send", env)`` and ``("deliver", replica, dot)`` tuples."""
    header = {"replicas": list(replica_ids), **(meta or {})}
    lines = [dumps({"log": header})]
    for event in events:
        if event[0] == "send":
            lines.append(dumps(encode_envelope(event[1])))
        else:
            _, replica, dot = event
            lines.append(dumps({"deliver": {"replica": replica, "sender": dot.sender, "clock": dot.clock}}))
    for replica, elements in sorted((snapshots or {}).items()):
        lines.append(dumps({"snapshot": {"replica": replica, "elements": encode_elements(elements)}}))
    return lines


def write_log(path, lines: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


@dataclass
class ParsedLog:
    meta: dict = field(default_factory=dict)
    envelopes: dict[Dot, Envelope] = field(default_factory=dict)
    deliveries: list[tuple[str, Dot, int]] = field(default_factory=list)
    snapshots: dict[str, str] = field(default_factory=dict)

    @property
    def replica_ids(self) -> list[str]:
        ids = self.meta.get("replicas")
        if ids:
            return list(ids)
        return sorted({r for r, _, _ in self.deliveries})


def parse_log(lines: Iterable[str]) -> ParsedLog:
    out = ParsedLog()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogError(lineno, f"invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise LogError(lineno, "expected a JSON object")
        try:
            if "log" in data:
                out.meta = dict(data["log"])
            elif "deliver" in data:
                d = data["deliver"]
                out.deliveries.append((str(d["replica"]), Dot(str(d["sender"]), int(d["clock"])), lineno))
            elif "snapshot" in data:
                s = data["snapshot"]
                out.snapshots[str(s["replica"])] = dumps(s["elements"])
            else:
                env = decode_envelope(data)
                if env.dot in out.envelopes:
                    raise LogError(lineno, f"envelope {env.dot} logged twice")
                out.envelopes[env.dot] = env
        except (CodecError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, LogError):
                raise
            raise LogError(lineno, f"malformed record ({exc})") from None
    return out


def read_log(path) -> ParsedLog:
    with open(path, encoding="utf-8") as fh:
        return parse_log(fh)


@dataclass
class ReplayResult:
    snapshots: dict[str, str]
    error: str | None = None
    unknown: list[str] = field(default_factory=list)
    mismatched: list[str] = field(default_factory=list)
    converged: bool = True

    @property
    def ok(self) -> bool:
        return self.error is None and not self.unknown and not self.mismatched and self.converged

    def to_json(self) -> dict:
        return {
            "verdict": "PASS" if self.ok else "FAIL",
            "error": self.error,
            "unknown_envelopes": self.unknown,
            "snapshot_mismatches": self.mismatched,
            "converged": self.converged,
            "snapshots": {r: json.loads(s) for r, s in sorted(self.snapshots.items())},
        }


def replay(log: ParsedLog, factory: Callable[[str], ForEachList] | None = None) -> ReplayResult:
    """Re-deliver the logged envelopes in the logged order on fresh replicas.

    Replicas that end up with the same delivered set must have equal
    snapshots; logged snapshots, if any, must be reproduced byte for byte.
    """
    if factory is None:
        factory = partial(ForEachList, skip_buffer=bool(log.meta.get("skip_buffer")))
    replicas = {r: factory(r) for r in log.replica_ids}
    result = ReplayResult({})
    for replica_id, dot, lineno in log.deliveries:
        env = log.envelopes.get(dot)
        if env is None:
            result.unknown.append(f"line {lineno}: {dot}")
            continue
        replica = replicas.get(replica_id)
        if replica is None:
            replica = replicas[replica_id] = factory(replica_id)
        try:
            replica.receive(env)
        except DeliveryError as exc:
            result.error = f"line {lineno}: {exc}"
            break
    result.snapshots = {r: dumps(encode_elements(rep.elements())) for r, rep in replicas.items()}
    by_clock: dict = {}
    for r, rep in replicas.items():
        by_clock.setdefault(rep.vc, set()).add(result.snapshots[r])
    result.converged = all(len(snaps) == 1 for snaps in by_clock.values())
    if result.error is None:
        for r, logged in sorted(log.snapshots.items()):
            if result.snapshots.get(r) != logged:
                result.mismatched.append(r)
    return result
