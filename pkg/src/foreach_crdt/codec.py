"""JSON wire format for envelopes, element states, operations and logs.

Every encoder returns plain JSON data; ``dumps`` fixes key order and
separators so equal values always serialize to equal bytes.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .causal import Dot, Envelope, VectorClock
from .crdt_list import ApplyPayload, DeletePayload, InsertPayload
from .elements import (
    Amount,
    AmountMult,
    AttrMap,
    AttrSet,
    Ingredient,
    NameSet,
    Register,
    RichChar,
    Vec2,
    Vec2Mult,
)
from .foreach_list import (
    DEL,
    NULL,
    All,
    Apply,
    BufferEntry,
    Closed,
    ForEachPayload,
    Gate,
    HalfOpen,
    IdSet,
    InnerElement,
    InnerInsert,
    InnerList,
    MutationFn,
    NestedForEach,
)
from .positions import Position, parse_bound


class CodecError(ValueError):
    pass


def dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _unfrac(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (TypeError, ValueError) as exc:
        raise CodecError(f"bad rational {text!r}") from exc


def encode_dot(dot: Dot | None):
    return None if dot is None else dot.to_json()


def decode_dot(data) -> Dot | None:
    if data is None:
        return None
    return Dot(str(data["sender"]), int(data["clock"]))


# element states


def encode_state(state, observable: bool = False) -> dict:
    """``observable=True`` drops the receipt-ordered inner buffers, which
    legitimately differ between converged replicas."""
    if isinstance(state, RichChar):
        return {"type": "rich_char", "char": state.char, "attrs": _encode_attrs(state.attrs)}
    if isinstance(state, Ingredient):
        return {
            "type": "ingredient",
            "name": _encode_register(state.name),
            "amount": encode_state(state.amount),
        }
    if isinstance(state, Amount):
        return {"type": "amount", "value": _frac(state.value), "unit": state.unit}
    if isinstance(state, Register):
        return {"type": "register", **_encode_register(state)}
    if isinstance(state, Vec2):
        return {"type": "vec2", "x": _frac(state.x), "y": _frac(state.y)}
    if isinstance(state, InnerList):
        data = {
            "type": "list",
            "elements": [
                {"p": str(e.p), "sigma": encode_state(e.sigma, observable), "t": e.t.to_json()}
                for e in state.elts
            ],
        }
        if not observable:
            data["buffer"] = [_encode_entry(b) for b in state.buffer]
        return data
    raise CodecError(f"cannot encode state {type(state).__name__}")


def decode_state(data: dict):
    kind = data.get("type")
    if kind == "rich_char":
        attrs = {k: _decode_register(v) for k, v in data["attrs"].items()}
        return RichChar(data["char"], AttrMap(attrs))
    if kind == "ingredient":
        return Ingredient(_decode_register(data["name"]), decode_state(data["amount"]))
    if kind == "amount":
        return Amount(_unfrac(data["value"]), data.get("unit", ""))
    if kind == "register":
        return _decode_register(data)
    if kind == "vec2":
        return Vec2(_unfrac(data["x"]), _unfrac(data["y"]))
    if kind == "list":
        elts = tuple(
            InnerElement(Position.parse(e["p"]), decode_state(e["sigma"]), decode_dot(e["t"]))
            for e in data["elements"]
        )
        return InnerList(elts, tuple(_decode_entry(b) for b in data.get("buffer", [])))
    raise CodecError(f"unknown state type {kind!r}")


def _encode_register(reg: Register) -> dict:
    return {"value": reg.value, "dot": encode_dot(reg.dot), "total": reg.total}


def _decode_register(data: dict) -> Register:
    return Register(data["value"], decode_dot(data.get("dot")), int(data.get("total", 0)))


def _encode_attrs(attrs: AttrMap) -> dict:
    return {k: _encode_register(r) for k, r in sorted(attrs.entries.items())}


def _encode_entry(entry: BufferEntry) -> dict:
    return {"f": encode_fn(entry.f), "u": entry.u.to_json(), "w": entry.w.to_json()}


def _decode_entry(data: dict) -> BufferEntry:
    return BufferEntry(decode_fn(data["f"]), decode_dot(data["u"]), VectorClock(data["w"]))


# operations


def encode_op(op) -> dict:
    if isinstance(op, AttrSet):
        return {"tag": "attr_set", "key": op.key, "value": op.value}
    if isinstance(op, NameSet):
        return {"tag": "name_set", "value": op.value}
    if isinstance(op, AmountMult):
        return {"tag": "amount_mult", "factor": _frac(op.factor)}
    if isinstance(op, Vec2Mult):
        return {"tag": "vec2_mult", "matrix": [[_frac(x) for x in row] for row in op.matrix]}
    if isinstance(op, NestedForEach):
        return {"tag": "nested_foreach", "f": encode_fn(op.f)}
    if isinstance(op, InnerInsert):
        return {"tag": "list_insert", "p": str(op.p), "sigma0": encode_state(op.sigma0)}
    raise CodecError(f"cannot encode operation {type(op).__name__}")


def decode_op(data: dict):
    tag = data.get("tag")
    if tag == "attr_set":
        return AttrSet(data["key"], data["value"])
    if tag == "name_set":
        return NameSet(data["value"])
    if tag == "amount_mult":
        return AmountMult(_unfrac(data["factor"]))
    if tag == "vec2_mult":
        (a, b), (c, d) = data["matrix"]
        return Vec2Mult(((_unfrac(a), _unfrac(b)), (_unfrac(c), _unfrac(d))))
    if tag == "nested_foreach":
        return NestedForEach(decode_fn(data["f"]))
    if tag == "list_insert":
        return InnerInsert(Position.parse(data["p"]), decode_state(data["sigma0"]))
    raise CodecError(f"unknown operation tag {tag!r}")


# mutation functions


def encode_fn(f: MutationFn) -> dict:
    pred = f.predicate
    if isinstance(pred, All):
        pdata = {"kind": "all"}
    elif isinstance(pred, HalfOpen):
        pdata = {"kind": "half_open", "start": str(pred.start), "end": str(pred.end)}
    elif isinstance(pred, Closed):
        pdata = {"kind": "closed", "start": str(pred.start), "endPrime": str(pred.end_prime)}
    elif isinstance(pred, IdSet):
        pdata = {"kind": "ids", "ids": sorted(str(p) for p in pred.ids)}
    else:
        raise CodecError(f"cannot encode predicate {type(pred).__name__}")
    instr = f.instruction
    if instr is DEL:
        idata = {"kind": "del"}
    elif instr is NULL:
        idata = {"kind": "null"}
    elif isinstance(instr, Apply):
        idata = {"kind": "apply", "op": encode_op(instr.op)}
    else:
        raise CodecError(f"cannot encode instruction {instr!r}")
    return {"predicate": pdata, "priorGate": f.gate.value, "instruction": idata}


def decode_fn(data: dict) -> MutationFn:
    pdata = data["predicate"]
    kind = pdata.get("kind")
    if kind == "all":
        pred = All()
    elif kind == "half_open":
        pred = HalfOpen(parse_bound(pdata["start"]), parse_bound(pdata["end"]))
    elif kind == "closed":
        pred = Closed(parse_bound(pdata["start"]), parse_bound(pdata["endPrime"]))
    elif kind == "ids":
        pred = IdSet(frozenset(Position.parse(p) for p in pdata["ids"]))
    else:
        raise CodecError(f"unknown predicate kind {kind!r}")
    idata = data["instruction"]
    ikind = idata.get("kind")
    if ikind == "del":
        instr = DEL
    elif ikind == "null":
        instr = NULL
    elif ikind == "apply":
        instr = Apply(decode_op(idata["op"]))
    else:
        raise CodecError(f"unknown instruction kind {ikind!r}")
    try:
        gate = Gate(data["priorGate"])
    except ValueError as exc:
        raise CodecError(f"unknown prior gate {data['priorGate']!r}") from exc
    return MutationFn(pred, gate, instr)


# envelopes


def encode_payload(payload) -> dict:
    if isinstance(payload, InsertPayload):
        return {"p": str(payload.p), "sigma0": encode_state(payload.sigma0)}
    if isinstance(payload, DeletePayload):
        return {"p": str(payload.p)}
    if isinstance(payload, ApplyPayload):
        return {"p": str(payload.p), "op": encode_op(payload.op)}
    if isinstance(payload, ForEachPayload):
        return {"f": encode_fn(payload.f)}
    raise CodecError(f"cannot encode payload {type(payload).__name__}")


def decode_payload(kind: str, data: dict):
    if kind == "insert":
        return InsertPayload(Position.parse(data["p"]), decode_state(data["sigma0"]))
    if kind == "delete":
        return DeletePayload(Position.parse(data["p"]))
    if kind == "apply":
        return ApplyPayload(Position.parse(data["p"]), decode_op(data["op"]))
    if kind == "foreach":
        return ForEachPayload(decode_fn(data["f"]))
    raise CodecError(f"unknown envelope kind {kind!r}")


def encode_envelope(env: Envelope) -> dict:
    return {
        "dot": env.dot.to_json(),
        "vc": env.vc.to_json(),
        "kind": env.kind,
        "payload": encode_payload(env.payload),
    }


def decode_envelope(data: dict) -> Envelope:
    try:
        return Envelope(
            decode_dot(data["dot"]),
            VectorClock(data["vc"]),
            decode_payload(data["kind"], data["payload"]),
        )
    except CodecError:
        raise
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise CodecError(f"malformed envelope: {exc}") from exc


def envelope_line(env: Envelope) -> str:
    return dumps(encode_envelope(env))


def parse_envelope_line(line: str) -> Envelope:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CodecError(f"invalid JSON: {exc}") from exc
    return decode_envelope(data)


# snapshots


def encode_elements(elements) -> list[dict]:
    """Canonical form of ``elements()``: a list of (position, state) pairs."""
    return [{"p": str(p), "sigma": encode_state(s, observable=True)} for p, s in elements]


def snapshot(elements) -> str:
    return dumps(encode_elements(elements))


def state_bytes(state) -> str:
    return dumps(encode_state(state, observable=True))
