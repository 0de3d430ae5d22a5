"""Replicated list of CRDTs with a for-each operation that also reaches
concurrently inserted elements."""

from .causal import (
    AlreadyDelivered,
    CausalGapError,
    DeliveryError,
    Dot,
    Envelope,
    VectorClock,
    deliverable,
    dot_is_concurrent,
    dot_is_prior,
    record_delivery,
)
from .crdt_list import CrdtList, Element, IntegrityError
from .elements import (
    Amount,
    AmountMult,
    AttrMap,
    AttrSet,
    ClockContext,
    Ingredient,
    RichChar,
    SchemaError,
    Vec2,
    Vec2Mult,
    amount_mult,
    attr_set,
    effect,
    generate,
    vec2_mult,
)
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
    eval_mutation,
    nested_foreach,
)
from .positions import NEG_INF, POS_INF, Position, between, compare

__version__ = "0.1.0"
