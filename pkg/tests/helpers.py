"""Seeded random generators for property-style tests.

Everything takes an explicit ``random.Random`` so failures reproduce.
"""

from __future__ import annotations

import random

from escher.objects import ObjectGraph, ObjectRecord
from escher.schema import (
    Attached,
    Attribute,
    ClassSchema,
    ClassType,
    Detachable,
    GenericDerivation,
    GenericParamRef,
    InvariantClause,
    InvariantExpr,
    TypeExpr,
)
from escher import exprs
from escher.values import VOID, BoolVal, IntVal, ObjectValue, RealVal, RefVal, StringVal

CLASS_NAMES = ["INTEGER", "REAL", "BOOLEAN", "STRING", "PERSON", "ADDRESS", "ACCOUNT", "WIDGET"]
CONTAINER_NAMES = ["ARRAY", "LIST", "TABLE"]


def random_type(rng: random.Random, params: tuple[str, ...], depth: int = 0) -> TypeExpr:
    base = _random_unmarked(rng, params, depth)
    marker = rng.random()
    if isinstance(base, GenericParamRef):
        return base
    if marker < 0.2:
        return Attached(base)
    if marker < 0.35:
        return Detachable(base)
    return base


def _random_unmarked(rng: random.Random, params: tuple[str, ...], depth: int) -> TypeExpr:
    roll = rng.random()
    if params and roll < 0.15:
        return GenericParamRef(rng.choice(params))
    if depth < 2 and roll < 0.35:
        base: TypeExpr = ClassType(rng.choice(CONTAINER_NAMES))
        for _ in range(rng.randint(1, 2)):
            base = GenericDerivation(base, random_type(rng, params, depth + 1))
        return base
    return ClassType(rng.choice(CLASS_NAMES))


def random_schema(
    rng: random.Random,
    name: str = "SUBJECT",
    *,
    max_attributes: int = 12,
    version: int = 1,
    allow_invariant: bool = False,
) -> ClassSchema:
    params = tuple(rng.sample(["G", "H"], k=rng.randint(0, 2)))
    count = rng.randint(0, max_attributes)
    attributes = tuple(
        Attribute(f"attr_{i}", random_type(rng, params)) for i in range(count)
    )
    invariant = InvariantExpr()
    if allow_invariant and attributes and rng.random() < 0.5:
        clauses = []
        for attr in attributes:
            if attr.declared_type == ClassType("INTEGER") and rng.random() < 0.5:
                clauses.append(
                    InvariantClause(
                        f"nonneg_{attr.name}",
                        exprs.Compare(">=", exprs.AttrRef(attr.name), exprs.IntLit(0)),
                    )
                )
        invariant = InvariantExpr(tuple(clauses))
    return ClassSchema(name, params, attributes, invariant, version)


def random_schema_pair(rng: random.Random) -> tuple[ClassSchema, ClassSchema]:
    """Two versions of one class: a random base, then a mutation mixing kept,
    retyped, renamed, dropped, added, and reordered attributes."""
    old = random_schema(rng, allow_invariant=True)
    params = old.generic_params
    new_attrs: list[Attribute] = []
    for attr in old.attributes:
        roll = rng.random()
        if roll < 0.25:
            continue  # dropped
        if roll < 0.40:
            new_attrs.append(Attribute(attr.name, random_type(rng, params)))  # maybe retyped
        elif roll < 0.55:
            new_attrs.append(Attribute(f"renamed_{attr.name}", attr.declared_type))
        else:
            new_attrs.append(attr)
    for i in range(rng.randint(0, 4)):
        new_attrs.append(Attribute(f"fresh_{i}", random_type(rng, params)))
    rng.shuffle(new_attrs)
    new = ClassSchema(
        old.name, params, tuple(new_attrs), InvariantExpr(), old.version + 1
    )
    return old, new


def random_value(rng: random.Random, record_count: int) -> ObjectValue:
    roll = rng.random()
    if roll < 0.25:
        return IntVal(rng.randint(-(2**40), 2**40))
    if roll < 0.40:
        return RealVal(rng.choice([0.0, 1.5, -2.25, 3.125e10, 0.1]))
    if roll < 0.50:
        return BoolVal(rng.random() < 0.5)
    if roll < 0.70:
        alphabet = 'ab "\\\n xyz_09'
        return StringVal("".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8))))
    if roll < 0.80:
        return VOID
    return RefVal(rng.randrange(record_count))


def random_graph(rng: random.Random, max_records: int = 6) -> ObjectGraph:
    """Random flat object table; reference fields may form cycles."""
    count = rng.randint(1, max_records)
    records = []
    for object_id in range(count):
        fields = tuple(
            (f"f{i}", random_value(rng, count)) for i in range(rng.randint(0, 5))
        )
        records.append(
            ObjectRecord(object_id, rng.choice(["NODE", "ITEM", "CELL"]), rng.randint(1, 4), fields)
        )
    return ObjectGraph(tuple(records))
