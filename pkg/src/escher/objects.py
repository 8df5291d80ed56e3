"""Serialized object graphs, invariant evaluation, and the retrieval algorithm.

The ``.eso`` object file is a flat table of records with explicit ids, which
represents shared substructure and cycles without nesting:

    ESCHER-OBJECTS 1
    obj 0 BANK_ACCOUNT version 1
      tot_deposits: INTEGER = 100
      tot_withdrawals: INTEGER = 30
      info: STRING = "42"
    end

Retrieval migrates every record whose stored version differs from its
class's target version, then enforces the target schema's class invariant.
Migration failures are loud by design: a missing handler, a missing
transformation, or a violated invariant each raises its own error instead of
letting a default-initialized object into the system.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

from . import exprs
from ._lex import TokenStream, escape_string, tokenize, unescape_string
from .errors import (
    AttachmentViolation,
    DanglingReference,
    EvaluationError,
    FormatError,
    HandlerMissing,
    InvariantViolation,
    MissingAttribute,
    MissingInput,
    ParseError,
    TransformationMissing,
    TypeMismatchInInvariant,
)
from .schema import ClassSchema, ClassType, TypeExpr, strip_marker
from .transformer import (
    DEFAULT_REGISTRY,
    AssignConverted,
    AssignExpr,
    AssignInput,
    CheckAttached,
    ConverterRegistry,
    CopyField,
    Noop,
    ObjectTransformer,
)
from .values import (
    INT64_MAX,
    INT64_MIN,
    VOID,
    BoolVal,
    IntVal,
    ObjectValue,
    RealVal,
    RefVal,
    StringVal,
    VoidVal,
)

if TYPE_CHECKING:
    from .repository import Repository


# ---------------------------------------------------------------------------
# Records and graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectRecord:
    id: int
    class_name: str
    version: int
    fields: tuple[tuple[str, ObjectValue], ...]

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"object id must be nonnegative: {self.id}")
        if self.version < 1:
            raise ValueError(f"version must be positive: {self.version}")
        names = [name for name, _ in self.fields]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate field name in record {self.id}")

    def get(self, name: str) -> ObjectValue | None:
        for field_name, value in self.fields:
            if field_name == name:
                return value
        return None

    def as_dict(self) -> dict[str, ObjectValue]:
        return dict(self.fields)


@dataclass(frozen=True)
class ObjectGraph:
    records: tuple[ObjectRecord, ...]
    root_id: int = 0

    def __post_init__(self) -> None:
        if not self.records:
            raise ValueError("an object graph holds at least its root record")
        if self.root_id != 0:
            raise ValueError("the root record has id 0")
        for position, record in enumerate(self.records):
            if record.id != position:
                raise ValueError(f"record ids must be dense: expected {position}, got {record.id}")
        count = len(self.records)
        for record in self.records:
            for _, value in record.fields:
                if isinstance(value, RefVal) and value.object_id >= count:
                    raise DanglingReference(value.object_id)

    def record(self, object_id: int) -> ObjectRecord:
        return self.records[object_id]


# ---------------------------------------------------------------------------
# Canonical text form
# ---------------------------------------------------------------------------

_HEADER = "ESCHER-OBJECTS 1"


def render_value(value: ObjectValue) -> str:
    if isinstance(value, IntVal):
        return str(value.value)
    if isinstance(value, RealVal):
        if value.value != value.value or value.value in (float("inf"), float("-inf")):
            raise ValueError("non-finite reals are not serializable")
        return exprs.render_real(value.value)
    if isinstance(value, BoolVal):
        return "true" if value.value else "false"
    if isinstance(value, StringVal):
        return escape_string(value.value)
    if isinstance(value, VoidVal):
        return "Void"
    if isinstance(value, RefVal):
        return f"ref {value.object_id}"
    raise TypeError(f"not an object value: {value!r}")


def _annotation(value: ObjectValue, graph: ObjectGraph) -> str:
    if isinstance(value, IntVal):
        return "INTEGER"
    if isinstance(value, RealVal):
        return "REAL"
    if isinstance(value, BoolVal):
        return "BOOLEAN"
    if isinstance(value, StringVal):
        return "STRING"
    if isinstance(value, VoidVal):
        return "NONE"
    return graph.record(value.object_id).class_name


def serialize(graph: ObjectGraph) -> str:
    """Byte-exact canonical text; field order is preserved."""
    lines = [_HEADER]
    for record in graph.records:
        lines.append(f"obj {record.id} {record.class_name} version {record.version}")
        for name, value in record.fields:
            lines.append(f"  {name}: {_annotation(value, graph)} = {render_value(value)}")
        lines.append("end")
    return "\n".join(lines) + "\n"


_OBJ_RE = re.compile(r"obj\s+(\d+)\s+([A-Za-z_][A-Za-z0-9_]*)\s+version\s+(\d+)\s*\Z")


def deserialize(text: str) -> ObjectGraph:
    lines = text.split("\n")
    if not lines or lines[0].strip() != _HEADER:
        raise FormatError(1, f"missing {_HEADER!r} header")
    records: list[ObjectRecord] = []
    lineno = 1
    total = len(lines)
    while lineno < total:
        line = lines[lineno].strip()
        lineno += 1
        if not line:
            continue
        m = _OBJ_RE.match(line)
        if m is None:
            raise FormatError(lineno, f"expected 'obj <id> <CLASS> version <v>', got {line!r}")
        object_id, class_name, version = int(m.group(1)), m.group(2), int(m.group(3))
        if object_id != len(records):
            raise FormatError(lineno, f"expected object id {len(records)}, got {object_id}")
        fields: list[tuple[str, ObjectValue]] = []
        closed = False
        while lineno < total:
            field_line = lines[lineno].strip()
            lineno += 1
            if not field_line:
                continue
            if field_line == "end":
                closed = True
                break
            fields.append(_parse_field(field_line, lineno))
        if not closed:
            raise FormatError(lineno, f"record {object_id} is missing its 'end'")
        try:
            records.append(ObjectRecord(object_id, class_name, version, tuple(fields)))
        except ValueError as err:
            raise FormatError(lineno, str(err)) from err
    if not records:
        raise FormatError(lineno, "object file holds no records")
    return ObjectGraph(tuple(records))


_PRIMITIVE_ANNOTATIONS = {"INTEGER", "REAL", "BOOLEAN", "STRING", "NONE"}


def _parse_field(line: str, lineno: int) -> tuple[str, ObjectValue]:
    try:
        stream = TokenStream(tokenize(line, start_line=lineno))
        name = stream.expect_ident().text
        stream.expect_op(":")
        annotation = stream.expect_ident().text
        stream.expect_op("=")
        value = parse_value(stream)
        trailing = stream.peek()
        if trailing.kind != "EOF":
            raise FormatError(lineno, f"trailing content {trailing.text!r}")
    except ParseError as err:
        raise FormatError(err.line, str(err)) from err
    _check_annotation(annotation, value, lineno, name)
    return name, value


def _check_annotation(annotation: str, value: ObjectValue, lineno: int, name: str) -> None:
    ok = True
    if annotation == "INTEGER":
        ok = isinstance(value, IntVal)
    elif annotation == "REAL":
        ok = isinstance(value, RealVal)
    elif annotation == "BOOLEAN":
        ok = isinstance(value, BoolVal)
    elif annotation == "STRING":
        ok = isinstance(value, (StringVal, VoidVal))
    elif annotation == "NONE":
        ok = isinstance(value, VoidVal)
    else:  # object type: a reference or void
        ok = isinstance(value, (RefVal, VoidVal))
    if not ok:
        raise FormatError(lineno, f"value of field {name!r} does not fit annotation {annotation}")


def parse_value(stream: TokenStream) -> ObjectValue:
    """Parse one object-file value literal from a token stream."""
    tok = stream.peek()
    negative = False
    if stream.at_op("-"):
        stream.next()
        negative = True
        tok = stream.peek()
    if tok.kind == "INT":
        stream.next()
        number = -int(tok.text) if negative else int(tok.text)
        try:
            return IntVal(number)
        except ValueError as err:
            raise FormatError(tok.line, str(err)) from err
    if tok.kind == "REAL":
        stream.next()
        return RealVal(-float(tok.text) if negative else float(tok.text))
    if negative:
        raise FormatError(tok.line, "'-' must prefix a numeric literal")
    if tok.kind == "STRING":
        stream.next()
        return StringVal(unescape_string(tok.text, tok.line, tok.column))
    if tok.kind == "IDENT":
        if tok.text == "Void":
            stream.next()
            return VOID
        if tok.text in ("true", "false"):
            stream.next()
            return BoolVal(tok.text == "true")
        if tok.text == "ref":
            stream.next()
            ref_tok = stream.peek()
            if ref_tok.kind != "INT":
                raise FormatError(ref_tok.line, "ref needs a nonnegative integer id")
            stream.next()
            return RefVal(int(ref_tok.text))
    raise FormatError(tok.line, f"not a value literal: {tok.text!r}")


def parse_value_text(text: str) -> ObjectValue:
    try:
        stream = TokenStream(tokenize(text))
        value = parse_value(stream)
        trailing = stream.peek()
        if trailing.kind != "EOF":
            raise FormatError(trailing.line, f"trailing content {trailing.text!r}")
    except ParseError as err:
        raise FormatError(err.line, str(err)) from err
    return value


# ---------------------------------------------------------------------------
# Invariant evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvariantResult:
    passed: bool
    failed_clause: str | None = None


INVARIANT_PASS = InvariantResult(True)


class _EvalProblem(Exception):
    """Internal: arithmetic/comparison cannot proceed; callers re-wrap."""


def eval_invariant(record: ObjectRecord, schema: ClassSchema) -> InvariantResult:
    """Evaluate clauses in order; report the first false one.

    Integer/integer comparisons are exact; a real operand promotes both
    sides; strings compare lexicographically by code point; ``x /= Void``
    is true iff x is not void.
    """
    if record.class_name != schema.name:
        raise ValueError(
            f"record of class {record.class_name} checked against schema {schema.name}"
        )
    fields = record.as_dict()
    for clause in schema.invariant.clauses:
        try:
            outcome = _eval_clause(clause.body, fields)
        except _EvalProblem as err:
            raise TypeMismatchInInvariant(clause.tag, str(err)) from err
        if not isinstance(outcome, BoolVal):
            raise TypeMismatchInInvariant(clause.tag, "clause body is not boolean")
        if not outcome.value:
            return InvariantResult(False, clause.tag)
    return INVARIANT_PASS


def _eval_clause(expr: exprs.Expr, fields: Mapping[str, ObjectValue]) -> ObjectValue:
    if isinstance(expr, exprs.AttrRef):
        value = fields.get(expr.name)
        if value is None:
            raise MissingAttribute(expr.name)
        return value
    if isinstance(expr, exprs.And):
        left = _require_bool(_eval_clause(expr.left, fields))
        if not left.value:
            return BoolVal(False)
        return _require_bool(_eval_clause(expr.right, fields))
    if isinstance(expr, exprs.Or):
        left = _require_bool(_eval_clause(expr.left, fields))
        if left.value:
            return BoolVal(True)
        return _require_bool(_eval_clause(expr.right, fields))
    if isinstance(expr, exprs.Not):
        return BoolVal(not _require_bool(_eval_clause(expr.operand, fields)).value)
    if isinstance(expr, exprs.Compare):
        left = _eval_clause(expr.left, fields)
        right = _eval_clause(expr.right, fields)
        return BoolVal(_compare(expr.op, left, right))
    if isinstance(expr, exprs.BinOp):
        left = _eval_clause(expr.left, fields)
        right = _eval_clause(expr.right, fields)
        return _arith(expr.op, left, right)
    return _literal_value(expr)


def _literal_value(expr: exprs.Expr) -> ObjectValue:
    if isinstance(expr, exprs.IntLit):
        return IntVal(expr.value)
    if isinstance(expr, exprs.RealLit):
        return RealVal(expr.value)
    if isinstance(expr, exprs.BoolLit):
        return BoolVal(expr.value)
    if isinstance(expr, exprs.StrLit):
        return StringVal(expr.value)
    if isinstance(expr, exprs.VoidLit):
        return VOID
    raise _EvalProblem(f"expression not allowed here: {expr!r}")


def _require_bool(value: ObjectValue) -> BoolVal:
    if not isinstance(value, BoolVal):
        raise _EvalProblem("boolean connective over a non-boolean operand")
    return value


def _compare(op: str, a: ObjectValue, b: ObjectValue) -> bool:
    if op in ("=", "/="):
        equal = _values_equal(a, b)
        return equal if op == "=" else not equal
    # ordering: numbers or strings
    if isinstance(a, (IntVal, RealVal)) and isinstance(b, (IntVal, RealVal)):
        left, right = _promote(a, b)
    elif isinstance(a, StringVal) and isinstance(b, StringVal):
        left, right = a.value, b.value
    else:
        raise _EvalProblem(f"operands of {op} are not comparable")
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    return left >= right


def _values_equal(a: ObjectValue, b: ObjectValue) -> bool:
    if isinstance(a, VoidVal) or isinstance(b, VoidVal):
        return isinstance(a, VoidVal) and isinstance(b, VoidVal)
    if isinstance(a, (IntVal, RealVal)) and isinstance(b, (IntVal, RealVal)):
        if isinstance(a, IntVal) and isinstance(b, IntVal):
            return a.value == b.value
        left, right = _promote(a, b)
        return left == right
    if isinstance(a, BoolVal) and isinstance(b, BoolVal):
        return a.value == b.value
    if isinstance(a, StringVal) and isinstance(b, StringVal):
        return a.value == b.value
    if isinstance(a, RefVal) and isinstance(b, RefVal):
        return a.object_id == b.object_id
    raise _EvalProblem("equality between incomparable types")


def _promote(a: IntVal | RealVal, b: IntVal | RealVal):
    if isinstance(a, IntVal) and isinstance(b, IntVal):
        return a.value, b.value
    return float(a.value), float(b.value)


def _arith(op: str, a: ObjectValue, b: ObjectValue) -> ObjectValue:
    if not isinstance(a, (IntVal, RealVal)) or not isinstance(b, (IntVal, RealVal)):
        raise _EvalProblem(f"arithmetic {op} over non-numeric operands")
    if op == "//":
        if not isinstance(a, IntVal) or not isinstance(b, IntVal):
            raise _EvalProblem("integer division needs integer operands")
        if b.value == 0:
            raise _EvalProblem("integer division by zero")
        # truncation toward zero, matching REAL_TO_INTEGER
        quotient = abs(a.value) // abs(b.value)
        if (a.value < 0) != (b.value < 0):
            quotient = -quotient
        return IntVal(quotient)
    if isinstance(a, IntVal) and isinstance(b, IntVal):
        result = {"+": a.value + b.value, "-": a.value - b.value, "*": a.value * b.value}[op]
        if not (INT64_MIN <= result <= INT64_MAX):
            raise _EvalProblem("integer overflow")
        return IntVal(result)
    left, right = float(a.value), float(b.value)
    return RealVal({"+": left + right, "-": left - right, "*": left * right}[op])


# ---------------------------------------------------------------------------
# Transformer interpretation
# ---------------------------------------------------------------------------


def type_default(declared: TypeExpr) -> ObjectValue:
    base = strip_marker(declared)
    if isinstance(base, ClassType):
        if base.name == "INTEGER":
            return IntVal(0)
        if base.name == "REAL":
            return RealVal(0.0)
        if base.name == "BOOLEAN":
            return BoolVal(False)
        if base.name == "STRING":
            return StringVal("")
    return VOID


def interpret_transformer(
    t: ObjectTransformer,
    old: ObjectRecord,
    inputs: Mapping[str, ObjectValue],
    registry: ConverterRegistry = DEFAULT_REGISTRY,
    new_schema: ClassSchema | None = None,
    *,
    check_attached: bool = True,
    warnings: list[str] | None = None,
) -> ObjectRecord:
    """Run the instruction list over ``old``, producing a record of the new
    version with exactly ``new_schema``'s attributes.

    Attributes no instruction assigns (possible only in hand-edited
    transformers) default by declared type, with a warning recorded.
    """
    if new_schema is None:
        raise ValueError("interpretation needs the target schema")
    if old.class_name != t.class_name or new_schema.name != t.class_name:
        raise ValueError(
            f"transformer for {t.class_name} applied to {old.class_name}/{new_schema.name}"
        )
    if old.version != t.from_version:
        raise ValueError(
            f"record stores version {old.version}, transformer starts at {t.from_version}"
        )
    old_fields = old.as_dict()
    result: dict[str, ObjectValue] = {}
    schema_names = set(new_schema.attribute_names())
    for index, instr in enumerate(t.instructions):
        if isinstance(instr, Noop):
            continue
        if isinstance(instr, CheckAttached):
            if check_attached and isinstance(result.get(instr.target_name, VOID), VoidVal):
                raise AttachmentViolation(instr.target_name)
            continue
        target = instr.target_name
        if target not in schema_names:
            raise EvaluationError(index, f"target {target!r} is not an attribute of {new_schema.name}")
        if isinstance(instr, CopyField):
            value = _old_value(old_fields, instr.source_name, index)
        elif isinstance(instr, AssignInput):
            value = _input_value(inputs, instr.target_name)
        elif isinstance(instr, AssignConverted):
            source = _old_value(old_fields, instr.source_name, index)
            value = registry.get(instr.converter_id).fn(source)
        elif isinstance(instr, AssignExpr):
            value = _eval_source(instr.expr, old_fields, inputs, registry, index)
        else:
            raise TypeError(f"not a transformer instruction: {instr!r}")
        result[target] = value
    fields: list[tuple[str, ObjectValue]] = []
    for attr in new_schema.attributes:
        if attr.name in result:
            fields.append((attr.name, result[attr.name]))
        else:
            if warnings is not None:
                warnings.append(
                    f"attribute {attr.name!r} of {new_schema.name} not assigned by the "
                    f"{t.from_version}->{t.to_version} transformer; default used"
                )
            fields.append((attr.name, type_default(attr.declared_type)))
    return ObjectRecord(old.id, t.class_name, t.to_version, tuple(fields))


def _old_value(old_fields: Mapping[str, ObjectValue], name: str, index: int) -> ObjectValue:
    value = old_fields.get(name)
    if value is None:
        raise EvaluationError(index, f"old record has no attribute {name!r}")
    return value


def _input_value(inputs: Mapping[str, ObjectValue], key: str) -> ObjectValue:
    value = inputs.get(key)
    if value is None:
        raise MissingInput(key)
    return value


def _eval_source(
    expr: exprs.Expr,
    old_fields: Mapping[str, ObjectValue],
    inputs: Mapping[str, ObjectValue],
    registry: ConverterRegistry,
    index: int,
) -> ObjectValue:
    if isinstance(expr, exprs.OldField):
        return _old_value(old_fields, expr.name, index)
    if isinstance(expr, exprs.InputRef):
        return _input_value(inputs, expr.key)
    if isinstance(expr, exprs.Convert):
        arg = _eval_source(expr.arg, old_fields, inputs, registry, index)
        return registry.get(expr.converter_id).fn(arg)
    if isinstance(expr, exprs.BinOp):
        left = _eval_source(expr.left, old_fields, inputs, registry, index)
        right = _eval_source(expr.right, old_fields, inputs, registry, index)
        try:
            return _arith(expr.op, left, right)
        except _EvalProblem as err:
            raise EvaluationError(index, str(err)) from err
    try:
        return _literal_value(expr)
    except _EvalProblem as err:
        raise EvaluationError(index, str(err)) from err


# ---------------------------------------------------------------------------
# Retrieval
# ---------------------------------------------------------------------------


def retrieve(
    graph: ObjectGraph,
    repo: "Repository",
    target_versions: Mapping[str, int],
    inputs: Mapping[tuple[str, str], ObjectValue] | None = None,
    registry: ConverterRegistry = DEFAULT_REGISTRY,
    *,
    assertions: bool = True,
    allow_composition: bool = True,
    warnings: list[str] | None = None,
) -> ObjectGraph:
    """Migrate every record to its class's target version and gate on the
    target invariant.

    Classes absent from ``target_versions`` stay at their stored version
    (invariant-checked only). When no direct transformer exists, the shortest
    chain of registered transformers is composed, unless ``allow_composition``
    is off; only the final schema's invariant is checked. ``assertions`` off
    reproduces the tolerant retrieval the invariant gate exists to prevent.
    """
    inputs = inputs or {}
    migrated: list[ObjectRecord] = []
    for record in graph.records:
        target = target_versions.get(record.class_name, record.version)
        current = record
        if record.version != target:
            handlers = repo.handlers_for(record.class_name)
            if handlers is None:
                raise HandlerMissing(record.class_name)
            path = _shortest_path(handlers.keys(), record.version, target, allow_composition)
            if path is None:
                raise TransformationMissing(record.class_name, record.version, target)
            class_inputs = {
                attr: value
                for (cls, attr), value in inputs.items()
                if cls == record.class_name
            }
            for hop_from, hop_to in zip(path, path[1:]):
                hop_schema = repo.schema_for(record.class_name, hop_to)
                current = interpret_transformer(
                    handlers[(hop_from, hop_to)],
                    current,
                    class_inputs,
                    registry,
                    hop_schema,
                    check_attached=assertions,
                    warnings=warnings,
                )
        if assertions:
            schema = repo.schema_for(record.class_name, target)
            outcome = eval_invariant(current, schema)
            if not outcome.passed:
                raise InvariantViolation(record.class_name, record.id, outcome.failed_clause)
        migrated.append(current)
    return ObjectGraph(tuple(migrated), root_id=graph.root_id)


def _shortest_path(
    edges: Iterable[tuple[int, int]], start: int, goal: int, allow_composition: bool
) -> list[int] | None:
    """Version sequence along registered transformers, or None.

    Ties between equal-length paths break toward the lexicographically
    smallest version sequence.
    """
    edge_set = set(edges)
    if (start, goal) in edge_set:
        return [start, goal]
    if not allow_composition:
        return None
    forward: dict[int, list[int]] = {}
    backward: dict[int, list[int]] = {}
    for a, b in edge_set:
        forward.setdefault(a, []).append(b)
        backward.setdefault(b, []).append(a)
    # distance-to-goal by reverse BFS, then greedy smallest-next-version walk
    dist = {goal: 0}
    frontier = [goal]
    while frontier:
        nxt: list[int] = []
        for node in frontier:
            for prev in backward.get(node, []):
                if prev not in dist:
                    dist[prev] = dist[node] + 1
                    nxt.append(prev)
        frontier = nxt
    if start not in dist:
        return None
    path = [start]
    node = start
    while node != goal:
        candidates = [v for v in forward.get(node, []) if dist.get(v) == dist[node] - 1]
        node = min(candidates)
        path.append(node)
    return path
