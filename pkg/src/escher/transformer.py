"""Object transformers: generation from class transformations, and the
``.est`` concrete syntax.

A transformer is a straight-line instruction list building a record of the
new class version from a record of the old one:

    transform BANK_ACCOUNT from 1 to 2
      Result.info := convert STRING_TO_INTEGER (oldc.info)
      -- warning: attribute tot_deposits removed; value will be dropped
      noop
      Result.balance := input balance
    end

Generated transformers use only the canonical instruction shapes; hand-edited
ones may assign arbitrary arithmetic over ``oldc`` fields and literals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Union

from . import exprs
from ._lex import IDENT_RE, TokenStream, tokenize, unescape_string
from .errors import ConversionFailure, DuplicateTarget, ParseError, UnknownConverter
from .schema import (
    Attached,
    ClassType,
    TypeExpr,
    normalize_type,
    render_type,
    strip_marker,
    type_equal,
)
from .smo import (
    Added,
    AttachAdded,
    ClassTransformation,
    NoChange,
    Removed,
    Renamed,
    TypeChanged,
)
from .values import INT64_MAX, INT64_MIN, IntVal, ObjectValue, RealVal, StringVal


# ---------------------------------------------------------------------------
# Instructions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CopyField:
    target_name: str
    source_name: str


@dataclass(frozen=True)
class AssignInput:
    target_name: str


@dataclass(frozen=True)
class AssignConverted:
    target_name: str
    converter_id: str
    source_name: str


@dataclass(frozen=True)
class AssignExpr:
    """Hand-written assignment with an arbitrary arithmetic source."""

    target_name: str
    expr: exprs.Expr

    def __post_init__(self) -> None:
        # canonical shapes must use their dedicated instruction variants,
        # otherwise render/parse would not be the identity
        e = self.expr
        if isinstance(e, exprs.OldField):
            raise ValueError("use CopyField for a bare oldc.<name> source")
        if isinstance(e, exprs.InputRef) and e.key == self.target_name:
            raise ValueError("use AssignInput for a bare input <target> source")
        if isinstance(e, exprs.Convert) and isinstance(e.arg, exprs.OldField):
            raise ValueError("use AssignConverted for convert <ID> (oldc.<name>)")


@dataclass(frozen=True)
class Noop:
    warning: str = ""


@dataclass(frozen=True)
class CheckAttached:
    """Runtime non-void check on an already-assigned result field."""

    target_name: str


TransformerInstr = Union[CopyField, AssignInput, AssignConverted, AssignExpr, Noop, CheckAttached]

_ASSIGNING = (CopyField, AssignInput, AssignConverted, AssignExpr)


def instruction_target(instr: TransformerInstr) -> str | None:
    if isinstance(instr, _ASSIGNING):
        return instr.target_name
    return None


@dataclass(frozen=True)
class ObjectTransformer:
    class_name: str
    from_version: int
    to_version: int
    instructions: tuple[TransformerInstr, ...]

    def __post_init__(self) -> None:
        if self.from_version < 1 or self.to_version < 1:
            raise ValueError("version tags must be positive")
        if self.from_version == self.to_version:
            raise ValueError("a transformer must change the version")
        seen: set[str] = set()
        for instr in self.instructions:
            target = instruction_target(instr)
            if target is None:
                continue
            if target in seen:
                raise DuplicateTarget(target)
            seen.add(target)

    @property
    def required_inputs(self) -> frozenset[str]:
        keys: set[str] = set()
        for instr in self.instructions:
            if isinstance(instr, AssignInput):
                keys.add(instr.target_name)
            elif isinstance(instr, AssignExpr):
                for node in exprs.walk(instr.expr):
                    if isinstance(node, exprs.InputRef):
                        keys.add(node.key)
        return frozenset(keys)

    def assigned_targets(self) -> frozenset[str]:
        return frozenset(
            t for t in (instruction_target(i) for i in self.instructions) if t is not None
        )


# ---------------------------------------------------------------------------
# Converter registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Converter:
    converter_id: str
    source_type: TypeExpr
    target_type: TypeExpr
    fn: Callable[[ObjectValue], ObjectValue]

    def __post_init__(self) -> None:
        if not IDENT_RE.match(self.converter_id):
            raise ValueError(f"invalid converter id {self.converter_id!r}")


_INT_RE = re.compile(r"-?\d+\Z")
_REAL_RE = re.compile(r"-?\d+(\.\d+)?([eE][+-]?\d+)?\Z")


def _string_to_integer(value: ObjectValue) -> ObjectValue:
    if not isinstance(value, StringVal) or not _INT_RE.match(value.value):
        raise ConversionFailure("STRING_TO_INTEGER", value)
    number = int(value.value)
    if not (INT64_MIN <= number <= INT64_MAX):
        raise ConversionFailure("STRING_TO_INTEGER", value)
    return IntVal(number)


def _integer_to_string(value: ObjectValue) -> ObjectValue:
    if not isinstance(value, IntVal):
        raise ConversionFailure("INTEGER_TO_STRING", value)
    return StringVal(str(value.value))


def _integer_to_real(value: ObjectValue) -> ObjectValue:
    if not isinstance(value, IntVal):
        raise ConversionFailure("INTEGER_TO_REAL", value)
    return RealVal(float(value.value))


def _real_to_integer(value: ObjectValue) -> ObjectValue:
    if not isinstance(value, RealVal):
        raise ConversionFailure("REAL_TO_INTEGER", value)
    f = value.value
    if f != f or f in (float("inf"), float("-inf")):
        raise ConversionFailure("REAL_TO_INTEGER", value)
    truncated = int(f)  # toward zero
    if not (INT64_MIN <= truncated <= INT64_MAX):
        raise ConversionFailure("REAL_TO_INTEGER", value)
    return IntVal(truncated)


def _string_to_real(value: ObjectValue) -> ObjectValue:
    if not isinstance(value, StringVal) or not _REAL_RE.match(value.value):
        raise ConversionFailure("STRING_TO_REAL", value)
    return RealVal(float(value.value))


def _real_to_string(value: ObjectValue) -> ObjectValue:
    if not isinstance(value, RealVal):
        raise ConversionFailure("REAL_TO_STRING", value)
    return StringVal(exprs.render_real(value.value))


_INTEGER = ClassType("INTEGER")
_REAL = ClassType("REAL")
_STRING = ClassType("STRING")

BUILTIN_CONVERTERS = (
    Converter("STRING_TO_INTEGER", _STRING, _INTEGER, _string_to_integer),
    Converter("INTEGER_TO_STRING", _INTEGER, _STRING, _integer_to_string),
    Converter("INTEGER_TO_REAL", _INTEGER, _REAL, _integer_to_real),
    Converter("REAL_TO_INTEGER", _REAL, _INTEGER, _real_to_integer),
    Converter("STRING_TO_REAL", _STRING, _REAL, _string_to_real),
    Converter("REAL_TO_STRING", _REAL, _STRING, _real_to_string),
)


class ConverterRegistry:
    """Deterministic converter lookup, immutable once constructed.

    One converter per (source type, target type) pair; the built-in
    primitive matrix is always present.
    """

    def __init__(self, extra: Iterable[Converter] = ()):
        self._by_id: dict[str, Converter] = {}
        self._by_pair: dict[tuple[TypeExpr, TypeExpr], Converter] = {}
        for conv in (*BUILTIN_CONVERTERS, *extra):
            if conv.converter_id in self._by_id:
                raise ValueError(f"duplicate converter id {conv.converter_id!r}")
            pair = (normalize_type(conv.source_type), normalize_type(conv.target_type))
            if pair in self._by_pair:
                raise ValueError(
                    f"duplicate converter for {render_type(conv.source_type)} -> "
                    f"{render_type(conv.target_type)}"
                )
            self._by_id[conv.converter_id] = conv
            self._by_pair[pair] = conv

    def extended(self, *extra: Converter) -> "ConverterRegistry":
        current = [c for c in self._by_id.values() if c not in BUILTIN_CONVERTERS]
        return ConverterRegistry((*current, *extra))

    def get(self, converter_id: str) -> Converter:
        conv = self._by_id.get(converter_id)
        if conv is None:
            raise UnknownConverter(converter_id)
        return conv

    def __contains__(self, converter_id: str) -> bool:
        return converter_id in self._by_id

    def find(self, source_type: TypeExpr, target_type: TypeExpr) -> Converter | None:
        return self._by_pair.get((normalize_type(source_type), normalize_type(target_type)))


DEFAULT_REGISTRY = ConverterRegistry()


# ---------------------------------------------------------------------------
# Assignability and generation
# ---------------------------------------------------------------------------

# primitive widenings that keep a plain copy sound
_WIDENINGS = {(_INTEGER, _REAL)}


def assignable(from_type: TypeExpr, to_type: TypeExpr) -> bool:
    """True when a value of ``from_type`` can be stored as ``to_type`` as-is."""
    if type_equal(from_type, to_type):
        return True
    if (
        isinstance(from_type, Attached)
        and not isinstance(to_type, Attached)
        and type_equal(from_type.inner, strip_marker(to_type))
    ):
        return True
    return (strip_marker(from_type), strip_marker(to_type)) in _WIDENINGS


def generate_transformer(
    transformation: ClassTransformation, registry: ConverterRegistry = DEFAULT_REGISTRY
) -> ObjectTransformer:
    """Map each SMO to its instruction(s); never fails, gaps become warnings."""
    source, target = transformation.source, transformation.target
    if source.version == target.version:
        raise ValueError("source and target schemas carry the same version tag")
    instructions: list[TransformerInstr] = []
    for smo in transformation.smos:
        if isinstance(smo, NoChange):
            instructions.append(CopyField(smo.attribute.name, smo.attribute.name))
        elif isinstance(smo, Added):
            instructions.append(AssignInput(smo.attribute.name))
        elif isinstance(smo, Renamed):
            if smo.candidate:
                instructions.append(
                    Noop(f"possible rename of {smo.old_name} to {smo.new_name}; verify semantics")
                )
            instructions.append(CopyField(smo.new_name, smo.old_name))
        elif isinstance(smo, TypeChanged):
            if assignable(smo.old_type, smo.new_type):
                instructions.append(CopyField(smo.name, smo.name))
            else:
                converter = registry.find(smo.old_type, smo.new_type)
                if converter is not None:
                    instructions.append(
                        AssignConverted(smo.name, converter.converter_id, smo.name)
                    )
                else:
                    instructions.append(
                        Noop(
                            f"no conversion from {render_type(smo.old_type)} to "
                            f"{render_type(smo.new_type)} for {smo.name}"
                        )
                    )
                    instructions.append(AssignInput(smo.name))
        elif isinstance(smo, Removed):
            instructions.append(Noop(f"attribute {smo.name} removed; value will be dropped"))
        elif isinstance(smo, AttachAdded):
            instructions.append(CopyField(smo.name, smo.name))
            instructions.append(CheckAttached(smo.name))
        else:
            raise TypeError(f"not an SMO: {smo!r}")
    return ObjectTransformer(
        class_name=source.name,
        from_version=source.version,
        to_version=target.version,
        instructions=tuple(instructions),
    )


# ---------------------------------------------------------------------------
# Concrete syntax
# ---------------------------------------------------------------------------


def render_transformer(t: ObjectTransformer) -> str:
    lines = [f"transform {t.class_name} from {t.from_version} to {t.to_version}"]
    for instr in t.instructions:
        if isinstance(instr, Noop):
            if instr.warning:
                lines.append(f"  -- warning: {instr.warning}")
            lines.append("  noop")
        elif isinstance(instr, CheckAttached):
            lines.append(f"  require_attached Result.{instr.target_name}")
        else:
            lines.append(f"  Result.{instruction_target(instr)} := {_render_source(instr)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def _render_source(instr: TransformerInstr) -> str:
    if isinstance(instr, CopyField):
        return f"oldc.{instr.source_name}"
    if isinstance(instr, AssignInput):
        return f"input {instr.target_name}"
    if isinstance(instr, AssignConverted):
        return f"convert {instr.converter_id} (oldc.{instr.source_name})"
    if isinstance(instr, AssignExpr):
        return exprs.render_expr(instr.expr)
    raise TypeError(f"not an assigning instruction: {instr!r}")


_WARNING_PREFIX = "-- warning:"


def parse_transformer(source: str, registry: ConverterRegistry | None = None) -> ObjectTransformer:
    """Parse a ``.est`` file; converter ids are validated against ``registry``
    when one is given."""
    header: tuple[str, int, int] | None = None
    instructions: list[TransformerInstr] = []
    pending_warning: str | None = None
    ended = False
    for lineno, raw in enumerate(source.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(_WARNING_PREFIX):
            pending_warning = line[len(_WARNING_PREFIX):].strip()
            continue
        if line.startswith("--"):
            continue
        if ended:
            raise ParseError(f"unparsed trailing content {line!r}", lineno, 1)
        if header is None:
            header = _parse_header(line, lineno)
            continue
        if line == "end":
            ended = True
            continue
        if line == "noop":
            instructions.append(Noop(pending_warning or ""))
            pending_warning = None
            continue
        pending_warning = None
        instructions.append(_parse_statement(line, lineno, registry))
    if header is None:
        raise ParseError("missing transform header", 1, 1)
    if not ended:
        raise ParseError("missing end", len(source.split("\n")), 1)
    name, from_version, to_version = header
    return ObjectTransformer(name, from_version, to_version, tuple(instructions))


def _parse_header(line: str, lineno: int) -> tuple[str, int, int]:
    stream = TokenStream(tokenize(line, start_line=lineno))
    stream.expect_ident("transform")
    name = stream.expect_ident().text
    stream.expect_ident("from")
    from_tok = stream.peek()
    if from_tok.kind != "INT":
        raise stream.error("version must be an integer", expected="an integer")
    from_version = int(stream.next().text)
    stream.expect_ident("to")
    to_tok = stream.peek()
    if to_tok.kind != "INT":
        raise stream.error("version must be an integer", expected="an integer")
    to_version = int(stream.next().text)
    _expect_eol(stream)
    return name, from_version, to_version


def _parse_statement(
    line: str, lineno: int, registry: ConverterRegistry | None
) -> TransformerInstr:
    stream = TokenStream(tokenize(line, start_line=lineno))
    if stream.at_ident("require_attached"):
        stream.next()
        stream.expect_ident("Result")
        stream.expect_op(".")
        target = stream.expect_ident().text
        _expect_eol(stream)
        return CheckAttached(target)
    stream.expect_ident("Result")
    stream.expect_op(".")
    target = stream.expect_ident().text
    stream.expect_op(":=")
    expr = _parse_expr(stream, registry)
    _expect_eol(stream)
    if isinstance(expr, exprs.OldField):
        return CopyField(target, expr.name)
    if isinstance(expr, exprs.InputRef) and expr.key == target:
        return AssignInput(target)
    if isinstance(expr, exprs.Convert) and isinstance(expr.arg, exprs.OldField):
        return AssignConverted(target, expr.converter_id, expr.arg.name)
    return AssignExpr(target, expr)


def _expect_eol(stream: TokenStream) -> None:
    tok = stream.peek()
    if tok.kind != "EOF":
        raise ParseError(f"unexpected {tok.text!r}", tok.line, tok.column, expected="end of line")


def _parse_expr(stream: TokenStream, registry: ConverterRegistry | None) -> exprs.Expr:
    left = _parse_term(stream, registry)
    while stream.at_op("+") or stream.at_op("-"):
        op = stream.next().text
        left = exprs.BinOp(op, left, _parse_term(stream, registry))
    return left


def _parse_term(stream: TokenStream, registry: ConverterRegistry | None) -> exprs.Expr:
    left = _parse_factor(stream, registry)
    while stream.at_op("*") or stream.at_op("//"):
        op = stream.next().text
        left = exprs.BinOp(op, left, _parse_factor(stream, registry))
    return left


def _parse_factor(stream: TokenStream, registry: ConverterRegistry | None) -> exprs.Expr:
    tok = stream.peek()
    if stream.at_op("("):
        stream.next()
        inner = _parse_expr(stream, registry)
        stream.expect_op(")")
        return inner
    if stream.at_op("-"):  # negative literal, not general unary minus
        stream.next()
        num = stream.peek()
        if num.kind == "INT":
            stream.next()
            return exprs.IntLit(-int(num.text))
        if num.kind == "REAL":
            stream.next()
            return exprs.RealLit(-float(num.text))
        raise stream.error("'-' must prefix a numeric literal", expected="a number")
    if tok.kind == "INT":
        stream.next()
        return exprs.IntLit(int(tok.text))
    if tok.kind == "REAL":
        stream.next()
        return exprs.RealLit(float(tok.text))
    if tok.kind == "STRING":
        stream.next()
        return exprs.StrLit(unescape_string(tok.text, tok.line, tok.column))
    if stream.at_ident("Void"):
        stream.next()
        return exprs.VoidLit()
    if stream.at_ident("true") or stream.at_ident("false"):
        return exprs.BoolLit(stream.next().text == "true")
    if stream.at_ident("oldc"):
        stream.next()
        stream.expect_op(".")
        return exprs.OldField(stream.expect_ident().text)
    if stream.at_ident("input"):
        stream.next()
        return exprs.InputRef(stream.expect_ident().text)
    if stream.at_ident("convert"):
        stream.next()
        conv_tok = stream.expect_ident()
        if registry is not None and conv_tok.text not in registry:
            raise UnknownConverter(conv_tok.text)
        stream.expect_op("(")
        arg = _parse_expr(stream, registry)
        stream.expect_op(")")
        return exprs.Convert(conv_tok.text, arg)
    raise stream.error(f"found {tok.text!r}", expected="an expression")
