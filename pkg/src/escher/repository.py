"""On-disk project state: releases, class version histories, handlers.

Project layout:

    project/
      escher.manifest
      releases/<n>/<CLASS>.esc
      handlers/<CLASS>/<from>_to_<to>.est

The manifest is line-oriented (``release <n>``, ``class <NAME> version <v>``,
``transformer <CLASS> <from> <to> <digest>``). A release bumps a class's
version tag by exactly one when the class actually changed, keeps it
otherwise, and generates forward transformer stubs for changed classes
without ever overwriting an existing handler file.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from . import exprs
from .errors import (
    FormatError,
    InvariantNeedsFilteredAttribute,
    OverwriteRefused,
    UnknownAttribute,
    UnknownClass,
    UnknownVersion,
    VersionTagTamper,
)
from .schema import ClassSchema, parse_schema, render_schema, type_equal
from .smo import diff_schemas
from .transformer import (
    DEFAULT_REGISTRY,
    ConverterRegistry,
    ObjectTransformer,
    generate_transformer,
    parse_transformer,
    render_transformer,
)


def content_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Release:
    number: int
    schemas: dict[str, ClassSchema]  # one version per class per release

    def __post_init__(self) -> None:
        if self.number < 1:
            raise ValueError(f"release numbers start at 1, got {self.number}")
        for name, schema in self.schemas.items():
            if schema.name != name:
                raise ValueError(f"release entry {name!r} holds schema named {schema.name!r}")


@dataclass(frozen=True)
class RegisteredTransformer:
    transformer: ObjectTransformer
    text: str
    digest: str
    dirty: bool = False  # produced this session; safe to write out
    user_modified: bool = False  # on-disk content drifted from the manifest digest


@dataclass(frozen=True)
class Repository:
    project_name: str
    releases: tuple[Release, ...] = ()
    handlers: dict[str, dict[tuple[int, int], RegisteredTransformer]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for position, release in enumerate(self.releases, start=1):
            if release.number != position:
                raise ValueError(
                    f"release numbers must increase by 1: expected {position}, got {release.number}"
                )
        histories: dict[str, int] = {}
        for release in self.releases:
            for name, schema in release.schemas.items():
                last = histories.get(name)
                if last is not None and schema.version not in (last, last + 1):
                    raise ValueError(
                        f"version tag of {name} jumps from {last} to {schema.version}"
                    )
                histories[name] = schema.version
        for class_name, entries in self.handlers.items():
            history = self.class_history(class_name)
            for from_version, to_version in entries:
                for v in (from_version, to_version):
                    if v not in history:
                        raise UnknownVersion(class_name, v)

    def latest_release(self) -> Release | None:
        return self.releases[-1] if self.releases else None

    def class_history(self, class_name: str) -> dict[int, ClassSchema]:
        history: dict[int, ClassSchema] = {}
        for release in self.releases:
            schema = release.schemas.get(class_name)
            if schema is not None:
                history[schema.version] = schema
        return history

    def latest_version(self, class_name: str) -> int | None:
        history = self.class_history(class_name)
        return max(history) if history else None

    def schema_for(self, class_name: str, version: int) -> ClassSchema:
        history = self.class_history(class_name)
        if not history:
            raise UnknownClass(class_name)
        if version not in history:
            raise UnknownVersion(class_name, version)
        return history[version]

    def handlers_for(self, class_name: str) -> dict[tuple[int, int], ObjectTransformer] | None:
        entries = self.handlers.get(class_name)
        if entries is None:
            return None
        return {pair: entry.transformer for pair, entry in entries.items()}

    def transformer_pairs(self, class_name: str) -> frozenset[tuple[int, int]]:
        return frozenset(self.handlers.get(class_name, {}))


def empty_repository(project_name: str) -> Repository:
    return Repository(project_name)


# ---------------------------------------------------------------------------
# The release operation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReleaseReport:
    noop: bool
    number: int
    classes: tuple[tuple[str, int], ...] = ()  # (name, version) in the new release
    bumped: tuple[tuple[str, int, int], ...] = ()
    added: tuple[str, ...] = ()
    removed: tuple[str, ...] = ()
    stubs: tuple[tuple[str, int, int], ...] = ()

    def render(self) -> str:
        if self.noop:
            return "no-op\n"
        lines = [f"release {self.number}"]
        lines += [f"class {name} version {version}" for name, version in self.classes]
        lines += [f"stub {name} {a} {b}" for name, a, b in self.stubs]
        lines += [f"removed class {name}" for name in self.removed]
        return "\n".join(lines) + "\n"


def schemas_equivalent(a: ClassSchema, b: ClassSchema) -> bool:
    """Same generic parameters, attribute sequence (modulo default
    attachment), and invariant; version tags are not compared."""
    if a.generic_params != b.generic_params:
        return False
    if len(a.attributes) != len(b.attributes):
        return False
    for attr_a, attr_b in zip(a.attributes, b.attributes):
        if attr_a.name != attr_b.name or not type_equal(attr_a.declared_type, attr_b.declared_type):
            return False
    return a.invariant == b.invariant


def release(
    repo: Repository,
    working_set: dict[str, ClassSchema],
    registry: ConverterRegistry = DEFAULT_REGISTRY,
) -> tuple[Repository, ReleaseReport]:
    """Compare the working set against the latest release and cut a new one.

    Changed classes get their tag bumped by 1 and a forward transformer stub
    (previous -> new version) unless one is already registered; unchanged
    classes keep their tag; new classes enter at tag 1. An unchanged working
    set is a no-op.
    """
    previous = repo.latest_release()
    new_schemas: dict[str, ClassSchema] = {}
    bumped: list[tuple[str, int, int]] = []
    added: list[str] = []
    for name in sorted(working_set):
        schema = working_set[name]
        if schema.name != name:
            raise ValueError(f"working-set entry {name!r} holds schema named {schema.name!r}")
        last_version = repo.latest_version(name)
        if last_version is None:
            if schema.version != 1:
                raise VersionTagTamper(name)
            new_schemas[name] = schema
            added.append(name)
            continue
        last_schema = repo.schema_for(name, last_version)
        changed = not schemas_equivalent(last_schema, schema)
        if schema.version == last_version:
            pass
        elif schema.version == last_version + 1 and changed:
            pass
        else:
            raise VersionTagTamper(name)
        if changed:
            new_schemas[name] = schema.with_version(last_version + 1)
            bumped.append((name, last_version, last_version + 1))
        else:
            new_schemas[name] = last_schema
    removed = tuple(
        sorted(name for name in (previous.schemas if previous else {}) if name not in working_set)
    )
    if not bumped and not added and not removed:
        return repo, ReleaseReport(noop=True, number=previous.number if previous else 0)

    number = (previous.number if previous else 0) + 1
    handlers = {name: dict(entries) for name, entries in repo.handlers.items()}
    stubs: list[tuple[str, int, int]] = []
    for name, old_version, new_version in bumped:
        entries = handlers.setdefault(name, {})
        if (old_version, new_version) in entries:
            continue  # never overwrite an existing transformer
        transformation = diff_schemas(repo.schema_for(name, old_version), new_schemas[name])
        stub = generate_transformer(transformation, registry)
        text = render_transformer(stub)
        entries[(old_version, new_version)] = RegisteredTransformer(
            stub, text, content_digest(text), dirty=True
        )
        stubs.append((name, old_version, new_version))
    new_repo = Repository(
        repo.project_name, repo.releases + (Release(number, new_schemas),), handlers
    )
    report = ReleaseReport(
        noop=False,
        number=number,
        classes=tuple((name, new_schemas[name].version) for name in sorted(new_schemas)),
        bumped=tuple(bumped),
        added=tuple(added),
        removed=removed,
        stubs=tuple(stubs),
    )
    return new_repo, report


def register_transformer(
    repo: Repository, t: ObjectTransformer, *, overwrite: bool = False
) -> Repository:
    """Add a transformer (either direction) to its class's handler set."""
    history = repo.class_history(t.class_name)
    for v in (t.from_version, t.to_version):
        if v not in history:
            raise UnknownVersion(t.class_name, v)
    pair = (t.from_version, t.to_version)
    entries = dict(repo.handlers.get(t.class_name, {}))
    if pair in entries and not overwrite:
        raise OverwriteRefused(t.class_name, t.from_version, t.to_version)
    text = render_transformer(t)
    entries[pair] = RegisteredTransformer(t, text, content_digest(text), dirty=True)
    handlers = {name: dict(e) for name, e in repo.handlers.items()}
    handlers[t.class_name] = entries
    return Repository(repo.project_name, repo.releases, handlers)


def apply_filter(schema: ClassSchema, keep: set[str]) -> ClassSchema:
    """Restrict a schema to the attributes chosen for the serialized form."""
    names = set(schema.attribute_names())
    for name in sorted(keep):
        if name not in names:
            raise UnknownAttribute(name)
    for clause in schema.invariant.clauses:
        for node in exprs.walk(clause.body):
            if isinstance(node, exprs.AttrRef) and node.name not in keep:
                raise InvariantNeedsFilteredAttribute(clause.tag, node.name)
    kept = tuple(a for a in schema.attributes if a.name in keep)
    return schema.with_attributes(kept)


# ---------------------------------------------------------------------------
# Disk format
# ---------------------------------------------------------------------------

_MANIFEST = "escher.manifest"
_RELEASE_RE = re.compile(r"release\s+(\d+)\s*\Z")
_CLASS_RE = re.compile(r"class\s+([A-Za-z_][A-Za-z0-9_]*)\s+version\s+(\d+)\s*\Z")
_TRANSFORMER_RE = re.compile(
    r"transformer\s+([A-Za-z_][A-Za-z0-9_]*)\s+(\d+)\s+(\d+)\s+([0-9a-f]+)\s*\Z"
)
_HANDLER_FILE_RE = re.compile(r"(\d+)_to_(\d+)\.est\Z")


def render_manifest(repo: Repository) -> str:
    lines: list[str] = []
    for rel in repo.releases:
        lines.append(f"release {rel.number}")
        for name in sorted(rel.schemas):
            lines.append(f"class {name} version {rel.schemas[name].version}")
    for class_name in sorted(repo.handlers):
        for (a, b) in sorted(repo.handlers[class_name]):
            entry = repo.handlers[class_name][(a, b)]
            lines.append(f"transformer {class_name} {a} {b} {entry.digest}")
    return "\n".join(lines) + "\n" if lines else ""


def load_repository(project_dir: str | Path) -> Repository:
    """Read a project directory back into memory.

    The manifest is authoritative for releases; handler files are picked up
    from disk even when unlisted, so a hand-written ``.est`` dropped into
    ``handlers/<CLASS>/`` is immediately usable.
    """
    project_dir = Path(project_dir)
    manifest_path = project_dir / _MANIFEST
    manifest_digests: dict[tuple[str, int, int], str] = {}
    releases: list[Release] = []
    for lineno, raw in enumerate(manifest_path.read_text(encoding="utf-8").split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("--"):
            continue
        if m := _RELEASE_RE.match(line):
            releases.append(Release(int(m.group(1)), {}))
            continue
        if m := _CLASS_RE.match(line):
            if not releases:
                raise FormatError(lineno, "class line before any release line")
            name, version = m.group(1), int(m.group(2))
            path = project_dir / "releases" / str(releases[-1].number) / f"{name}.esc"
            schema = parse_schema(path.read_text(encoding="utf-8"))
            if schema.name != name or schema.version != version:
                raise FormatError(
                    lineno, f"{path} does not match manifest entry {name} version {version}"
                )
            releases[-1].schemas[name] = schema
            continue
        if m := _TRANSFORMER_RE.match(line):
            manifest_digests[(m.group(1), int(m.group(2)), int(m.group(3)))] = m.group(4)
            continue
        raise FormatError(lineno, f"unrecognized manifest line {line!r}")

    handlers: dict[str, dict[tuple[int, int], RegisteredTransformer]] = {}
    handlers_dir = project_dir / "handlers"
    if handlers_dir.is_dir():
        for class_dir in sorted(p for p in handlers_dir.iterdir() if p.is_dir()):
            entries = handlers.setdefault(class_dir.name, {})
            for est in sorted(class_dir.glob("*.est")):
                m = _HANDLER_FILE_RE.match(est.name)
                if m is None:
                    raise FormatError(0, f"handler file {est} is not named <from>_to_<to>.est")
                text = est.read_text(encoding="utf-8")
                t = parse_transformer(text)
                pair = (int(m.group(1)), int(m.group(2)))
                if t.class_name != class_dir.name or (t.from_version, t.to_version) != pair:
                    raise FormatError(0, f"handler file {est} disagrees with its header")
                digest = content_digest(text)
                recorded = manifest_digests.get((class_dir.name, *pair))
                handlers[class_dir.name][pair] = RegisteredTransformer(
                    t, text, digest, user_modified=recorded is not None and recorded != digest
                )
    return Repository(project_dir.name, tuple(releases), handlers)


def save_repository(repo: Repository, project_dir: str | Path) -> None:
    """Write manifest, release schemas, and handler files.

    Handler files produced in this session (``dirty``) are written out;
    anything else on disk is left untouched unless missing entirely, so user
    edits survive.
    """
    project_dir = Path(project_dir)
    project_dir.mkdir(parents=True, exist_ok=True)
    (project_dir / _MANIFEST).write_text(render_manifest(repo), encoding="utf-8")
    for rel in repo.releases:
        rel_dir = project_dir / "releases" / str(rel.number)
        rel_dir.mkdir(parents=True, exist_ok=True)
        for name in sorted(rel.schemas):
            (rel_dir / f"{name}.esc").write_text(render_schema(rel.schemas[name]), encoding="utf-8")
    for class_name in sorted(repo.handlers):
        class_dir = project_dir / "handlers" / class_name
        class_dir.mkdir(parents=True, exist_ok=True)
        for (a, b), entry in sorted(repo.handlers[class_name].items()):
            path = class_dir / f"{a}_to_{b}.est"
            if entry.dirty or not path.exists():
                path.write_text(entry.text, encoding="utf-8")


@contextmanager
def project_lock(project_dir: str | Path, timeout: float = 10.0):
    """Advisory exclusive lock; concurrent invocations wait then give up."""
    path = Path(project_dir) / "escher.lock"
    deadline = time.monotonic() + timeout
    while True:
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            break
        except FileExistsError:
            if time.monotonic() > deadline:
                raise OSError(f"project is locked by another process ({path})")
            time.sleep(0.05)
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        path.unlink(missing_ok=True)
