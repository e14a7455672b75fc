"""Parsing and canonical serialization of guidance documents.

Documents are YAML or JSON with a single top-level ``catalog:`` or
``profile:`` key. Parsing is strict: unknown keys, wrong types, and missing
required fields are schema errors; model-invariant violations raise
``ValidationError``.

Serialization is canonical so output is byte-stable and diff-friendly:
UTF-8, LF endings, 2-space indent, block style only, fixed key order per
type, defaults omitted, and prose longer than 80 columns emitted as a
folded scalar where the text permits it (otherwise a quoted scalar).
"""

from __future__ import annotations

import json
import re
from typing import Any

import yaml

from .errors import DocumentSyntaxError, SchemaError, ValidationError
from .model import (
    AddDirective,
    Alteration,
    Catalog,
    Control,
    DocumentEnvelope,
    ImportDirective,
    Metadata,
    Part,
    Profile,
    RemoveDirective,
    has_errors,
    profile_structure_findings,
    validate_catalog,
)

YAML = "yaml"
JSON = "json"
AUTO = "auto"

_WRAP_COLUMN = 80


# ---------------------------------------------------------------------------
# Parsing


class _StrictLoader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate and non-string mapping keys."""


def _construct_mapping(loader: _StrictLoader, node: yaml.MappingNode, deep: bool = False) -> dict:
    mapping: dict = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=deep)
        mark = key_node.start_mark
        if not isinstance(key, str):
            raise SchemaError(
                f"mapping key must be a string (line {mark.line + 1}, column {mark.column + 1})"
            )
        if key in mapping:
            raise SchemaError(
                f"duplicate key {key!r} (line {mark.line + 1}, column {mark.column + 1})"
            )
        mapping[key] = loader.construct_object(value_node, deep=deep)
    return mapping


_StrictLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping
)


def _load_yaml(text: str) -> Any:
    try:
        return yaml.load(text, Loader=_StrictLoader)
    except SchemaError:
        raise
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        column = mark.column + 1 if mark else None
        raise DocumentSyntaxError(exc.problem or str(exc), line, column) from exc
    except yaml.YAMLError as exc:
        raise DocumentSyntaxError(str(exc)) from exc


def _json_pairs(pairs: list[tuple[str, Any]]) -> dict:
    mapping: dict = {}
    for key, value in pairs:
        if key in mapping:
            raise SchemaError(f"duplicate key {key!r}")
        mapping[key] = value
    return mapping


def _load_json(text: str) -> Any:
    try:
        return json.loads(text, object_pairs_hook=_json_pairs)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError(exc.msg, exc.lineno, exc.colno) from exc


def _expect_mapping(value: Any, path: str, required: set[str],
                    optional: set[str] = frozenset()) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"expected a mapping, got {type(value).__name__}", path)
    allowed = required | optional
    for key in value:
        if key not in allowed:
            raise SchemaError(f"unknown key {key!r}", path)
    for key in sorted(required):
        if key not in value:
            raise SchemaError(f"missing required key {key!r}", path)
    return value


def _expect_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"expected a string, got {type(value).__name__}", path)
    return value


def _expect_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"expected a list, got {type(value).__name__}", path)
    return value


def _build_metadata(value: Any, path: str) -> Metadata:
    mapping = _expect_mapping(value, path, required={"title", "version"})
    return Metadata(
        title=_expect_str(mapping["title"], f"{path}/title"),
        version=_expect_str(mapping["version"], f"{path}/version"),
    )


def _build_part(value: Any, path: str) -> Part:
    mapping = _expect_mapping(value, path, required={"name", "prose"}, optional={"class"})
    classifier = None
    if "class" in mapping:
        classifier = _expect_str(mapping["class"], f"{path}/class")
    return Part(
        name=_expect_str(mapping["name"], f"{path}/name"),
        prose=_expect_str(mapping["prose"], f"{path}/prose"),
        classifier=classifier,
    )


def _build_control(value: Any, path: str) -> Control:
    mapping = _expect_mapping(
        value, path, required={"id"}, optional={"class", "parts", "children"}
    )
    classifier = None
    if "class" in mapping:
        classifier = _expect_str(mapping["class"], f"{path}/class")
    parts = tuple(
        _build_part(item, f"{path}/parts/{index}")
        for index, item in enumerate(_expect_list(mapping.get("parts", []), f"{path}/parts"))
    )
    children = tuple(
        _build_control(item, f"{path}/children/{index}")
        for index, item in enumerate(_expect_list(mapping.get("children", []), f"{path}/children"))
    )
    return Control(
        id=_expect_str(mapping["id"], f"{path}/id"),
        classifier=classifier,
        parts=parts,
        children=children,
    )


def _build_catalog(value: Any, path: str) -> Catalog:
    mapping = _expect_mapping(value, path, required={"metadata"}, optional={"controls"})
    controls = tuple(
        _build_control(item, f"{path}/controls/{index}")
        for index, item in enumerate(_expect_list(mapping.get("controls", []), f"{path}/controls"))
    )
    return Catalog(metadata=_build_metadata(mapping["metadata"], f"{path}/metadata"),
                   controls=controls)


def _build_import(value: Any, path: str) -> ImportDirective:
    mapping = _expect_mapping(value, path, required={"source"}, optional={"include", "exclude"})
    include: str | tuple[str, ...] = "all"
    if "include" in mapping:
        raw = mapping["include"]
        if isinstance(raw, str):
            if raw != "all":
                raise SchemaError(
                    f"include must be \"all\" or a list of control ids, got {raw!r}",
                    f"{path}/include",
                )
        else:
            items = _expect_list(raw, f"{path}/include")
            include = tuple(
                _expect_str(item, f"{path}/include/{index}") for index, item in enumerate(items)
            )
    exclude = tuple(
        _expect_str(item, f"{path}/exclude/{index}")
        for index, item in enumerate(_expect_list(mapping.get("exclude", []), f"{path}/exclude"))
    )
    return ImportDirective(
        source=_expect_str(mapping["source"], f"{path}/source"),
        include=include,
        exclude=exclude,
    )


def _build_remove(value: Any, path: str) -> RemoveDirective:
    mapping = _expect_mapping(value, path, required=set(), optional={"by-name", "by-class"})
    if len(mapping) != 1:
        raise SchemaError("exactly one of by-name/by-class must be given", path)
    if "by-name" in mapping:
        return RemoveDirective(by_name=_expect_str(mapping["by-name"], f"{path}/by-name"))
    return RemoveDirective(by_class=_expect_str(mapping["by-class"], f"{path}/by-class"))


def _build_add(value: Any, path: str) -> AddDirective:
    mapping = _expect_mapping(value, path, required={"parts"}, optional={"position"})
    position = "ending"
    if "position" in mapping:
        position = _expect_str(mapping["position"], f"{path}/position")
        if position != "ending":
            raise SchemaError(f"unsupported position {position!r}", f"{path}/position")
    parts = tuple(
        _build_part(item, f"{path}/parts/{index}")
        for index, item in enumerate(_expect_list(mapping["parts"], f"{path}/parts"))
    )
    return AddDirective(parts=parts, position=position)


def _build_alteration(value: Any, path: str) -> Alteration:
    mapping = _expect_mapping(value, path, required={"control-id"}, optional={"removes", "adds"})
    removes = tuple(
        _build_remove(item, f"{path}/removes/{index}")
        for index, item in enumerate(_expect_list(mapping.get("removes", []), f"{path}/removes"))
    )
    adds = tuple(
        _build_add(item, f"{path}/adds/{index}")
        for index, item in enumerate(_expect_list(mapping.get("adds", []), f"{path}/adds"))
    )
    return Alteration(
        control_id=_expect_str(mapping["control-id"], f"{path}/control-id"),
        removes=removes,
        adds=adds,
    )


def _build_profile(value: Any, path: str) -> Profile:
    mapping = _expect_mapping(
        value, path, required={"metadata", "imports"}, optional={"alterations"}
    )
    imports = tuple(
        _build_import(item, f"{path}/imports/{index}")
        for index, item in enumerate(_expect_list(mapping["imports"], f"{path}/imports"))
    )
    alterations = tuple(
        _build_alteration(item, f"{path}/alterations/{index}")
        for index, item in enumerate(
            _expect_list(mapping.get("alterations", []), f"{path}/alterations")
        )
    )
    return Profile(
        metadata=_build_metadata(mapping["metadata"], f"{path}/metadata"),
        imports=imports,
        alterations=alterations,
    )


def parse_document(text: bytes | str, format: str = AUTO) -> DocumentEnvelope:
    """Parse and validate one document; returns its envelope.

    ``format`` is ``yaml``, ``json``, or ``auto`` (sniffed: a leading ``{``
    means JSON).
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DocumentSyntaxError(f"invalid UTF-8: {exc}") from exc
    if format == AUTO:
        format = JSON if text.lstrip()[:1] == "{" else YAML
    if format == JSON:
        raw = _load_json(text)
    elif format == YAML:
        raw = _load_yaml(text)
    else:
        raise ValueError(f"unknown format {format!r}")

    if not isinstance(raw, dict):
        raise SchemaError(f"top level must be a mapping, got {type(raw).__name__}")
    kinds = [key for key in ("catalog", "profile") if key in raw]
    unknown = [key for key in raw if key not in ("catalog", "profile")]
    if unknown:
        raise SchemaError(f"unknown key {unknown[0]!r}")
    if len(kinds) != 1:
        raise SchemaError("exactly one of 'catalog' or 'profile' must be present")
    kind = kinds[0]

    body: Catalog | Profile
    if kind == "catalog":
        body = _build_catalog(raw[kind], "catalog")
        findings = validate_catalog(body)
    else:
        body = _build_profile(raw[kind], "profile")
        findings = profile_structure_findings(body)
    if has_errors(findings):
        raise ValidationError(findings)
    return DocumentEnvelope(kind=kind, body=body)


# ---------------------------------------------------------------------------
# Canonical plain structure (dicts/lists/strings in fixed key order)


def _part_plain(part: Part) -> dict:
    plain: dict = {"name": part.name}
    if part.classifier is not None:
        plain["class"] = part.classifier
    plain["prose"] = part.prose
    return plain


def _control_plain(control: Control) -> dict:
    plain: dict = {"id": control.id}
    if control.classifier is not None:
        plain["class"] = control.classifier
    if control.parts:
        plain["parts"] = [_part_plain(p) for p in control.parts]
    if control.children:
        plain["children"] = [_control_plain(c) for c in control.children]
    return plain


def _metadata_plain(metadata: Metadata) -> dict:
    return {"title": metadata.title, "version": metadata.version}


def _catalog_plain(catalog: Catalog) -> dict:
    plain: dict = {"metadata": _metadata_plain(catalog.metadata)}
    if catalog.controls:
        plain["controls"] = [_control_plain(c) for c in catalog.controls]
    return plain


def _import_plain(directive: ImportDirective) -> dict:
    plain: dict = {"source": directive.source}
    plain["include"] = "all" if directive.include_all else list(directive.include)
    if directive.exclude:
        plain["exclude"] = list(directive.exclude)
    return plain


def _alteration_plain(alteration: Alteration) -> dict:
    plain: dict = {"control-id": alteration.control_id}
    if alteration.removes:
        removes = []
        for remove in alteration.removes:
            if remove.by_name is not None:
                removes.append({"by-name": remove.by_name})
            else:
                removes.append({"by-class": remove.by_class})
        plain["removes"] = removes
    if alteration.adds:
        plain["adds"] = [{"parts": [_part_plain(p) for p in add.parts]} for add in alteration.adds]
    return plain


def _profile_plain(profile: Profile) -> dict:
    plain: dict = {"metadata": _metadata_plain(profile.metadata)}
    plain["imports"] = [_import_plain(i) for i in profile.imports]
    if profile.alterations:
        plain["alterations"] = [_alteration_plain(a) for a in profile.alterations]
    return plain


def document_plain(doc: DocumentEnvelope) -> dict:
    """The canonical dict/list/str form of a document (fixed key order)."""
    if doc.kind == "catalog":
        return {"catalog": _catalog_plain(doc.body)}  # type: ignore[arg-type]
    return {"profile": _profile_plain(doc.body)}  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# Canonical YAML emission

_PLAIN_BODY_RE = re.compile(r"[A-Za-z_][^\x00-\x1f\x7f-\x9f  ]*")
# Words like these would be resolved to booleans/null by a YAML parser.
_AMBIGUOUS_PLAIN = {
    "true", "false", "yes", "no", "on", "off", "null", "none", "y", "n", "~",
}
_UNSAFE_WORD_RE = re.compile(r"[\x00-\x1f\x7f-\x9f  ]")


def _plain_safe(value: str) -> bool:
    if not value or value != value.strip():
        return False
    if not _PLAIN_BODY_RE.fullmatch(value):
        return False
    if ": " in value or value.endswith(":"):
        return False
    if " #" in value:
        return False
    if value.lower() in _AMBIGUOUS_PLAIN:
        return False
    return True


def _fold_safe(value: str) -> bool:
    words = value.split(" ")
    if len(words) < 2:
        return False
    for word in words:
        if not word or _UNSAFE_WORD_RE.search(word):
            return False
    return True


def _quote(value: str) -> str:
    out = ['"']
    for ch in value:
        code = ord(ch)
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif code < 0x20 or 0x7F <= code <= 0x9F or code in (0x2028, 0x2029, 0xFEFF):
            out.append(f"\\u{code:04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _wrap_words(words: list[str], width: int) -> list[str]:
    lines = [words[0]]
    for word in words[1:]:
        if len(lines[-1]) + 1 + len(word) <= width:
            lines[-1] += " " + word
        else:
            lines.append(word)
    return lines


def _emit_scalar(anchor: str, value: str, indent: int, lines: list[str]) -> None:
    """Emit ``<anchor> <scalar>`` at ``indent``; folds long prose when safe."""
    pad = " " * indent
    if len(value) > _WRAP_COLUMN and _fold_safe(value):
        lines.append(f"{pad}{anchor} >-")
        body_indent = indent + 2
        width = max(_WRAP_COLUMN - body_indent, 20)
        body_pad = " " * body_indent
        for line in _wrap_words(value.split(" "), width):
            lines.append(body_pad + line)
    elif _plain_safe(value):
        lines.append(f"{pad}{anchor} {value}")
    else:
        lines.append(f"{pad}{anchor} {_quote(value)}")


def _emit_mapping(mapping: dict, indent: int, lines: list[str]) -> None:
    pad = " " * indent
    for key, value in mapping.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            _emit_mapping(value, indent + 2, lines)
        elif isinstance(value, list):
            lines.append(f"{pad}{key}:")
            _emit_sequence(value, indent + 2, lines)
        else:
            _emit_scalar(f"{key}:", value, indent, lines)


def _emit_sequence(items: list, indent: int, lines: list[str]) -> None:
    pad = " " * indent
    for item in items:
        if isinstance(item, dict):
            sub: list[str] = []
            _emit_mapping(item, indent + 2, sub)
            sub[0] = f"{pad}- " + sub[0][indent + 2:]
            lines.extend(sub)
        elif isinstance(item, list):
            raise TypeError("nested sequences are not part of the document model")
        else:
            _emit_scalar("-", item, indent, lines)


def _emit_yaml(plain: dict) -> str:
    lines: list[str] = []
    _emit_mapping(plain, 0, lines)
    return "\n".join(lines) + "\n"


def serialize_document(doc: DocumentEnvelope, format: str = YAML) -> bytes:
    """Serialize to canonical bytes; re-parsing yields a structurally equal document."""
    plain = document_plain(doc)
    if format == YAML:
        return _emit_yaml(plain).encode("utf-8")
    if format == JSON:
        return (json.dumps(plain, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {format!r}")
