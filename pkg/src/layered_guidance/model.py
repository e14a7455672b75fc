"""Document object model for layered guidance catalogs and profiles.

A catalog is a hierarchy of controls, each carrying ordered prose parts.
A profile imports controls from source documents and alters their parts.
All types are immutable after construction and safe to share across tasks.

Validation is data, not control flow: ``validate_catalog`` and
``validate_profile`` return findings instead of raising, and only
error-severity findings block resolution.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field

IDENTIFIER_RE = re.compile(r"[a-z][a-z0-9._-]*", re.IGNORECASE)

STATEMENT_PART = "statement"
INCLUDE_ALL = "all"

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Part:
    """A named prose block inside a control.

    Names are stored lowercase; classifiers keep their authored case
    (e.g. ``OT-specific-guidance``).
    """

    name: str
    prose: str
    classifier: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", self.name.lower())


@dataclass(frozen=True)
class Control:
    """One security outcome with ordered parts and child controls."""

    id: str
    classifier: str | None = None
    parts: tuple[Part, ...] = ()
    children: tuple[Control, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "id", self.id.lower())
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "children", tuple(self.children))

    def part(self, name: str) -> Part | None:
        lowered = name.lower()
        for part in self.parts:
            if part.name == lowered:
                return part
        return None


@dataclass(frozen=True)
class Metadata:
    title: str
    version: str


@dataclass(frozen=True)
class Catalog:
    """A source or resolved collection of controls.

    ``uri`` records where the document was loaded from (store-relative
    path) and is excluded from structural equality.
    """

    metadata: Metadata
    controls: tuple[Control, ...] = ()
    uri: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "controls", tuple(self.controls))


@dataclass(frozen=True)
class RemoveDirective:
    """Deletes every part matched by exactly one selector."""

    by_name: str | None = None
    by_class: str | None = None

    def __post_init__(self) -> None:
        if self.by_name is not None:
            object.__setattr__(self, "by_name", self.by_name.lower())

    def matches(self, part: Part) -> bool:
        if self.by_name is not None:
            return part.name == self.by_name
        if self.by_class is not None:
            return part.classifier == self.by_class
        return False

    def describe(self) -> tuple[str, str]:
        if self.by_name is not None:
            return "by-name", self.by_name
        if self.by_class is not None:
            return "by-class", self.by_class
        return "by-name", ""


@dataclass(frozen=True)
class AddDirective:
    """Appends parts to a control; only the ``ending`` position is supported."""

    parts: tuple[Part, ...]
    position: str = "ending"

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True)
class Alteration:
    """Removes, then adds, parts on one target control."""

    control_id: str
    removes: tuple[RemoveDirective, ...] = ()
    adds: tuple[AddDirective, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "control_id", self.control_id.lower())
        object.__setattr__(self, "removes", tuple(self.removes))
        object.__setattr__(self, "adds", tuple(self.adds))


@dataclass(frozen=True)
class ImportDirective:
    """Selects controls from one source document.

    ``include`` is either the string ``"all"`` or an explicit tuple of
    control ids; excluded ids prune whole subtrees.
    """

    source: str
    include: str | tuple[str, ...] = INCLUDE_ALL
    exclude: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.include, str):
            object.__setattr__(self, "include", tuple(i.lower() for i in self.include))
        object.__setattr__(self, "exclude", tuple(e.lower() for e in self.exclude))

    @property
    def include_all(self) -> bool:
        return isinstance(self.include, str) and self.include == INCLUDE_ALL


@dataclass(frozen=True)
class Profile:
    """An import-plus-alterations document transforming catalogs."""

    metadata: Metadata
    imports: tuple[ImportDirective, ...] = ()
    alterations: tuple[Alteration, ...] = ()
    uri: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "imports", tuple(self.imports))
        object.__setattr__(self, "alterations", tuple(self.alterations))


@dataclass(frozen=True)
class DocumentEnvelope:
    """A parsed document: exactly one of a catalog or a profile."""

    kind: str  # "catalog" | "profile"
    body: Catalog | Profile


@dataclass(frozen=True)
class Finding:
    severity: str  # ERROR | WARNING
    path: str
    message: str


ValidationReport = list[Finding]


def has_errors(report: Iterable[Finding]) -> bool:
    return any(f.severity == ERROR for f in report)


def _valid_identifier(value: str) -> bool:
    return bool(IDENTIFIER_RE.fullmatch(value))


def iter_controls(controls: Iterable[Control]) -> Iterator[Control]:
    """Depth-first, document-order walk over a control forest."""
    for control in controls:
        yield control
        yield from iter_controls(control.children)


def find_control(catalog: Catalog, control_id: str) -> Control | None:
    """Return the control with ``control_id`` anywhere in the tree, or None."""
    lowered = control_id.lower()
    for control in iter_controls(catalog.controls):
        if control.id == lowered:
            return control
    return None


def _validate_part(part: Part, path: str, findings: ValidationReport) -> None:
    if not part.name:
        findings.append(Finding(ERROR, path, "part name is empty"))
    elif not _valid_identifier(part.name):
        findings.append(Finding(ERROR, path, f"part name {part.name!r} is not a valid identifier"))
    if part.classifier is not None and not _valid_identifier(part.classifier):
        findings.append(
            Finding(ERROR, path, f"part class {part.classifier!r} is not a valid identifier")
        )
    if not part.prose.strip():
        findings.append(Finding(ERROR, path, "part prose is empty"))


def _validate_control(control: Control, path: str, seen_ids: dict[str, str],
                      findings: ValidationReport) -> None:
    if not control.id:
        findings.append(Finding(ERROR, path, "control id is empty"))
    elif not _valid_identifier(control.id):
        findings.append(Finding(ERROR, path, f"control id {control.id!r} is not a valid identifier"))
    if control.id in seen_ids:
        findings.append(
            Finding(ERROR, path, f"duplicate control id {control.id!r} (also at {seen_ids[control.id]})")
        )
    else:
        seen_ids[control.id] = path
    if control.classifier is not None and not _valid_identifier(control.classifier):
        findings.append(
            Finding(ERROR, path, f"control class {control.classifier!r} is not a valid identifier")
        )

    part_names: set[str] = set()
    for index, part in enumerate(control.parts):
        part_path = f"{path}/parts/{index}"
        _validate_part(part, part_path, findings)
        if part.name in part_names:
            findings.append(Finding(ERROR, part_path, f"duplicate part name {part.name!r}"))
        part_names.add(part.name)
        if part.name == STATEMENT_PART and index != 0:
            findings.append(Finding(ERROR, part_path, "statement must be first"))

    for child in control.children:
        _validate_control(child, f"{path}/children/{child.id}", seen_ids, findings)


def validate_catalog(catalog: Catalog) -> ValidationReport:
    """Check every catalog invariant; an empty report means the catalog is valid."""
    findings: ValidationReport = []
    if not catalog.metadata.title.strip():
        findings.append(Finding(WARNING, "metadata/title", "title is empty"))
    if not catalog.metadata.version.strip():
        findings.append(Finding(WARNING, "metadata/version", "version is empty"))
    seen_ids: dict[str, str] = {}
    for control in catalog.controls:
        _validate_control(control, f"controls/{control.id}", seen_ids, findings)
    return findings


def profile_structure_findings(profile: Profile) -> ValidationReport:
    """Invariant checks that need no resolved sources (used by the parser too)."""
    findings: ValidationReport = []
    if not profile.metadata.title.strip():
        findings.append(Finding(WARNING, "metadata/title", "title is empty"))
    if not profile.metadata.version.strip():
        findings.append(Finding(WARNING, "metadata/version", "version is empty"))
    if not profile.imports:
        findings.append(Finding(ERROR, "imports", "profile must import at least one source"))

    for index, imp in enumerate(profile.imports):
        path = f"imports/{index}"
        if not imp.source:
            findings.append(Finding(ERROR, path, "import source is empty"))
        if not imp.include_all:
            for cid in imp.include:
                if not _valid_identifier(cid):
                    findings.append(Finding(ERROR, path, f"include id {cid!r} is not a valid identifier"))
            overlap = sorted(set(imp.include) & set(imp.exclude))
            if overlap:
                findings.append(
                    Finding(ERROR, path, f"include and exclude overlap: {', '.join(overlap)}")
                )
        for cid in imp.exclude:
            if not _valid_identifier(cid):
                findings.append(Finding(ERROR, path, f"exclude id {cid!r} is not a valid identifier"))

    seen_targets: set[str] = set()
    for alteration in profile.alterations:
        path = f"alterations/{alteration.control_id}"
        if not _valid_identifier(alteration.control_id):
            findings.append(
                Finding(ERROR, path, f"control-id {alteration.control_id!r} is not a valid identifier")
            )
        if alteration.control_id in seen_targets:
            findings.append(
                Finding(ERROR, path, f"duplicate alteration for control {alteration.control_id!r}")
            )
        seen_targets.add(alteration.control_id)
        if not alteration.removes and not alteration.adds:
            findings.append(Finding(ERROR, path, "alteration has no removes and no adds"))
        for rindex, remove in enumerate(alteration.removes):
            rpath = f"{path}/removes/{rindex}"
            populated = sum(1 for sel in (remove.by_name, remove.by_class) if sel is not None)
            if populated != 1:
                findings.append(Finding(ERROR, rpath, "exactly one selector must be populated"))
        for aindex, add in enumerate(alteration.adds):
            apath = f"{path}/adds/{aindex}"
            if not add.parts:
                findings.append(Finding(ERROR, apath, "add directive has no parts"))
            if add.position != "ending":
                findings.append(Finding(ERROR, apath, f"unsupported position {add.position!r}"))
            names: set[str] = set()
            for pindex, part in enumerate(add.parts):
                ppath = f"{apath}/parts/{pindex}"
                _validate_part(part, ppath, findings)
                if part.name in names:
                    findings.append(Finding(ERROR, ppath, f"duplicate part name {part.name!r}"))
                names.add(part.name)
    return findings


def _collect_selection(catalog: Catalog, directive: ImportDirective,
                       findings: ValidationReport, path: str) -> list[Control]:
    """Simulate one import's selection, reporting include/exclude misses.

    Mirrors the resolver's documented selection semantics but is
    implemented independently, so validation works as a true preflight.
    Returns the selected subtree roots with exclusions pruned.
    """
    exclude = set(directive.exclude)
    roots: list[Control] = []

    def pruned(control: Control) -> Control | None:
        if control.id in exclude:
            return None
        kept = tuple(c for child in control.children if (c := pruned(child)) is not None)
        return Control(control.id, control.classifier, control.parts, kept)

    if directive.include_all:
        for control in catalog.controls:
            kept = pruned(control)
            if kept is not None:
                roots.append(kept)
    else:
        wanted = set(directive.include)
        matched: set[str] = set()

        def walk(control: Control) -> None:
            if control.id in exclude:
                return
            if control.id in wanted:
                kept = pruned(control)
                if kept is not None:
                    roots.append(kept)
                    matched.add(control.id)
                return
            for child in control.children:
                walk(child)

        for control in catalog.controls:
            walk(control)
        for cid in directive.include:
            if cid not in matched:
                findings.append(Finding(WARNING, path, f"include id {cid!r} matched nothing"))

    present = {c.id for c in iter_controls(catalog.controls)}
    for cid in directive.exclude:
        if cid not in present:
            findings.append(Finding(WARNING, path, f"exclude id {cid!r} matched nothing"))
    return roots


def validate_profile(profile: Profile, resolved_sources: Sequence[Catalog]) -> ValidationReport:
    """Preflight a profile against its already-resolved sources.

    An empty report guarantees that strict resolution will succeed; any
    error-severity finding corresponds to a resolution failure.
    """
    findings = profile_structure_findings(profile)

    # Pair sources with import directives the way the resolver does: by uri
    # when one matches, positionally when the counts line up.
    by_uri = {source.uri: source for source in resolved_sources if source.uri}
    paired: list[tuple[ImportDirective, Catalog]] = []
    for index, directive in enumerate(profile.imports):
        if directive.source in by_uri:
            paired.append((directive, by_uri[directive.source]))
        elif len(resolved_sources) == len(profile.imports):
            paired.append((directive, resolved_sources[index]))
        else:
            findings.append(
                Finding(ERROR, f"imports/{index}",
                        f"no source supplied for import {directive.source!r}")
            )
    if len(paired) != len(profile.imports):
        return findings

    selected: dict[str, Control] = {}
    selected_from: dict[str, str] = {}
    for index, (directive, source) in enumerate(paired):
        path = f"imports/{index}"
        source_uri = source.uri or directive.source
        roots = _collect_selection(source, directive, findings, path)
        for root in roots:
            if selected_from.get(root.id) == source_uri:
                continue  # the same source re-selected an already-present root
            for control in iter_controls([root]):
                if control.id in selected:
                    findings.append(
                        Finding(ERROR, path, f"duplicate control id {control.id!r} in selection")
                    )
                else:
                    selected[control.id] = control
                    selected_from[control.id] = source_uri

    for alteration in profile.alterations:
        path = f"alterations/{alteration.control_id}"
        target = selected.get(alteration.control_id)
        if target is None:
            findings.append(
                Finding(ERROR, path, f"unknown control id {alteration.control_id!r}")
            )
            continue
        surviving = list(target.parts)
        for rindex, remove in enumerate(alteration.removes):
            matched = [p for p in surviving if remove.matches(p)]
            if not matched:
                kind, value = remove.describe()
                findings.append(
                    Finding(
                        ERROR,
                        f"{path}/removes/{rindex}",
                        f"removal matched nothing ({kind} {value!r})",
                    )
                )
            surviving = [p for p in surviving if not remove.matches(p)]
        for aindex, add in enumerate(alteration.adds):
            for part in add.parts:
                if any(p.name == part.name for p in surviving):
                    findings.append(
                        Finding(
                            ERROR,
                            f"{path}/adds/{aindex}",
                            f"duplicate part name {part.name!r}",
                        )
                    )
                else:
                    surviving.append(part)
        for index, part in enumerate(surviving):
            if part.name == STATEMENT_PART and index != 0:
                findings.append(Finding(ERROR, path, "statement must be first"))
    return findings
