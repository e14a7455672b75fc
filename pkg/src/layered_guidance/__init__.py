"""Layered security-guidance engine.

Parses control catalogs and profiles, resolves profiles into catalogs,
composes guidance layers with replacement semantics, tracks provenance,
diffs resolved outputs, propagates upstream edits downstream, and renders
reader-facing Markdown.
"""

from .changes import (
    ChangeEntry,
    ChangeSet,
    DependencyGraph,
    PropagationResult,
    build_graph,
    diff,
    propagate,
)
from .errors import (
    CycleDetected,
    DocumentSyntaxError,
    DuplicateControlId,
    DuplicatePartName,
    GuidanceError,
    InvalidUri,
    NotFound,
    RemovalMatchedNothing,
    ResolutionError,
    SchemaError,
    StatementNotFirst,
    StoreError,
    UnknownControlId,
    UnknownFixture,
    ValidationError,
)
from .fixtures import FIXTURE_NAMES, load_fixture, write_fixture_store
from .model import (
    AddDirective,
    Alteration,
    Catalog,
    Control,
    DocumentEnvelope,
    Finding,
    ImportDirective,
    Metadata,
    Part,
    Profile,
    RemoveDirective,
    find_control,
    has_errors,
    iter_controls,
    validate_catalog,
    validate_profile,
)
from .render import RenderOptions, render_markdown
from .resolver import (
    ProvenanceEntry,
    ResolvedCatalog,
    SourceStore,
    apply_alteration,
    detect_cycles,
    resolve,
    resolve_chain,
    wrap_catalog,
)
from .serialize import parse_document, serialize_document

__version__ = "0.1.0"

__all__ = [
    "AddDirective",
    "Alteration",
    "Catalog",
    "ChangeEntry",
    "ChangeSet",
    "Control",
    "CycleDetected",
    "DependencyGraph",
    "DocumentEnvelope",
    "DocumentSyntaxError",
    "DuplicateControlId",
    "DuplicatePartName",
    "FIXTURE_NAMES",
    "Finding",
    "GuidanceError",
    "ImportDirective",
    "InvalidUri",
    "Metadata",
    "NotFound",
    "Part",
    "Profile",
    "PropagationResult",
    "ProvenanceEntry",
    "RemovalMatchedNothing",
    "RemoveDirective",
    "RenderOptions",
    "ResolutionError",
    "ResolvedCatalog",
    "SchemaError",
    "SourceStore",
    "StatementNotFirst",
    "StoreError",
    "UnknownControlId",
    "UnknownFixture",
    "ValidationError",
    "apply_alteration",
    "build_graph",
    "detect_cycles",
    "diff",
    "find_control",
    "has_errors",
    "iter_controls",
    "load_fixture",
    "parse_document",
    "propagate",
    "render_markdown",
    "resolve",
    "resolve_chain",
    "serialize_document",
    "validate_catalog",
    "validate_profile",
    "wrap_catalog",
    "write_fixture_store",
]
