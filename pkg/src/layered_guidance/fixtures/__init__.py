"""Embedded reference corpus: the CSF ID.AM catalog and the OT and AM profiles.

The three documents form the linear layering chain the engine is built
around: the additive manufacturing profile refines the operational
technology profile, which refines the base framework catalog. Guidance
prose that the upstream publications print only partially ends with the
marker sentence ``[condensed in source paper]``.

The same files ship under ``fixtures/`` at the repository root for use as
a CLI store; both copies are byte-identical.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..errors import UnknownFixture
from ..model import DocumentEnvelope
from ..serialize import parse_document

FIXTURE_NAMES = ("csf-id-am", "ot-profile", "am-profile")


def fixture_uri(name: str) -> str:
    if name not in FIXTURE_NAMES:
        raise UnknownFixture(name)
    return f"{name}.yaml"


def fixture_bytes(name: str) -> bytes:
    """Canonical YAML bytes of one embedded fixture."""
    uri = fixture_uri(name)
    return resources.files(__package__).joinpath(uri).read_bytes()


def load_fixture(name: str) -> DocumentEnvelope:
    """Parse and validate one embedded fixture by name."""
    return parse_document(fixture_bytes(name), "yaml")


def write_fixture_store(directory: str | Path) -> Path:
    """Materialize the whole corpus into a directory usable as a store."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for name in FIXTURE_NAMES:
        (root / fixture_uri(name)).write_bytes(fixture_bytes(name))
    return root
