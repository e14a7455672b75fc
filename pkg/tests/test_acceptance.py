"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Property-based criteria run at the example counts the criteria
state (500 randomized documents/pairs, 100 randomized chains).
"""

from __future__ import annotations

import json
import shutil
import tempfile
import time
from collections import Counter
from pathlib import Path

from hypothesis import HealthCheck, given, settings

import strategies
from conftest import FIXTURES_DIR
from oracles import brute_force_diff, entry_tuples
from layered_guidance.changes import diff
from layered_guidance.cli import main
from layered_guidance.model import (
    Catalog,
    Control,
    DocumentEnvelope,
    ImportDirective,
    Metadata,
    Part,
    Profile,
    find_control,
)
from layered_guidance.resolver import SourceStore, resolve, resolve_chain
from layered_guidance.serialize import parse_document, serialize_document

BULK = settings(max_examples=500, deadline=None, suppress_health_check=list(HealthCheck))
CHAINS = settings(max_examples=100, deadline=None, suppress_health_check=list(HealthCheck))


def _report(criterion: int, description: str) -> None:
    print(f"acceptance criterion {criterion}: PASS - {description}")


def test_criterion_1_pipeline_reproduction(tmp_path):
    out = tmp_path / "out.yaml"
    started = time.monotonic()
    code = main(["resolve", "am-profile.yaml", "--store", str(FIXTURES_DIR), "-o", str(out)])
    elapsed = time.monotonic() - started
    assert code == 0
    assert elapsed < 1.0, f"resolution took {elapsed:.3f}s"

    catalog = parse_document(out.read_bytes()).body
    control = find_control(catalog, "id.am-3")
    assert [p.name for p in control.parts] == ["statement", "guidance", "am-specific"]
    assert [p.classifier for p in control.parts] == [
        "outcome", "supplemental-guidance", "Additive-specific-guidance",
    ]
    assert control.parts[0].prose.startswith(
        "Organizational communication and data flows are mapped"
    )
    assert control.parts[1].prose.startswith("Data flow diagrams enable a manufacturer")
    assert control.parts[2].prose.startswith("Data flow diagrams for AM processes")
    assert control.part("ot-specific") is None

    # the rest of the catalog passes through unchanged
    category = catalog.controls[0]
    assert category.id == "id.am"
    assert [c.id for c in category.children] == [f"id.am-{i}" for i in range(1, 7)]
    for child in category.children:
        if child.id != "id.am-3":
            assert [p.name for p in child.parts] == ["statement"]
    _report(1, f"am-profile resolution matches the worked example ({elapsed:.3f}s)")


def test_criterion_2_intermediate_ot_layer():
    store = SourceStore(FIXTURES_DIR)
    resolved = resolve_chain(store, "ot-profile.yaml")
    control = find_control(resolved.catalog, "id.am-3")
    assert [p.name for p in control.parts] == ["statement", "guidance", "ot-specific"]
    assert [p.classifier for p in control.parts] == [
        "outcome", "supplemental-guidance", "OT-specific-guidance",
    ]
    assert control.parts[2].prose.startswith("Organizations should consider the impact")
    _report(2, "ot-profile resolution matches the intermediate layer")


def test_criterion_3_staged_vs_chained():
    # fixture corpus first
    store = SourceStore(FIXTURES_DIR)
    chained = resolve_chain(store, "am-profile.yaml")
    intermediate = resolve_chain(store, "ot-profile.yaml")
    blob = serialize_document(DocumentEnvelope("catalog", intermediate.catalog), "yaml")
    staged = resolve([parse_document(blob).body], store.load("am-profile.yaml").body)
    assert staged.catalog == chained.catalog

    checked = 0

    @given(strategies.layered_chains())
    @CHAINS
    def run(chain):
        nonlocal checked
        base, p1, p2, _ = chain
        with tempfile.TemporaryDirectory() as root:
            store_dir = Path(root)
            (store_dir / "base.yaml").write_bytes(
                serialize_document(DocumentEnvelope("catalog", base), "yaml")
            )
            (store_dir / "p1.yaml").write_bytes(
                serialize_document(DocumentEnvelope("profile", p1), "yaml")
            )
            (store_dir / "p2.yaml").write_bytes(
                serialize_document(DocumentEnvelope("profile", p2), "yaml")
            )
            local = SourceStore(store_dir)
            full = resolve_chain(local, "p2.yaml")
            first = resolve_chain(local, "p1.yaml")
            dumped = serialize_document(DocumentEnvelope("catalog", first.catalog), "yaml")
            two_step = resolve([parse_document(dumped).body], local.load("p2.yaml").body)
            assert two_step.catalog == full.catalog
        checked += 1

    run()
    assert checked >= 100
    _report(3, f"staged equals chained on fixtures and {checked} randomized chains")


def test_criterion_4_identity_property():
    checked = 0

    @given(strategies.catalogs())
    @BULK
    def run(catalog):
        nonlocal checked
        catalog = Catalog(catalog.metadata, catalog.controls, uri="src.yaml")
        identity = Profile(metadata=Metadata("Identity", "1"),
                           imports=(ImportDirective("src.yaml"),))
        resolved = resolve([catalog], identity)
        assert resolved.catalog.controls == catalog.controls
        checked += 1

    run()
    assert checked >= 500
    _report(4, f"identity profile preserved {checked} randomized catalogs")


def test_criterion_5_round_trip_property():
    checked = 0

    @given(strategies.documents())
    @BULK
    def run(envelope):
        nonlocal checked
        for fmt in ("yaml", "json"):
            assert parse_document(serialize_document(envelope, fmt), fmt) == envelope
        checked += 1

    run()
    assert checked >= 500

    for name in ("csf-id-am.yaml", "ot-profile.yaml", "am-profile.yaml"):
        data = (FIXTURES_DIR / name).read_bytes()
        assert serialize_document(parse_document(data), "yaml") == data
    _report(5, f"parse/serialize identity on {checked} documents in both formats; goldens byte-stable")


def test_criterion_6_diff_oracle_equivalence():
    checked = 0

    @given(strategies.catalog_pairs())
    @BULK
    def run(pair):
        nonlocal checked
        before, after = pair
        assert Counter(entry_tuples(diff(before, after))) == Counter(brute_force_diff(before, after))
        assert diff(before, before).is_empty
        assert diff(after, after).is_empty
        checked += 1

    run()
    assert checked >= 500

    # deterministic single-character prose edit
    before = Catalog(Metadata("T", "1"), (Control("c1", parts=(Part("guidance", "abcd"),)),))
    after = Catalog(Metadata("T", "1"), (Control("c1", parts=(Part("guidance", "abXd"),)),))
    assert Counter(entry_tuples(diff(before, after))) == Counter(brute_force_diff(before, after))
    _report(6, f"diff matched the brute-force oracle on {checked} randomized pairs")


def test_criterion_7_change_propagation(tmp_path, capsys):
    store = tmp_path / "store"
    shutil.copytree(FIXTURES_DIR, store)
    assert main(["propagate", "--store", str(store), "--changed", "csf-id-am.yaml"]) == 0
    capsys.readouterr()

    path = store / "ot-profile.yaml"
    path.write_bytes(path.read_bytes().replace(b"understand the flow", b"chart the movement"))
    assert main(["propagate", "--store", str(store), "--changed", "ot-profile.yaml",
                 "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)

    assert [item["profile-uri"] for item in payload] == ["ot-profile.yaml", "am-profile.yaml"]
    am_changes = payload[1]["changes"]
    assert len(am_changes) == 1
    assert am_changes[0]["kind"] == "part-modified"
    assert am_changes[0]["control-id"] == "id.am-3"
    assert am_changes[0]["part-name"] == "guidance"
    _report(7, "upstream edit re-emitted both layers with the expected delta")


def test_criterion_8_failure_modes(tmp_path, capsys):
    # removal that matches nothing: strict exit 2 naming control and selector
    broken = tmp_path / "strict"
    shutil.copytree(FIXTURES_DIR, broken)
    ot = broken / "ot-profile.yaml"
    ot.write_bytes(ot.read_bytes().replace(b"name: ot-specific", b"name: renamed-part"))
    assert main(["resolve", "am-profile.yaml", "--store", str(broken)]) == 2
    err = capsys.readouterr().err
    assert "id.am-3" in err and "by-name" in err and "ot-specific" in err

    out = tmp_path / "lenient.yaml"
    assert main(["resolve", "am-profile.yaml", "--store", str(broken),
                 "--lenient", "-o", str(out)]) == 0
    assert "removal matched nothing" in capsys.readouterr().err

    # import cycle: exit 2 naming the cycle path
    cyclic = tmp_path / "cyclic"
    cyclic.mkdir()
    (cyclic / "a.yaml").write_bytes(
        b"profile:\n  metadata:\n    title: A\n    version: \"1\"\n"
        b"  imports:\n    - source: b.yaml\n"
    )
    (cyclic / "b.yaml").write_bytes(
        b"profile:\n  metadata:\n    title: B\n    version: \"1\"\n"
        b"  imports:\n    - source: a.yaml\n"
    )
    assert main(["resolve", "a.yaml", "--store", str(cyclic)]) == 2
    assert "a.yaml -> b.yaml -> a.yaml" in capsys.readouterr().err

    # malformed YAML: exit 3 with line and column
    mangled = tmp_path / "mangled"
    mangled.mkdir()
    (mangled / "broken.yaml").write_bytes(b"profile:\n  metadata: [oops\n")
    assert main(["resolve", "broken.yaml", "--store", str(mangled)]) == 3
    err = capsys.readouterr().err
    assert "line" in err and "column" in err
    _report(8, "strict/lenient removal, cycle, and syntax failures exit 2/0/2/3 as documented")
