"""Layout document parsing and canonical JSON output."""

from __future__ import annotations

import json

import pytest

from p3d.boxes import BoxLayout
from p3d.errors import DomainError, SchemaError
from p3d.payloads import (
    dump_json,
    layouts_to_document,
    load_layouts_file,
    ordered_layouts,
    parse_layout_entry,
    parse_layouts_document,
)


def entry(node=0, box=(1.0, 1.0, 1.0, 0.0, 0.0, 0.0), **extra):
    d = {"node": node, "box": list(box)}
    if not extra:
        extra = {"angle_bin": 0}
    d.update(extra)
    return d


def test_parse_entry_with_bin():
    node, layout = parse_layout_entry(entry(node=2, angle_bin=7), "/layouts/0")
    assert node == 2
    assert layout.angle_bin == 7


def test_parse_entry_with_degrees():
    _, layout = parse_layout_entry(entry(angle_deg=90.0), "/layouts/0")
    assert layout.angle_bin == 6


def test_bin_beats_degrees():
    _, layout = parse_layout_entry(entry(angle_bin=3, angle_deg=90.0), "/layouts/0")
    assert layout.angle_bin == 3


def test_missing_angle_rejected():
    raw = {"node": 0, "box": [1.0, 1.0, 1.0, 0.0, 0.0, 0.0]}
    with pytest.raises(SchemaError, match="angle"):
        parse_layout_entry(raw, "/layouts/0")


@pytest.mark.parametrize(
    "raw",
    [
        "not a dict",
        {"box": [1, 1, 1, 0, 0, 0]},  # missing node
        entry(node="zero"),
        entry(node=True),
        entry(box=(1.0, 1.0, 1.0)),  # wrong arity
        entry(box=(1.0, 1.0, 1.0, 0.0, 0.0, "x")),
        entry(box=(1.0, True, 1.0, 0.0, 0.0, 0.0)),
        entry(angle_bin="six"),
        entry(angle_bin=2.5),
    ],
)
def test_schema_errors(raw):
    with pytest.raises(SchemaError) as exc:
        parse_layout_entry(raw, "/layouts/0")
    assert exc.value.path.startswith("/layouts/0")


@pytest.mark.parametrize(
    "raw",
    [
        entry(angle_bin=24),
        entry(angle_bin=-1),
        entry(box=(0.0, 1.0, 1.0, 0.0, 0.0, 0.0), angle_bin=0),  # zero extent
        entry(box=(-1.0, 1.0, 1.0, 0.0, 0.0, 0.0), angle_bin=0),
    ],
)
def test_domain_errors(raw):
    with pytest.raises(DomainError) as exc:
        parse_layout_entry(raw, "/layouts/0")
    assert exc.value.path.startswith("/layouts/0")


def test_parse_document_shapes():
    doc = {"layouts": [entry(node=0), entry(node=1, angle_bin=3)]}
    got = parse_layouts_document(doc)
    assert set(got) == {0, 1}
    # a bare list works too
    bare = parse_layouts_document([entry(node=0)])
    assert set(bare) == {0}


def test_parse_document_rejects_duplicates_and_empties():
    with pytest.raises(DomainError):
        parse_layouts_document([entry(node=0), entry(node=0)])
    with pytest.raises(SchemaError):
        parse_layouts_document([])
    with pytest.raises(SchemaError):
        parse_layouts_document({"layouts": "nope"})
    with pytest.raises(SchemaError):
        parse_layouts_document(42)


def test_ordered_layouts_covers_graph(bedroom):
    mapping = {i: BoxLayout(1, 1, 1, float(i), 0, 0) for i in range(3)}
    ordered = ordered_layouts(bedroom, mapping)
    assert [b.cx for b in ordered] == [0.0, 1.0, 2.0]
    with pytest.raises(DomainError, match="missing"):
        ordered_layouts(bedroom, {0: mapping[0]})
    extra = dict(mapping)
    extra[9] = mapping[0]
    with pytest.raises(DomainError):
        ordered_layouts(bedroom, extra)


def test_document_round_trip():
    layouts = [
        BoxLayout(2.0, 1.0, 0.5, 0.25, -0.75, 0.0, 6),
        BoxLayout(1.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0),
    ]
    doc = layouts_to_document(layouts)
    assert [e["node"] for e in doc["layouts"]] == [0, 1]
    assert doc["layouts"][0]["angle_deg"] == pytest.approx(90.0)
    back = parse_layouts_document(doc)
    assert [back[i] for i in range(2)] == layouts


def test_load_layouts_file(tmp_path):
    layouts = [BoxLayout(1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 3)]
    path = tmp_path / "layouts.json"
    path.write_text(dump_json(layouts_to_document(layouts)))
    got = load_layouts_file(str(path))
    assert got[0] == layouts[0]
    missing = tmp_path / "missing.json"
    with pytest.raises(Exception):
        load_layouts_file(str(missing))
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    with pytest.raises(SchemaError):
        load_layouts_file(str(bad))


def test_dump_json_canonical_form():
    text = dump_json({"b": 1, "a": [1.5, 2]})
    assert text == '{\n  "a": [\n    1.5,\n    2\n  ],\n  "b": 1\n}\n'
    # keys sorted, two-space indent, trailing newline
    assert text.endswith("\n")
    assert json.loads(text) == {"a": [1.5, 2], "b": 1}
