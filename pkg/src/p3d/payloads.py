"""Layout list payloads shared by the CLI and the HTTP service.

A layouts document is ``{"layouts": [entry, ...]}`` where each entry carries
``node``, ``box`` ([w, l, h, cx, cy, cz]), and either ``angle_bin`` or
``angle_deg`` (``angle_bin`` wins when both appear). Malformed structure
raises ``SchemaError``; structurally fine but physically invalid content
(nonpositive sizes, duplicate nodes) raises ``DomainError``.
"""

from __future__ import annotations

import json
from typing import Any

from .boxes import ROTATION_BINS, BoxLayout, bin_angle
from .errors import DomainError, SchemaError


def _number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def parse_layout_entry(raw: Any, path: str) -> tuple[int, BoxLayout]:
    if not isinstance(raw, dict):
        raise SchemaError("layout entry must be an object", path=path)
    if "node" not in raw:
        raise SchemaError("layout entry needs a 'node' id", path=f"{path}/node")
    node = raw["node"]
    if not isinstance(node, int) or isinstance(node, bool) or node < 0:
        raise SchemaError("'node' must be a nonnegative integer", path=f"{path}/node")
    box = raw.get("box")
    if not isinstance(box, list) or len(box) != 6 or not all(_number(v) for v in box):
        raise SchemaError("'box' must be six numbers [w, l, h, cx, cy, cz]", path=f"{path}/box")
    if "angle_bin" in raw:
        angle_bin = raw["angle_bin"]
        if not isinstance(angle_bin, int) or isinstance(angle_bin, bool):
            raise SchemaError("'angle_bin' must be an integer", path=f"{path}/angle_bin")
        if not (0 <= angle_bin < ROTATION_BINS):
            raise DomainError(
                f"'angle_bin' must lie in [0, {ROTATION_BINS})", path=f"{path}/angle_bin"
            )
    elif "angle_deg" in raw:
        if not _number(raw["angle_deg"]):
            raise SchemaError("'angle_deg' must be a number", path=f"{path}/angle_deg")
        angle_bin = bin_angle(float(raw["angle_deg"]))
    else:
        raise SchemaError(
            "layout entry needs 'angle_bin' or 'angle_deg'", path=path
        )
    w, l, h, cx, cy, cz = (float(v) for v in box)
    try:
        layout = BoxLayout(w, l, h, cx, cy, cz, angle_bin)
    except ValueError as exc:
        raise DomainError(str(exc), path=f"{path}/box") from exc
    return node, layout


def parse_layouts_document(doc: Any, path: str = "/layouts") -> dict[int, BoxLayout]:
    """Parse a layouts payload (or its bare list) into a node-id map."""
    if isinstance(doc, dict):
        if "layouts" not in doc:
            raise SchemaError("missing 'layouts' array", path=path)
        entries = doc["layouts"]
    else:
        entries = doc
    if not isinstance(entries, list) or not entries:
        raise SchemaError("'layouts' must be a non-empty array", path=path)
    out: dict[int, BoxLayout] = {}
    for k, raw in enumerate(entries):
        node, layout = parse_layout_entry(raw, f"{path}/{k}")
        if node in out:
            raise DomainError(f"duplicate layout for node {node}", path=f"{path}/{k}/node")
        out[node] = layout
    return out


def load_layouts_file(path: str) -> dict[int, BoxLayout]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read layouts file: {exc}", path="/layouts") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"layouts file is not valid JSON: {exc}", path="/layouts") from exc
    return parse_layouts_document(doc)


def ordered_layouts(g, mapping: dict[int, BoxLayout]) -> list[BoxLayout]:
    """Order a node-id map by the graph's nodes, requiring exact coverage."""
    missing = [n.node_id for n in g.nodes if n.node_id not in mapping]
    if missing:
        raise DomainError(f"layouts missing for node(s) {missing}", path="/layouts")
    extra = sorted(set(mapping) - {n.node_id for n in g.nodes})
    if extra:
        raise DomainError(f"layouts reference unknown node(s) {extra}", path="/layouts")
    return [mapping[n.node_id] for n in g.nodes]


def layouts_to_document(layouts: list[BoxLayout]) -> dict:
    return {"layouts": [box.to_json_dict(i) for i, box in enumerate(layouts)]}


def dump_json(doc: Any) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
