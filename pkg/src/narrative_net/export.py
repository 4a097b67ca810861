"""File formats exchanged between pipeline stages and with outside tools."""

from __future__ import annotations

import csv
import json
import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .addressee import AddresseeHypothesis, RuleId, ScenePairMatrix
from .graphs import DynamicGraphSeries, WeightedGraph


def fmt(x: Optional[float]) -> str:
    """Five significant digits, never in exponent notation."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "undefined"
    if x == -math.inf:
        return "-inf"
    if x == 0:
        return "0"
    digits = 5 - int(math.floor(math.log10(abs(x)))) - 1
    if digits <= 0:
        return str(int(round(x, digits)))
    return f"{x:.{digits}f}".rstrip("0").rstrip(".")


# ---------------------------------------------------------------------------
# Hypotheses and interaction matrices
# ---------------------------------------------------------------------------


def write_hypotheses(path, hyps: dict[int, list[AddresseeHypothesis]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scene in sorted(hyps):
            for h in hyps[scene]:
                rec = {
                    "utterance_id": h.utterance_id,
                    "scene": scene,
                    "addressees": sorted(h.addressees),
                    "rule": h.rule.value if h.rule else None,
                }
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_hypotheses(path) -> dict[int, list[AddresseeHypothesis]]:
    out: dict[int, list[AddresseeHypothesis]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            rule = RuleId(rec["rule"]) if rec.get("rule") else None
            out.setdefault(rec["scene"], []).append(
                AddresseeHypothesis(rec["utterance_id"], frozenset(rec["addressees"]), rule)
            )
    return out


def write_matrices(path, matrices: Sequence[ScenePairMatrix], speakers: Iterable[str], meta: Optional[dict] = None) -> None:
    """JSON document: scene count, speaker list and per-scene pair durations (ms)."""
    doc = {
        **(meta or {}),
        "scene_count": len(matrices),
        "speakers": sorted(speakers),
        "scenes": [
            {"scene": m.scene_index, "pairs": [[a, b, ms] for (a, b), ms in sorted(m.entries.items())]}
            for m in matrices
        ],
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")


def read_matrices(path) -> tuple[list[ScenePairMatrix], list[str], dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    by_scene = {s["scene"]: {(a, b): ms for a, b, ms in s["pairs"]} for s in doc["scenes"]}
    matrices = [ScenePairMatrix(t, by_scene.get(t, {})) for t in range(1, doc["scene_count"] + 1)]
    meta = {k: v for k, v in doc.items() if k not in ("scene_count", "speakers", "scenes")}
    return matrices, doc["speakers"], meta


def write_pair_table(path, matrices: Sequence[ScenePairMatrix]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scene", "char_i", "char_j", "seconds"])
        for m in matrices:
            for (a, b), ms in sorted(m.entries.items()):
                w.writerow([m.scene_index, a, b, f"{ms / 1000:.3f}"])


# ---------------------------------------------------------------------------
# Dynamic series
# ---------------------------------------------------------------------------


def params_label(series: DynamicGraphSeries) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(series.params.items()))


def write_series_csv(path, series: DynamicGraphSeries) -> None:
    """Long format: one row per (scene, edge)."""
    label = params_label(series)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scene", "char_i", "char_j", "weight", "method", "params"])
        for t, g in series.snapshots:
            for (a, b), weight in sorted(g.edges.items()):
                w.writerow([t, a, b, fmt(weight), series.method, label])


def write_series_json(path, series: DynamicGraphSeries) -> None:
    doc = {
        "method": series.method,
        "params": series.params,
        "scheme": series.scheme,
        "nodes": sorted(series.nodes),
        "snapshots": [
            {"scene": t, "edges": [[a, b, w] for (a, b), w in sorted(g.edges.items())]} for t, g in series.snapshots
        ],
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False) + "\n", encoding="utf-8")


def read_series_json(path) -> DynamicGraphSeries:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    nodes = frozenset(doc["nodes"])
    snaps = tuple(
        (s["scene"], WeightedGraph(nodes, {(a, b): w for a, b, w in s["edges"]}, doc["scheme"])) for s in doc["snapshots"]
    )
    return DynamicGraphSeries(snaps, doc["method"], doc["params"])


def series_to_gexf(series: DynamicGraphSeries) -> ET.ElementTree:
    """GEXF 1.3 dynamic graph; each edge's weight is a per-scene attvalue.

    Scene t is encoded as the closed interval [t, t]. An edge's spells cover
    the scenes in which it is present.
    """
    ns = "http://gexf.net/1.3"
    root = ET.Element("gexf", {"xmlns": ns, "version": "1.3"})
    meta = ET.SubElement(root, "meta")
    ET.SubElement(meta, "creator").text = "narrative_net"
    ET.SubElement(meta, "description").text = f"{series.method} {params_label(series)}".strip()
    graph = ET.SubElement(
        root, "graph", {"mode": "dynamic", "defaultedgetype": "undirected", "timeformat": "integer", "timerepresentation": "interval"}
    )
    attrs = ET.SubElement(graph, "attributes", {"class": "edge", "mode": "dynamic"})
    ET.SubElement(attrs, "attribute", {"id": "weight", "title": "weight", "type": "double"})
    nodes_el = ET.SubElement(graph, "nodes")
    for name in sorted(series.nodes):
        ET.SubElement(nodes_el, "node", {"id": name, "label": name})
    timeline: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for t, g in series.snapshots:
        for pair, w in g.edges.items():
            timeline.setdefault(pair, []).append((t, w))
    edges_el = ET.SubElement(graph, "edges")
    for k, (pair, values) in enumerate(sorted(timeline.items())):
        e = ET.SubElement(edges_el, "edge", {"id": str(k), "source": pair[0], "target": pair[1]})
        av = ET.SubElement(e, "attvalues")
        for t, w in values:
            ET.SubElement(av, "attvalue", {"for": "weight", "value": repr(float(w)), "start": str(t), "end": str(t)})
        spells = ET.SubElement(e, "spells")
        for start, end in _runs([t for t, _ in values]):
            ET.SubElement(spells, "spell", {"start": str(start), "end": str(end)})
    ET.indent(root)
    return ET.ElementTree(root)


def _runs(scenes: list[int]) -> list[tuple[int, int]]:
    runs: list[list[int]] = []
    for t in scenes:
        if runs and t == runs[-1][1] + 1:
            runs[-1][1] = t
        else:
            runs.append([t, t])
    return [(a, b) for a, b in runs]


def write_gexf(path, series: DynamicGraphSeries) -> None:
    series_to_gexf(series).write(path, encoding="utf-8", xml_declaration=True)


def write_value_series(path, rows: Iterable[tuple[int, float]], column: str = "value") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scene", column])
        for t, v in rows:
            w.writerow([t, fmt(v)])
