"""Network files (JSON, version 1) and result exports (CSV, GeoJSON, JSON).

Network file layout::

    {"version": 1,
     "nodes": [{"id": "a", "x": 0.0, "y": 0.0}, ...],
     "edges": [{"tail": "a", "head": "b", "length": 12.5, "k": 3.0, "area": 3.0}, ...],
     "boundary": {"inflow": ["a"], "outflow": ["b"]},
     "fixed": {"a": 10.0}}

External ids may be strings or integers; they are remapped to dense
indices in file order and kept on ``Network.node_ids`` for reporting.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path

import numpy as np

from .network import Network, NetworkError
from .reduction import BoundarySpec
from .verify import UNITS_NOTE

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class NetworkFileError(ValueError):
    """Schema or consistency error, tagged with a JSON path."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")


def _is_id(v) -> bool:
    return isinstance(v, str) or (isinstance(v, int) and not isinstance(v, bool))


def _real(v, where: str, positive: bool = False, optional: bool = False):
    if v is None and optional:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise NetworkFileError(where, f"expected a finite number, got {v!r}")
    if positive and not v > 0:
        raise NetworkFileError(where, f"must be > 0, got {v!r}")
    return float(v)


def network_from_dict(doc: dict) -> tuple[Network, BoundarySpec]:
    if not isinstance(doc, dict):
        raise NetworkFileError("$", "document must be a JSON object")
    if doc.get("version") != SCHEMA_VERSION:
        raise NetworkFileError("$.version", f"expected {SCHEMA_VERSION}, got {doc.get('version')!r}")
    for key, kind in (("nodes", list), ("edges", list), ("boundary", dict)):
        if not isinstance(doc.get(key), kind):
            raise NetworkFileError(f"$.{key}", f"missing or not a {kind.__name__}")

    index: dict = {}
    ids, xy = [], []
    for i, node in enumerate(doc["nodes"]):
        where = f"$.nodes[{i}]"
        if not isinstance(node, dict) or not _is_id(node.get("id")):
            raise NetworkFileError(f"{where}.id", "node needs a string or integer id")
        nid = node["id"]
        if nid in index:
            raise NetworkFileError(f"{where}.id", f"duplicate node id {nid!r}")
        index[nid] = len(ids)
        ids.append(nid)
        x = _real(node.get("x"), f"{where}.x", optional=True)
        y = _real(node.get("y"), f"{where}.y", optional=True)
        xy.append((np.nan if x is None else x, np.nan if y is None else y))

    def ref(v, where):
        if not _is_id(v) or v not in index:
            raise NetworkFileError(where, f"unknown node id {v!r}")
        return index[v]

    tails, heads, lengths, ks, areas = [], [], [], [], []
    for e, edge in enumerate(doc["edges"]):
        where = f"$.edges[{e}]"
        if not isinstance(edge, dict):
            raise NetworkFileError(where, "edge must be an object")
        t = ref(edge.get("tail"), f"{where}.tail")
        h = ref(edge.get("head"), f"{where}.head")
        if t == h:
            raise NetworkFileError(where, f"self-loop at node {ids[t]!r}")
        tails.append(t)
        heads.append(h)
        lengths.append(_real(edge.get("length"), f"{where}.length", positive=True))
        k = _real(edge.get("k"), f"{where}.k", positive=True)
        ks.append(k)
        area = _real(edge.get("area"), f"{where}.area", positive=True, optional=True)
        areas.append(k if area is None else area)

    bnd = doc["boundary"]
    sets = {}
    for key in ("inflow", "outflow"):
        vals = bnd.get(key, [])
        if not isinstance(vals, list):
            raise NetworkFileError(f"$.boundary.{key}", "expected a list of node ids")
        sets[key] = {ref(v, f"$.boundary.{key}[{i}]") for i, v in enumerate(vals)}
    both = sets["inflow"] & sets["outflow"]
    if both:
        raise NetworkFileError("$.boundary", f"node {ids[min(both)]!r} is both inflow and outflow")

    fixed = {}
    raw_fixed = doc.get("fixed", {}) or {}
    if not isinstance(raw_fixed, dict):
        raise NetworkFileError("$.fixed", "expected an object mapping node id to potential")
    for key, val in raw_fixed.items():
        fixed[_lookup(index, key, f"$.fixed.{key}")] = _real(val, f"$.fixed.{key}")

    xy_arr = np.array(xy, dtype=float).reshape(-1, 2)
    positions = xy_arr if np.all(np.isfinite(xy_arr)) and len(ids) else None
    try:
        net = Network(len(ids), tails, heads, lengths, ks, areas, positions, tuple(ids))
    except NetworkError as exc:
        raise NetworkFileError("$", str(exc)) from exc
    return net, BoundarySpec(sets["inflow"], sets["outflow"], fixed)


def _lookup(index: dict, key, where: str) -> int:
    """Resolve a JSON object key or CLI token, which always arrive as strings."""
    if key in index:
        return index[key]
    if isinstance(key, str):
        try:
            as_int = int(key)
        except ValueError:
            as_int = None
        if as_int is not None and as_int in index:
            return index[as_int]
    raise NetworkFileError(where, f"unknown node id {key!r}")


def resolve_node(net: Network, key) -> int:
    index = {nid: i for i, nid in enumerate(net.node_ids)}
    return _lookup(index, key, "node")


def parse_network(path) -> tuple[Network, BoundarySpec]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise NetworkFileError("$", f"invalid JSON ({exc})") from exc
    return network_from_dict(doc)


def network_to_dict(net: Network, bspec: BoundarySpec) -> dict:
    ids = net.node_ids
    nodes = []
    for v in range(net.n_nodes):
        node = {"id": ids[v]}
        if net.positions is not None and np.all(np.isfinite(net.positions[v])):
            node["x"] = float(net.positions[v, 0])
            node["y"] = float(net.positions[v, 1])
        nodes.append(node)
    edges = []
    for e in range(net.n_edges):
        edge = {"tail": ids[net.tails[e]], "head": ids[net.heads[e]],
                "length": float(net.lengths[e]), "k": float(net.k[e])}
        if net.area[e] != net.k[e]:
            edge["area"] = float(net.area[e])
        edges.append(edge)
    doc = {
        "version": SCHEMA_VERSION,
        "nodes": nodes,
        "edges": edges,
        "boundary": {"inflow": [ids[v] for v in sorted(bspec.inflow)],
                     "outflow": [ids[v] for v in sorted(bspec.outflow)]},
    }
    if bspec.fixed:
        doc["fixed"] = {str(ids[v]): x for v, x in sorted(bspec.fixed.items())}
    return doc


def dumps_network(net: Network, bspec: BoundarySpec) -> str:
    return json.dumps(network_to_dict(net, bspec), indent=1, sort_keys=True) + "\n"


def write_network(net: Network, bspec: BoundarySpec, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_network(net, bspec))
    return path


def jsonable(obj):
    """Replace non-finite floats (not representable in JSON) by ``None``."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _real17(x: float) -> str:
    return format(float(x), ".17g")


def export_results(net: Network, bspec: BoundarySpec, sol, report, out_dir,
                   phi_max: float = 1.0, extra: dict | None = None) -> dict:
    """Write per-edge and per-node CSVs, a GeoJSON layer and the report.

    Returns a mapping from artifact name to the path written.  The GeoJSON
    layer is skipped (with a log notice) when node positions are missing.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = net.node_ids
    q = np.asarray(sol.q)
    q_max = phi_max * net.k
    util = np.abs(q) / q_max if np.isfinite(phi_max) else np.zeros_like(q)
    written = {}

    edge_rows = []
    for e in range(net.n_edges):
        edge_rows.append({
            "edge_id": e,
            "tail": ids[net.tails[e]],
            "head": ids[net.heads[e]],
            "q_signed": _real17(q[e]),
            "flux_intensity": _real17(abs(q[e])),
            "throughput": _real17(abs(q[e]) * net.area[e]),
            "cap_utilization": _real17(util[e]),
        })
    path = out / "edges.csv"
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(edge_rows[0]) if edge_rows else [
            "edge_id", "tail", "head", "q_signed", "flux_intensity", "throughput",
            "cap_utilization"])
        writer.writeheader()
        writer.writerows(edge_rows)
    written["edges_csv"] = path

    roles = bspec.roles(net.n_nodes)
    path = out / "nodes.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "u", "Phi", "role"])
        for v in range(net.n_nodes):
            writer.writerow([ids[v], _real17(sol.u[v]), _real17(sol.Phi[v]), roles[v]])
    written["nodes_csv"] = path

    if net.has_positions:
        features = []
        for e in range(net.n_edges):
            a, b = net.positions[net.tails[e]], net.positions[net.heads[e]]
            props = dict(edge_rows[e])
            for key in ("q_signed", "flux_intensity", "throughput", "cap_utilization"):
                props[key] = float(props[key])
            features.append({
                "type": "Feature",
                "geometry": {"type": "LineString",
                             "coordinates": [[float(a[0]), float(a[1])], [float(b[0]), float(b[1])]]},
                "properties": props,
            })
        path = out / "edges.geojson"
        path.write_text(json.dumps({"type": "FeatureCollection", "features": features},
                                   sort_keys=True) + "\n")
        written["geojson"] = path
    else:
        logger.info("network has no node positions; GeoJSON export skipped")

    doc = {"units": UNITS_NOTE, "diagnostics": report.as_dict()}
    if extra:
        doc.update(extra)
    path = out / "report.json"
    path.write_text(json.dumps(jsonable(doc), indent=1, sort_keys=True, allow_nan=False) + "\n")
    written["report_json"] = path
    path = out / "report.txt"
    path.write_text(report.render() + "\n")
    written["report_txt"] = path
    return written
