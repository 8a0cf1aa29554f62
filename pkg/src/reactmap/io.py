"""Deterministic CSV/JSON serialization for all pipeline artifacts.

Schemas (version tags in each file):
  rois-v1    {"nodes": [{index, label, system, shell, position, tangent, tensor, fa}]}
  graph-v1   {"n_nodes", "arcs": [{index, tail, head, length}]}
  measures-v1{"labels", "mu_stim", "mu_react", "b", "w_f"}
  flow-v1    {"alpha", "cost_kind", "objective", "feasibility_residual",
              "arcs": [{index, tail, head, tail_label, head_label, beta, w, support}]}

All JSON is written with sorted keys; all floats round-trip exactly via repr, so
byte-identical reruns are achievable.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .geometry import CandidateGraph, Roi, RoiSet, fractional_anisotropy
from .transport import FlowSolution


def _plain(obj: Any) -> Any:
    """Recursively convert numpy containers/scalars to JSON-serializable types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


def write_json(path: Path | str, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path: Path | str) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv_columns(path: Path | str) -> dict[str, list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols: dict[str, list[str]] = {h: [] for h in header}
        for row in reader:
            for h, v in zip(header, row):
                cols[h].append(v)
    return cols


def sha256_file(path: Path | str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Domain-type serializers


def roiset_to_dict(rois: RoiSet) -> dict:
    return {
        "schema": "reactmap/rois-v1",
        "nodes": [
            {
                "index": r.index,
                "label": r.label,
                "system": r.system,
                "shell": r.shell,
                "position": r.position.tolist(),
                "tangent": r.tangent.tolist(),
                "tensor": r.tensor.tolist(),
                "fa": fractional_anisotropy(r.tensor),
            }
            for r in rois
        ],
    }


def roiset_from_dict(data: dict) -> RoiSet:
    if data.get("schema") != "reactmap/rois-v1":
        raise ValueError(f"unexpected ROI schema {data.get('schema')!r}")
    rois = tuple(
        Roi(
            index=node["index"],
            label=node["label"],
            position=np.array(node["position"], dtype=float),
            system=node["system"],
            tensor=np.array(node["tensor"], dtype=float),
            tangent=np.array(node["tangent"], dtype=float),
            shell=node["shell"],
        )
        for node in data["nodes"]
    )
    return RoiSet(rois)


def graph_to_dict(graph: CandidateGraph) -> dict:
    return {
        "schema": "reactmap/graph-v1",
        "n_nodes": graph.n_nodes,
        "arcs": [
            {
                "index": e,
                "tail": int(t),
                "head": int(h),
                "length": float(graph.lengths[e]),
            }
            for e, (t, h) in enumerate(graph.arcs)
        ],
    }


def graph_from_dict(data: dict) -> CandidateGraph:
    if data.get("schema") != "reactmap/graph-v1":
        raise ValueError(f"unexpected graph schema {data.get('schema')!r}")
    from .geometry import incidence_from_arcs

    arcs = np.array([[a["tail"], a["head"]] for a in data["arcs"]], dtype=int)
    lengths = np.array([a["length"] for a in data["arcs"]], dtype=float)
    n = int(data["n_nodes"])
    return CandidateGraph(
        n_nodes=n, arcs=arcs, lengths=lengths, incidence=incidence_from_arcs(n, arcs)
    )


def measures_to_dict(labels: Sequence[str], mu_stim, mu_react, b, w_f: float) -> dict:
    return {
        "schema": "reactmap/measures-v1",
        "labels": list(labels),
        "mu_stim": list(map(float, mu_stim)),
        "mu_react": list(map(float, mu_react)),
        "b": list(map(float, b)),
        "w_f": float(w_f),
    }


def solution_to_dict(
    solution: FlowSolution, beta: np.ndarray, labels: Sequence[str], cost_kind: str
) -> dict:
    support = set(solution.support.tolist())
    return {
        "schema": "reactmap/flow-v1",
        "alpha": float(solution.alpha),
        "cost_kind": cost_kind,
        "objective": float(solution.objective),
        "feasibility_residual": float(solution.feasibility_residual),
        "rel_threshold": float(solution.rel_threshold),
        "n_nodes": int(solution.n_nodes),
        "arcs": [
            {
                "index": e,
                "tail": int(t),
                "head": int(h),
                "tail_label": labels[t],
                "head_label": labels[h],
                "beta": float(beta[e]),
                "w": float(solution.w[e]),
                "support": e in support,
            }
            for e, (t, h) in enumerate(solution.arcs)
        ],
    }


def solution_from_dict(data: dict) -> tuple[FlowSolution, np.ndarray]:
    """Rebuild a FlowSolution plus its cost vector from the flow-v1 schema."""
    if data.get("schema") != "reactmap/flow-v1":
        raise ValueError(f"unexpected flow schema {data.get('schema')!r}")
    arcs = np.array([[a["tail"], a["head"]] for a in data["arcs"]], dtype=int)
    w = np.array([a["w"] for a in data["arcs"]], dtype=float)
    beta = np.array([a["beta"] for a in data["arcs"]], dtype=float)
    support = np.array(
        [a["index"] for a in data["arcs"] if a["support"]], dtype=int
    )
    solution = FlowSolution(
        w=w,
        objective=float(data["objective"]),
        alpha=float(data["alpha"]),
        arcs=arcs,
        n_nodes=int(data["n_nodes"]),
        feasibility_residual=float(data["feasibility_residual"]),
        support=support,
        rel_threshold=float(data["rel_threshold"]),
        meta={"cost_kind": data["cost_kind"]},
    )
    return solution, beta
