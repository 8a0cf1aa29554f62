"""Scalability benchmark: solver runtime and arc-count growth over graph size."""

from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np

from . import io
from .config import BenchmarkConfig
from .geometry import (
    LABEL_STEMS,
    SYSTEMS,
    Roi,
    RoiSet,
    assign_tensor_field,
    build_knn_graph,
)
from .rng import child_seed, stream
from .transport import TransportError, arc_costs, solve_bot

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def benchmark_layout(n_nodes: int, radii: tuple[float, float] = (1.0, 0.75)) -> RoiSet:
    """Sunflower-spiral elliptical slice: uniform density, kNN-connected at any size.

    Systems cycle through the full list so the anisotropy profile is present at
    every scale.
    """
    rois = []
    identity = np.eye(2)
    for i in range(n_nodes):
        r = math.sqrt((i + 0.5) / n_nodes)
        theta = i * GOLDEN_ANGLE
        system = SYSTEMS[i % len(SYSTEMS)]
        tangent = np.array(
            [-radii[0] * math.sin(theta), radii[1] * math.cos(theta)]
        )
        tangent /= np.linalg.norm(tangent)
        rois.append(
            Roi(
                index=i,
                label=f"{LABEL_STEMS[system]}-{i:03d}",
                position=np.array(
                    [radii[0] * r * math.cos(theta), radii[1] * r * math.sin(theta)]
                ),
                system=system,
                tensor=identity.copy(),
                tangent=tangent,
                shell="disk",
            )
        )
    return assign_tensor_field(RoiSet(tuple(rois)))


def random_balanced_b(
    n_nodes: int, source_fraction: float, seed: int, size_key: int
) -> np.ndarray:
    """Random supply-demand vector over a fixed source/sink node fraction."""
    rng = stream(seed, "bench-b", size_key)
    n_active = max(1, int(round(source_fraction * n_nodes)))
    order = rng.permutation(n_nodes)
    sources, sinks = order[:n_active], order[n_active : 2 * n_active]
    b = np.zeros(n_nodes)
    b[sources] = rng.uniform(0.5, 1.0, n_active)
    b[sinks] = -rng.uniform(0.5, 1.0, n_active)
    b[sources] /= b[sources].sum()
    b[sinks] /= -b[sinks].sum()
    return b


def _fit_loglog(x: np.ndarray, y: np.ndarray) -> dict:
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    return {
        "slope": float(slope),
        "intercept": float(intercept),
        "r_squared": 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
    }


def run_benchmark(
    config: BenchmarkConfig | None = None,
    seed: int = 0,
    sizes: tuple[int, ...] | None = None,
) -> dict:
    """Time the branched solver across graph sizes; fit log-log scaling exponents.

    The arc-count fit is deterministic geometry; the runtime fit is machine
    dependent and reported as informational only.
    """
    cfg = config or BenchmarkConfig()
    sizes = tuple(sizes if sizes is not None else cfg.sizes)
    if any(s < 6 for s in sizes) or list(sizes) != sorted(sizes):
        raise ValueError("benchmark sizes must be >= 6 and increasing")
    rows = []
    for n in sizes:
        rois = benchmark_layout(n)
        graph = build_knn_graph(rois, cfg.knn_k)
        beta = arc_costs(rois, graph, "anisotropic").beta
        b = random_balanced_b(len(rois), cfg.source_fraction, seed, n)
        row = {
            "n_nodes": len(rois),
            "n_arcs": graph.n_arcs,
            "runtime_s": float("nan"),
            "objective": float("nan"),
            "residual": float("nan"),
            "failed": False,
        }
        try:
            t0 = time.perf_counter()
            sol = solve_bot(
                graph.incidence,
                b,
                beta,
                alpha=cfg.alpha,
                restarts=cfg.restarts,
                maxiter=cfg.maxiter,
                seed=child_seed(seed, "bench-solve", n),
            )
            row["runtime_s"] = time.perf_counter() - t0
            row["objective"] = sol.objective
            row["residual"] = sol.feasibility_residual
        except TransportError as exc:
            row["failed"] = True
            row["error"] = str(exc)
        rows.append(row)

    ok = [r for r in rows if not r["failed"]]
    if len(ok) < 2:
        raise RuntimeError("benchmark needs at least two successful sizes to fit")
    # arc counts are pure geometry, so the fit uses every size; the runtime fit
    # uses only sizes whose solve succeeded
    all_n = np.array([r["n_nodes"] for r in rows], dtype=float)
    ok_n = np.array([r["n_nodes"] for r in ok], dtype=float)
    fits = {
        "arc_count": _fit_loglog(all_n, np.array([r["n_arcs"] for r in rows], float)),
        "runtime": _fit_loglog(ok_n, np.array([r["runtime_s"] for r in ok], float)),
    }
    return {"sizes": list(sizes), "rows": rows, "fits": fits}


def write_benchmark(result: dict, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    files = [
        io.write_csv(
            out / "benchmark" / "benchmark.csv",
            ["n_nodes", "n_arcs", "runtime_s", "objective", "residual", "failed"],
            (
                [r["n_nodes"], r["n_arcs"], r["runtime_s"], r["objective"], r["residual"], r["failed"]]
                for r in result["rows"]
            ),
        ),
        io.write_json(
            out / "benchmark" / "fits.json",
            {
                "schema": "reactmap/benchmark-v1",
                "sizes": result["sizes"],
                "arc_count": result["fits"]["arc_count"],
                "runtime_informational": result["fits"]["runtime"],
            },
        ),
    ]
    return files
