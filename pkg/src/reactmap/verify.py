"""Randomized small-instance battery checking the solver against exact oracles."""

from __future__ import annotations

import numpy as np

from .geometry import graph_from_edges, knn_undirected_edges
from .rng import child_seed, stream
from .transport import (
    TransportError,
    flow_objective,
    forest_oracle,
    linear_flow_oracle,
    solve_bot,
)

DEFAULT_ALPHAS = (0.5, 0.65, 0.8)


def random_small_instance(seed: int, idx: int):
    """Connected random instance with <= 7 nodes: kNN or ring graph, balanced b."""
    rng = stream(seed, "verify-instance", idx)
    n = int(rng.integers(4, 8))
    use_ring = bool(rng.random() < 0.5)
    if use_ring:
        angles = 2 * np.pi * np.arange(n) / n
        positions = np.column_stack([np.cos(angles), np.sin(angles)])
        positions += rng.uniform(-0.05, 0.05, positions.shape)
        edges = [(i, (i + 1) % n) for i in range(n)]
        edges = [(min(i, j), max(i, j)) for i, j in edges]
    else:
        k = int(rng.integers(2, 4))
        for _ in range(50):
            positions = rng.uniform(-1.0, 1.0, (n, 2))
            edges = knn_undirected_edges(positions, min(k, n - 1))
            if _connected(n, edges):
                break
        else:
            raise RuntimeError("could not draw a connected kNN instance")
    graph = graph_from_edges(positions, sorted(set(edges)))
    # symmetric per-edge costs, like physical arc costs
    beta = np.empty(graph.n_arcs)
    beta[0::2] = rng.uniform(0.5, 2.0, graph.n_arcs // 2)
    beta[1::2] = beta[0::2]
    raw = rng.uniform(0.0, 1.0, n)
    b = raw - raw.mean()
    return graph.incidence, b, beta


def _connected(n: int, edges) -> bool:
    adj = {v: set() for v in range(n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == n


def oracle_battery(
    n_instances: int = 50,
    alphas: tuple[float, ...] = DEFAULT_ALPHAS,
    rel_tol: float = 0.02,
    linear_tol: float = 0.005,
    seed: int = 0,
    restarts: int = 12,
) -> dict:
    """Compare best-of-restarts objectives to the forest oracle and, at alpha = 1,
    to the exact linear min-cost flow."""
    per_alpha = {alpha: {"passes": 0, "ratios": []} for alpha in alphas}
    linear = {"passes": 0, "ratios": []}
    for idx in range(n_instances):
        a, b, beta = random_small_instance(seed, idx)
        for alpha in alphas:
            exact = forest_oracle(a, b, beta, alpha)
            sol = solve_bot(
                a,
                b,
                beta,
                alpha,
                restarts=restarts,
                seed=child_seed(seed, "verify-solve", idx),
            )
            ratio = sol.objective / exact.objective if exact.objective > 0 else 1.0
            per_alpha[alpha]["ratios"].append(float(ratio))
            if ratio <= 1.0 + rel_tol:
                per_alpha[alpha]["passes"] += 1
        lp = linear_flow_oracle(a, b, beta)
        sol1 = solve_bot(
            a,
            b,
            beta,
            1.0,
            restarts=restarts,
            seed=child_seed(seed, "verify-solve-linear", idx),
        )
        ratio = sol1.objective / lp.objective if lp.objective > 0 else 1.0
        linear["ratios"].append(float(ratio))
        if ratio <= 1.0 + linear_tol:
            linear["passes"] += 1
    return {
        "n_instances": n_instances,
        "rel_tol": rel_tol,
        "linear_tol": linear_tol,
        "alphas": {
            str(alpha): {
                "passes": per_alpha[alpha]["passes"],
                "worst_ratio": max(per_alpha[alpha]["ratios"]),
                "ratios": per_alpha[alpha]["ratios"],
            }
            for alpha in alphas
        },
        "linear": {
            "passes": linear["passes"],
            "worst_ratio": max(linear["ratios"]),
            "ratios": linear["ratios"],
        },
    }
