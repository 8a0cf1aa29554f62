"""Arc costs and discrete branched-transport optimization on candidate graphs.

The branched problem minimizes sum_e beta_e w_e^alpha over nonnegative arc fluxes
satisfying the node balance A w = b. For alpha < 1 the objective is concave, so
local optima are cycle-free and shared routes are cheaper per unit mass. Local
solutions come from restarted SQP on a smoothed objective; exact small-instance
oracles (forest enumeration, linear min-cost flow) are kept independent of the
solver path so they can verify it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .geometry import CandidateGraph, Roi, RoiSet, fractional_anisotropy
from .rng import stream

DEFAULT_ANISO_EPS = 0.05
DEFAULT_C_ISO = 1.0
DEFAULT_REL_THRESHOLD = 1e-4
DEFAULT_RESTARTS = 12
DEFAULT_TOL = 1e-6
BALANCE_TOL = 1e-10


class TransportError(RuntimeError):
    """Raised when no feasible flow can be produced; carries the best residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


# ---------------------------------------------------------------------------
# Arc costs


def anisotropic_arc_cost(roi_i: Roi, roi_j: Roi, eps: float = DEFAULT_ANISO_EPS) -> float:
    """Midpoint Riemannian cost: length * sqrt(tau' (D_mid + eps I)^-1 tau)."""
    delta = roi_j.position - roi_i.position
    length = float(np.linalg.norm(delta))
    if length <= 0:
        raise ValueError(f"coincident regions {roi_i.label}, {roi_j.label}")
    tau = delta / length
    d_mid = 0.5 * (roi_i.tensor + roi_j.tensor) + eps * np.eye(2)
    quad = float(tau @ np.linalg.solve(d_mid, tau))
    return length * np.sqrt(quad)


def isotropic_arc_cost(
    roi_i: Roi,
    roi_j: Roi,
    wm_score_i: float,
    wm_score_j: float,
    c_iso: float = DEFAULT_C_ISO,
) -> float:
    """Distance cost inflated where the scalar white-matter score is low."""
    for s in (wm_score_i, wm_score_j):
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"white-matter score {s} outside [0, 1]")
    length = float(np.linalg.norm(roi_j.position - roi_i.position))
    wm_mid = 0.5 * (wm_score_i + wm_score_j)
    return length * (1.0 + c_iso * (1.0 - wm_mid))


@dataclass(frozen=True)
class ArcCosts:
    beta: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        if np.any(self.beta <= 0):
            raise ValueError("arc costs must be strictly positive")


def arc_costs(
    rois: RoiSet,
    graph: CandidateGraph,
    kind: str,
    eps: float = DEFAULT_ANISO_EPS,
    c_iso: float = DEFAULT_C_ISO,
    wm_scores: np.ndarray | None = None,
) -> ArcCosts:
    """Per-arc costs; the isotropic baseline uses FA as its white-matter score
    unless explicit scores are given."""
    if kind == "anisotropic":
        beta = np.array(
            [
                anisotropic_arc_cost(rois[t], rois[h], eps)
                for t, h in graph.arcs
            ]
        )
    elif kind == "isotropic":
        wm = rois.fa_values() if wm_scores is None else np.asarray(wm_scores, float)
        beta = np.array(
            [
                isotropic_arc_cost(rois[t], rois[h], wm[t], wm[h], c_iso)
                for t, h in graph.arcs
            ]
        )
    else:
        raise ValueError(f"unknown cost kind {kind!r}")
    return ArcCosts(beta=beta, kind=kind)


# ---------------------------------------------------------------------------
# Flow solutions


@dataclass
class FlowSolution:
    w: np.ndarray
    objective: float
    alpha: float
    arcs: np.ndarray
    n_nodes: int
    feasibility_residual: float
    support: np.ndarray
    rel_threshold: float = DEFAULT_REL_THRESHOLD
    meta: dict = field(default_factory=dict)

    @property
    def support_size(self) -> int:
        return int(self.support.size)


def flow_objective(w: np.ndarray, beta: np.ndarray, alpha: float) -> float:
    """E_alpha = sum beta_e w_e^alpha on the nonnegative part of w."""
    wp = np.clip(np.asarray(w, dtype=float), 0.0, None)
    return float(np.sum(np.asarray(beta, float) * np.power(wp, alpha)))


def support_indices(
    w: np.ndarray, rel_threshold: float = DEFAULT_REL_THRESHOLD
) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    wmax = w.max() if w.size else 0.0
    if wmax <= 0:
        return np.array([], dtype=int)
    return np.flatnonzero(w >= rel_threshold * wmax)


def extract_support(
    solution: FlowSolution, rel_threshold: float = DEFAULT_REL_THRESHOLD
) -> np.ndarray:
    """Arcs carrying at least rel_threshold times the maximal flux.

    Reporting only: the stored fluxes and objective are never thresholded.
    """
    return support_indices(solution.w, rel_threshold)


def arcs_from_incidence(a: np.ndarray) -> np.ndarray:
    """Recover (tail, head) arc pairs from a +1/-1 incidence matrix."""
    a = np.asarray(a, dtype=float)
    pos = a > 0.5
    neg = a < -0.5
    if np.any(pos.sum(axis=0) != 1) or np.any(neg.sum(axis=0) != 1):
        raise ValueError("each incidence column needs exactly one +1 and one -1")
    tails = np.argmax(pos, axis=0)
    heads = np.argmax(neg, axis=0)
    if np.any(tails == heads):
        raise ValueError("self-loop arc in incidence matrix")
    return np.column_stack([tails, heads])


def _opposite_map(arcs: np.ndarray) -> np.ndarray:
    """opp[e] = index of the reversed arc, or -1 when absent."""
    index = {(int(t), int(h)): e for e, (t, h) in enumerate(arcs)}
    opp = np.full(len(arcs), -1, dtype=int)
    for e, (t, h) in enumerate(arcs):
        opp[e] = index.get((int(h), int(t)), -1)
    return opp


def _cancel_opposite(w: np.ndarray, opp: np.ndarray) -> np.ndarray:
    """Remove two-way flux on edge pairs; preserves A w exactly and never
    increases a concave objective."""
    w = w.copy()
    for e in range(w.size):
        o = opp[e]
        if o > e and w[e] > 0 and w[o] > 0:
            c = min(w[e], w[o])
            w[e] -= c
            w[o] -= c
    return w


def _node_components(n_nodes: int, arcs: np.ndarray) -> np.ndarray:
    adj = csr_matrix(
        (np.ones(len(arcs)), (arcs[:, 0], arcs[:, 1])), shape=(n_nodes, n_nodes)
    )
    return connected_components(adj, directed=False)[1]


def _check_balance(n_nodes: int, arcs: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Validate global and per-component mass balance; returns component labels."""
    if abs(b.sum()) > BALANCE_TOL:
        raise TransportError(f"unbalanced supply-demand vector, sum = {b.sum():.3e}")
    labels = _node_components(n_nodes, arcs)
    for comp in range(labels.max() + 1):
        mass = b[labels == comp].sum()
        if abs(mass) > 1e-9:
            raise TransportError(
                f"component {comp} carries net mass {mass:.3e}; "
                "sources and sinks are disconnected"
            )
    return labels


def _reduced_rows(labels: np.ndarray) -> np.ndarray:
    """Row subset of the incidence matrix with one redundant row dropped per
    connected component."""
    keep = np.ones(labels.size, dtype=bool)
    for comp in range(labels.max() + 1):
        keep[np.flatnonzero(labels == comp)[-1]] = False
    return np.flatnonzero(keep)


# ---------------------------------------------------------------------------
# Branched transport solver


def solve_bot(
    a: np.ndarray,
    b: np.ndarray,
    beta: np.ndarray,
    alpha: float,
    restarts: int = DEFAULT_RESTARTS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    maxiter: int = 200,
    smoothing: float = 1e-6,
    perturbation: float = 0.05,
    perturbation_max: float = 2.0,
    rel_threshold: float = DEFAULT_REL_THRESHOLD,
) -> FlowSolution:
    """Best-of-restarts local minimizer of sum beta w^alpha subject to A w = b, w >= 0.

    Each restart starts from the clipped least-squares solution of the balance
    constraints plus a positive uniform perturbation, is repaired onto the
    feasible set, and is refined by SQP on the smoothed objective
    sum beta (w^2 + delta^2)^(alpha/2). Perturbation magnitudes ramp
    geometrically from ``perturbation`` to ``perturbation_max`` (times mean |b|)
    across restarts: early restarts stay near the least-squares point, later
    ones sample distant basins, which strongly concave instances need. The
    returned flow never has a larger objective than any restart's repaired
    initialization.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n, m = a.shape
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if np.any(beta <= 0):
        raise ValueError("arc costs must be positive")
    if restarts < 1:
        raise ValueError("need at least one restart")
    arcs = arcs_from_incidence(a)
    labels = _check_balance(n, arcs, b)
    opp = _opposite_map(arcs)

    if np.all(np.abs(b) <= BALANCE_TOL):
        w0 = np.zeros(m)
        return _make_solution(w0, a, b, beta, alpha, arcs, n, rel_threshold, {"restarts": 0})

    rows = _reduced_rows(labels)
    a_eq, b_eq = a[rows], b[rows]
    aat_pinv = np.linalg.pinv(a @ a.T)

    def residual(w: np.ndarray) -> float:
        return float(np.max(np.abs(a @ w - b)))

    def project_affine(w: np.ndarray) -> np.ndarray:
        return w - a.T @ (aat_pinv @ (a @ w - b))

    def repair(w: np.ndarray, iters: int = 400) -> np.ndarray:
        w = np.clip(w, 0.0, None)
        for _ in range(iters):
            w = np.clip(project_affine(w), 0.0, None)
            if residual(w) <= 1e-10:
                break
        return w

    def polish(w: np.ndarray) -> np.ndarray:
        w = np.clip(w, 0.0, None)
        if residual(w) > 0.5 * tol:
            w = repair(w, iters=200)
        w = _cancel_opposite(w, opp)
        wmax = w.max()
        if wmax > 0:
            cleaned = np.where(w < 1e-9 * wmax, 0.0, w)
            if residual(cleaned) <= 0.5 * tol:
                w = cleaned
        return w

    delta2 = smoothing * smoothing

    def smoothed(w: np.ndarray) -> tuple[float, np.ndarray]:
        v = w * w + delta2
        f = float(np.sum(beta * np.power(v, 0.5 * alpha)))
        g = beta * alpha * w * np.power(v, 0.5 * alpha - 1.0)
        return f, g

    constraints = [
        {"type": "eq", "fun": lambda w: a_eq @ w - b_eq, "jac": lambda w: a_eq}
    ]
    bounds = [(0.0, None)] * m

    w_ls, *_ = np.linalg.lstsq(a, b, rcond=None)
    w_ls = np.clip(w_ls, 0.0, None)
    scale = float(np.mean(np.abs(b)))

    if restarts > 1 and perturbation_max > perturbation:
        growth = (perturbation_max / perturbation) ** (1.0 / (restarts - 1))
    else:
        growth = 1.0

    candidates: list[tuple[float, int, int, np.ndarray]] = []
    best_residual = np.inf
    for r in range(restarts):
        rng = stream(seed, "bot-restart", r)
        magnitude = perturbation * growth**r
        w_init = repair(w_ls + rng.uniform(0.0, magnitude * scale, size=m))
        result = optimize.minimize(
            smoothed,
            w_init,
            jac=True,
            method="SLSQP",
            bounds=bounds,
            constraints=constraints,
            options={"maxiter": maxiter, "ftol": 1e-12},
        )
        for rank, w_cand in enumerate((polish(result.x), polish(w_init))):
            res = residual(w_cand)
            best_residual = min(best_residual, res)
            if res <= tol:
                candidates.append(
                    (flow_objective(w_cand, beta, alpha), r, rank, w_cand)
                )
    if not candidates:
        raise TransportError(
            f"no restart reached feasibility tolerance {tol:g}", residual=best_residual
        )
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    obj, best_r, _, w_best = candidates[0]
    meta = {"restarts": restarts, "best_restart": best_r, "method": "slsqp"}
    return _make_solution(w_best, a, b, beta, alpha, arcs, n, rel_threshold, meta)


def _make_solution(
    w: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    beta: np.ndarray,
    alpha: float,
    arcs: np.ndarray,
    n_nodes: int,
    rel_threshold: float,
    meta: dict,
) -> FlowSolution:
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    return FlowSolution(
        w=w,
        objective=flow_objective(w, beta, alpha),
        alpha=alpha,
        arcs=arcs,
        n_nodes=n_nodes,
        feasibility_residual=float(np.max(np.abs(a @ w - b))),
        support=support_indices(w, rel_threshold),
        rel_threshold=rel_threshold,
        meta=meta,
    )


# ---------------------------------------------------------------------------
# Exact oracles and baselines


def forest_oracle(
    a: np.ndarray,
    b: np.ndarray,
    beta: np.ndarray,
    alpha: float,
    max_nodes: int = 8,
    rel_threshold: float = DEFAULT_REL_THRESHOLD,
) -> FlowSolution:
    """Exact optimum by enumerating acyclic supports.

    Concave-cost optima are cycle-free, and on a forest the balancing flow is
    unique, so enumerating all forests covering the support of b gives the
    global minimum on small instances.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n, m = a.shape
    if n > max_nodes:
        raise ValueError(f"forest oracle limited to {max_nodes} nodes, got {n}")
    arcs = arcs_from_incidence(a)
    _check_balance(n, arcs, b)

    edge_arcs: dict[tuple[int, int], list[int]] = {}
    for e, (t, h) in enumerate(arcs):
        key = (min(t, h), max(t, h))
        slots = edge_arcs.setdefault(key, [-1, -1])
        slot = 0 if t < h else 1
        if slots[slot] != -1 and beta[e] >= beta[slots[slot]]:
            continue  # keep the cheaper of parallel arcs
        slots[slot] = e
    edges = sorted(edge_arcs)

    best_cost = np.inf
    best_w: np.ndarray | None = None
    for size in range(0, n):
        for combo in itertools.combinations(range(len(edges)), size):
            flows = _forest_flow(n, [edges[c] for c in combo], b)
            if flows is None:
                continue
            w = np.zeros(m)
            cost = 0.0
            feasible = True
            for (i, j), f in flows:
                if abs(f) <= 1e-15:
                    continue
                slots = edge_arcs[(min(i, j), max(i, j))]
                arc = slots[0 if (f > 0) == (i < j) else 1]
                if arc == -1:
                    feasible = False  # needed direction has no arc
                    break
                w[arc] += abs(f)
                cost += beta[arc] * abs(f) ** alpha
            if feasible and cost < best_cost - 1e-15:
                best_cost = cost
                best_w = w
    if best_w is None:
        raise TransportError("no feasible forest found")
    return _make_solution(
        best_w, a, b, beta, alpha, arcs, n, rel_threshold, {"method": "forest"}
    )


def _forest_flow(
    n: int, edge_list: list[tuple[int, int]], b: np.ndarray
) -> list[tuple[tuple[int, int], float]] | None:
    """Unique balancing flow on an acyclic edge set, or None when the subset has
    a cycle or cannot balance b. Flow f on edge (i, j) is signed i -> j."""
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    adjacency: dict[int, dict[int, float]] = {v: {} for v in range(n)}
    for i, j in edge_list:
        ri, rj = find(i), find(j)
        if ri == rj:
            return None
        parent[ri] = rj
        adjacency[i][j] = 0.0
        adjacency[j][i] = 0.0

    comp_mass: dict[int, float] = {}
    for v in range(n):
        root = find(v)
        comp_mass[root] = comp_mass.get(root, 0.0) + b[v]
    if any(abs(mass) > 1e-9 for mass in comp_mass.values()):
        return None

    bb = b.astype(float).copy()
    degree = {v: len(adjacency[v]) for v in range(n)}
    leaves = [v for v in range(n) if degree[v] == 1]
    flows: list[tuple[tuple[int, int], float]] = []
    while leaves:
        u = leaves.pop()
        if degree[u] != 1:
            continue
        v = next(iter(adjacency[u]))
        flows.append(((u, v), bb[u]))
        bb[v] += bb[u]
        bb[u] = 0.0
        del adjacency[u][v]
        del adjacency[v][u]
        degree[u] = 0
        degree[v] -= 1
        if degree[v] == 1:
            leaves.append(v)
    return flows


def linear_flow_oracle(
    a: np.ndarray,
    b: np.ndarray,
    beta: np.ndarray,
    rel_threshold: float = DEFAULT_REL_THRESHOLD,
) -> FlowSolution:
    """Exact linear-cost (alpha = 1) optimum via linear programming."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n, _ = a.shape
    arcs = arcs_from_incidence(a)
    labels = _check_balance(n, arcs, b)
    rows = _reduced_rows(labels)
    result = optimize.linprog(
        c=beta, A_eq=a[rows], b_eq=b[rows], bounds=(0, None), method="highs"
    )
    if not result.success:
        raise TransportError(f"linear flow oracle failed: {result.message}")
    return _make_solution(
        result.x, a, b, beta, 1.0, arcs, n, rel_threshold, {"method": "linprog"}
    )


def shortest_path_surrogate(
    a: np.ndarray,
    b: np.ndarray,
    beta: np.ndarray,
    rel_threshold: float = DEFAULT_REL_THRESHOLD,
) -> FlowSolution:
    """Greedy non-branched baseline.

    Repeatedly routes min(largest remaining source, largest remaining sink)
    along the cheapest path between them until all mass is placed.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n, m = a.shape
    arcs = arcs_from_incidence(a)
    _check_balance(n, arcs, b)

    arc_of: dict[tuple[int, int], int] = {}
    for e, (t, h) in enumerate(arcs):
        key = (int(t), int(h))
        if key not in arc_of or beta[e] < beta[arc_of[key]]:
            arc_of[key] = e
    cost = csr_matrix(
        (
            [beta[e] for e in arc_of.values()],
            (
                [t for t, _ in arc_of.keys()],
                [h for _, h in arc_of.keys()],
            ),
        ),
        shape=(n, n),
    )

    w = np.zeros(m)
    remaining = b.astype(float).copy()
    for _ in range(4 * n * n):
        src = int(np.argmax(remaining))
        snk = int(np.argmin(remaining))
        if remaining[src] <= 1e-12 or remaining[snk] >= -1e-12:
            break
        dist, pred = dijkstra(
            cost, directed=True, indices=src, return_predecessors=True
        )
        if not np.isfinite(dist[snk]):
            raise TransportError(f"no path from node {src} to node {snk}")
        mass = min(remaining[src], -remaining[snk])
        node = snk
        while node != src:
            prev = int(pred[node])
            w[arc_of[(prev, node)]] += mass
            node = prev
        remaining[src] -= mass
        remaining[snk] += mass
    if np.max(np.abs(remaining)) > 1e-9:
        raise TransportError("greedy routing failed to exhaust the masses")
    return _make_solution(
        w, a, b, beta, 1.0, arcs, n, rel_threshold, {"method": "surrogate"}
    )


# ---------------------------------------------------------------------------
# Flow statistics


@dataclass(frozen=True)
class RelayStats:
    inflow: np.ndarray
    outflow: np.ndarray
    relay_score: np.ndarray
    classes: tuple[str, ...]


def relay_statistics(solution: FlowSolution, b: np.ndarray) -> RelayStats:
    """Node-level flux statistics: relay score = min(inflow, outflow).

    A node is a relay when its relay score strictly dominates both its supply
    and its demand; otherwise it is source- or sink-dominated by the sign of b.
    """
    n = solution.n_nodes
    inflow = np.zeros(n)
    outflow = np.zeros(n)
    np.add.at(outflow, solution.arcs[:, 0], solution.w)
    np.add.at(inflow, solution.arcs[:, 1], solution.w)
    score = np.minimum(inflow, outflow)
    b = np.asarray(b, dtype=float)
    classes = []
    for v in range(n):
        supply = max(b[v], 0.0)
        demand = max(-b[v], 0.0)
        if score[v] > supply and score[v] > demand:
            classes.append("relay")
        elif supply >= demand:
            classes.append("source-dominated")
        else:
            classes.append("sink-dominated")
    return RelayStats(
        inflow=inflow, outflow=outflow, relay_score=score, classes=tuple(classes)
    )


@dataclass(frozen=True)
class FluxComparison:
    w_a: np.ndarray
    w_b: np.ndarray
    difference: np.ndarray
    shared_support: np.ndarray
    jaccard: float
    mass_reallocated: float


def flux_comparison(sol_a: FlowSolution, sol_b: FlowSolution) -> FluxComparison:
    """Arc-aligned flux table with support Jaccard index and reallocated mass."""
    if sol_a.arcs.shape != sol_b.arcs.shape or not np.array_equal(
        sol_a.arcs, sol_b.arcs
    ):
        raise ValueError("solutions live on different candidate graphs")
    sup_a = set(sol_a.support.tolist())
    sup_b = set(sol_b.support.tolist())
    union = sup_a | sup_b
    jaccard = 1.0 if not union else len(sup_a & sup_b) / len(union)
    shared = np.zeros(sol_a.w.size, dtype=bool)
    shared[list(sup_a & sup_b)] = True
    return FluxComparison(
        w_a=sol_a.w,
        w_b=sol_b.w,
        difference=sol_b.w - sol_a.w,
        shared_support=shared,
        jaccard=float(jaccard),
        mass_reallocated=float(0.5 * np.sum(np.abs(sol_a.w - sol_b.w))),
    )
