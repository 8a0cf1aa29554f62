"""Synthetic cortical support: region layout, diffusion tensors, kNN candidate graph.

The support is a two-shell elliptical layout: an outer shell of sensory/association
regions and an inner shell of relay regions, each region carrying a 2x2 diffusion
tensor whose principal axis follows the local shell tangent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

SYSTEMS = (
    "visual",
    "auditory",
    "sensorimotor",
    "dorsal-attention",
    "salience-ventral-attention",
    "limbic",
    "frontoparietal",
    "default-mode",
    "thalamic",
)

# Outer shell hosts sensory/association systems; the inner shell hosts the relay
# core. The canonical six-slot inner assignment places the thalamic pair on the
# corridor between the sensory entry cluster and the sensorimotor/default-mode
# sinks, so it can act as the aggregation bottleneck.
OUTER_SYSTEMS = (
    "visual",
    "auditory",
    "sensorimotor",
    "dorsal-attention",
    "salience-ventral-attention",
    "limbic",
)
INNER_SYSTEMS = ("thalamic", "frontoparietal", "default-mode")
INNER_SLOT_LABELS = (
    ("frontoparietal", "R"),
    ("thalamic", "R"),
    ("thalamic", "L"),
    ("frontoparietal", "L"),
    ("default-mode", "R"),
    ("default-mode", "L"),
)

HIGH_FA_SYSTEMS = frozenset(
    {"dorsal-attention", "salience-ventral-attention", "frontoparietal", "thalamic"}
)

LABEL_STEMS = {
    "visual": "Vis",
    "auditory": "Aud",
    "sensorimotor": "SomMot",
    "dorsal-attention": "DorsAttn",
    "salience-ventral-attention": "SalVentAttn",
    "limbic": "Limbic",
    "frontoparietal": "FrontPar",
    "default-mode": "DMN",
    "thalamic": "Thal",
}

DEFAULT_OUTER_RADII = (1.0, 0.75)
DEFAULT_INNER_RADII = (0.45, 0.35)

DEFAULT_FA_HIGH = 0.8
DEFAULT_FA_LOW = 0.15


@dataclass(frozen=True)
class Roi:
    """One region of interest on the synthetic cortical slice.

    ``tangent`` is the unit tangent of the shell ellipse at the region position;
    it fixes the principal axis of the diffusion tensor deterministically.
    """

    index: int
    label: str
    position: np.ndarray
    system: str
    tensor: np.ndarray
    tangent: np.ndarray
    shell: str


@dataclass(frozen=True)
class RoiSet:
    rois: tuple[Roi, ...]

    def __post_init__(self) -> None:
        labels = [r.label for r in self.rois]
        if len(set(labels)) != len(labels):
            raise ValueError("ROI labels must be unique")
        for r in self.rois:
            _check_spd(r.tensor, r.label)

    def __len__(self) -> int:
        return len(self.rois)

    def __iter__(self):
        return iter(self.rois)

    def __getitem__(self, i: int) -> Roi:
        return self.rois[i]

    @property
    def positions(self) -> np.ndarray:
        return np.array([r.position for r in self.rois], dtype=float)

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.rois]

    @property
    def systems(self) -> list[str]:
        return [r.system for r in self.rois]

    @property
    def tensors(self) -> np.ndarray:
        return np.array([r.tensor for r in self.rois], dtype=float)

    def fa_values(self) -> np.ndarray:
        return np.array([fractional_anisotropy(r.tensor) for r in self.rois])

    def indices_of_systems(self, systems: Iterable[str]) -> list[int]:
        wanted = set(systems)
        return [r.index for r in self.rois if r.system in wanted]


@dataclass(frozen=True)
class CandidateGraph:
    """Directed candidate graph from the kNN rule.

    Every undirected edge appears as two opposite arcs stored consecutively, so
    arc ``2e`` runs low-to-high node index and arc ``2e + 1`` is its reverse.
    The incidence matrix uses +1 at the tail row and -1 at the head row.
    """

    n_nodes: int
    arcs: np.ndarray
    lengths: np.ndarray
    incidence: np.ndarray

    @property
    def n_arcs(self) -> int:
        return self.arcs.shape[0]

    @property
    def undirected_edges(self) -> np.ndarray:
        return self.arcs[::2]

    def opposite_arc(self, arc_index: int) -> int:
        return arc_index ^ 1


def _check_spd(tensor: np.ndarray, label: str, sym_tol: float = 1e-12) -> None:
    t = np.asarray(tensor, dtype=float)
    if t.shape != (2, 2):
        raise ValueError(f"tensor of {label} must be 2x2")
    if abs(t[0, 1] - t[1, 0]) > sym_tol:
        raise ValueError(f"tensor of {label} is not symmetric")
    eigvals = np.linalg.eigvalsh(t)
    if np.any(eigvals <= 0):
        raise ValueError(f"tensor of {label} is not positive definite")


def fractional_anisotropy(tensor: np.ndarray) -> float:
    """2-D fractional anisotropy |l1 - l2| / sqrt(l1^2 + l2^2), in [0, 1)."""
    lam = np.linalg.eigvalsh(np.asarray(tensor, dtype=float))
    return float(abs(lam[1] - lam[0]) / math.sqrt(lam[0] ** 2 + lam[1] ** 2))


def _eigenvalues_for_fa(fa: float) -> tuple[float, float]:
    """Principal/secondary eigenvalues (l1 = 1) realizing a target FA level."""
    if not 0.0 <= fa < 1.0:
        raise ValueError(f"FA must lie in [0, 1), got {fa}")
    if fa == 0.0:
        return 1.0, 1.0
    g = 1.0 - fa * fa
    lam2 = (1.0 - math.sqrt(1.0 - g * g)) / g
    return 1.0, lam2


def _shell_points(count: int, radii: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    rx, ry = float(radii[0]), float(radii[1])
    if rx <= 0 or ry <= 0:
        raise ValueError("ellipse radii must be positive")
    angles = 2.0 * np.pi * np.arange(count) / max(count, 1)
    pos = np.column_stack([rx * np.cos(angles), ry * np.sin(angles)])
    tan = np.column_stack([-rx * np.sin(angles), ry * np.cos(angles)])
    tan /= np.linalg.norm(tan, axis=1, keepdims=True)
    return pos, tan


def _shell_labels(
    count: int,
    systems: Sequence[str],
    slot_layout: Sequence[tuple[str, str]] | None = None,
) -> list[tuple[str, str]]:
    """(system, label) pairs per slot.

    Uses the explicit slot layout when it matches the shell size, otherwise
    left/right pairs cycling through the system list; repeated labels get a
    numeric suffix so they stay unique on oversized shells.
    """
    out: list[tuple[str, str]] = []
    seen: dict[str, int] = {}
    for m in range(count):
        if slot_layout is not None and len(slot_layout) == count:
            system, side = slot_layout[m]
        else:
            system = systems[(m // 2) % len(systems)]
            side = "R" if m % 2 == 0 else "L"
        base = f"{LABEL_STEMS[system]}-{side}"
        n_prev = seen.get(base, 0)
        seen[base] = n_prev + 1
        out.append((system, base if n_prev == 0 else f"{base}{n_prev + 1}"))
    return out


def build_roi_layout(
    n_outer: int = 12,
    n_inner: int = 6,
    outer_radii: Sequence[float] = DEFAULT_OUTER_RADII,
    inner_radii: Sequence[float] = DEFAULT_INNER_RADII,
) -> RoiSet:
    """Place regions equally spaced on two concentric elliptical shells.

    Regions start with isotropic unit tensors; call :func:`assign_tensor_field`
    to install the anisotropy profile.
    """
    if n_outer < 0 or n_inner < 0 or n_outer + n_inner < 1:
        raise ValueError("need at least one region")
    rois: list[Roi] = []
    identity = np.eye(2)
    for shell, count, radii, systems, layout in (
        ("outer", n_outer, outer_radii, OUTER_SYSTEMS, None),
        ("inner", n_inner, inner_radii, INNER_SYSTEMS, INNER_SLOT_LABELS),
    ):
        if count == 0:
            continue
        pos, tan = _shell_points(count, radii)
        names = _shell_labels(count, systems, layout)
        for m in range(count):
            rois.append(
                Roi(
                    index=len(rois),
                    label=names[m][1],
                    position=pos[m],
                    system=names[m][0],
                    tensor=identity.copy(),
                    tangent=tan[m],
                    shell=shell,
                )
            )
    # Two shells with distinct radii cannot collide, but guard against
    # degenerate user-supplied radii.
    all_pos = np.array([r.position for r in rois])
    if len(rois) > 1:
        diff = all_pos[:, None, :] - all_pos[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        np.fill_diagonal(dist, np.inf)
        if dist.min() <= 1e-12:
            raise ValueError("layout produced coincident regions")
    return RoiSet(tuple(rois))


def assign_tensor_field(
    rois: RoiSet,
    high_fa_systems: Iterable[str] = HIGH_FA_SYSTEMS,
    fa_high: float = DEFAULT_FA_HIGH,
    fa_low: float = DEFAULT_FA_LOW,
) -> RoiSet:
    """Install shell-tangent-aligned SPD tensors realizing the requested FA levels."""
    if not (0.0 <= fa_low < fa_high < 1.0):
        raise ValueError(f"need 0 <= fa_low < fa_high < 1, got ({fa_low}, {fa_high})")
    high = set(high_fa_systems)
    out: list[Roi] = []
    for roi in rois:
        fa = fa_high if roi.system in high else fa_low
        lam1, lam2 = _eigenvalues_for_fa(fa)
        t = roi.tangent
        n = np.array([-t[1], t[0]])
        tensor = lam1 * np.outer(t, t) + lam2 * np.outer(n, n)
        tensor = 0.5 * (tensor + tensor.T)
        out.append(replace(roi, tensor=tensor))
    return RoiSet(tuple(out))


def knn_undirected_edges(positions: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Union-rule kNN edge set; distance ties break toward the lower node index."""
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    edges: set[tuple[int, int]] = set()
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        neighbors = [j for j in order if j != i][:k]
        for j in neighbors:
            edges.add((min(i, j), max(i, j)))
    return sorted(edges)


def incidence_from_arcs(n_nodes: int, arcs: np.ndarray) -> np.ndarray:
    a = np.zeros((n_nodes, len(arcs)))
    for e, (tail, head) in enumerate(arcs):
        a[tail, e] = 1.0
        a[head, e] = -1.0
    return a


def graph_from_edges(
    positions: np.ndarray, edges: Sequence[tuple[int, int]]
) -> CandidateGraph:
    """Duplicate undirected edges into opposite arc pairs and assemble incidence."""
    pos = np.asarray(positions, dtype=float)
    arcs = np.empty((2 * len(edges), 2), dtype=int)
    for e, (i, j) in enumerate(edges):
        if i == j:
            raise ValueError("self-loop edge")
        arcs[2 * e] = (i, j)
        arcs[2 * e + 1] = (j, i)
    lengths = np.linalg.norm(pos[arcs[:, 0]] - pos[arcs[:, 1]], axis=1)
    if np.any(lengths <= 0):
        raise ValueError("zero-length edge between coincident positions")
    return CandidateGraph(
        n_nodes=pos.shape[0],
        arcs=arcs,
        lengths=lengths,
        incidence=incidence_from_arcs(pos.shape[0], arcs),
    )


def build_knn_graph(rois: RoiSet, k: int = 5) -> CandidateGraph:
    positions = rois.positions
    return graph_from_edges(positions, knn_undirected_edges(positions, k))
