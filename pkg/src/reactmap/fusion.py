"""Weighted geometric fusion of modality scores into balanced transport measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

DEFAULT_W_F = 0.55
DEFAULT_EPS0 = 1e-6
FUSION_GRID = tuple(np.linspace(0.0, 1.0, 9))


def normalize_unit_max(scores: np.ndarray) -> np.ndarray:
    s = np.asarray(scores, dtype=float)
    if np.any(s < 0):
        raise ValueError("scores must be nonnegative")
    m = s.max() if s.size else 0.0
    if m <= 0:
        raise ValueError("all-zero score profile cannot be normalized")
    return s / m


def fuse_profiles(
    a_fmri: np.ndarray,
    a_eeg: np.ndarray,
    w_f: float = DEFAULT_W_F,
    eps0: float = DEFAULT_EPS0,
) -> np.ndarray:
    """(a_fmri + eps0)^w_f * (a_eeg + eps0)^(1 - w_f), elementwise."""
    a = np.asarray(a_fmri, dtype=float)
    b = np.asarray(a_eeg, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"profile length mismatch: {a.shape} vs {b.shape}")
    if not 0.0 <= w_f <= 1.0:
        raise ValueError(f"fusion weight must lie in [0, 1], got {w_f}")
    return (a + eps0) ** w_f * (b + eps0) ** (1.0 - w_f)


@dataclass(frozen=True)
class MeasurePair:
    mu_stim: np.ndarray
    mu_react: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        for name, mu in (("mu_stim", self.mu_stim), ("mu_react", self.mu_react)):
            if np.any(mu < 0):
                raise ValueError(f"{name} has negative entries")
            if abs(mu.sum() - 1.0) > 1e-12:
                raise ValueError(f"{name} does not sum to one")
        if abs(self.b.sum()) > 1e-12:
            raise ValueError("supply-demand vector does not sum to zero")


def to_measures(fused_stim: np.ndarray, fused_react: np.ndarray) -> MeasurePair:
    """Normalize fused profiles to probability measures; b = mu_stim - mu_react."""
    fs = np.asarray(fused_stim, dtype=float)
    fr = np.asarray(fused_react, dtype=float)
    if fs.sum() <= 0 or fr.sum() <= 0:
        raise ValueError("fused profiles must have positive sums")
    mu_stim = fs / fs.sum()
    mu_react = fr / fr.sum()
    return MeasurePair(mu_stim=mu_stim, mu_react=mu_react, b=mu_stim - mu_react)


def top_quartile_set(values: np.ndarray) -> frozenset[int]:
    """Indices of the top-quartile entries (ties broken toward lower index)."""
    v = np.asarray(values, dtype=float)
    k = max(1, v.size // 4)
    order = sorted(range(v.size), key=lambda i: (-v[i], i))
    return frozenset(order[:k])


def top_k_set(values: np.ndarray, k: int) -> frozenset[int]:
    v = np.asarray(values, dtype=float)
    order = sorted(range(v.size), key=lambda i: (-v[i], i))
    return frozenset(order[:k])


@dataclass(frozen=True)
class SensitivitySweep:
    grid: np.ndarray
    mu_stim_matrix: np.ndarray
    per_roi_range: np.ndarray
    stable_set: frozenset[int]


def sensitivity_sweep(
    a_fmri: np.ndarray,
    a_eeg: np.ndarray,
    grid: np.ndarray | None = None,
    eps0: float = DEFAULT_EPS0,
) -> SensitivitySweep:
    """Fused stimulation measure across the fusion-weight grid.

    Reports the per-region value range over the grid and the stability set:
    regions that sit in the top-quartile support at every grid point.
    """
    g = np.asarray(FUSION_GRID if grid is None else grid, dtype=float)
    rows = []
    for w_f in g:
        fused = fuse_profiles(a_fmri, a_eeg, w_f=w_f, eps0=eps0)
        rows.append(fused / fused.sum())
    matrix = np.array(rows)
    stable = frozenset.intersection(*(top_quartile_set(row) for row in matrix))
    return SensitivitySweep(
        grid=g,
        mu_stim_matrix=matrix,
        per_roi_range=matrix.max(axis=0) - matrix.min(axis=0),
        stable_set=stable,
    )


def stable_top_set(matrix: np.ndarray, k: int) -> frozenset[int]:
    """Regions in the top-k of every sweep row."""
    return frozenset.intersection(*(top_k_set(row, k) for row in np.atleast_2d(matrix)))


def modality_agreement(a_fmri: np.ndarray, a_eeg: np.ndarray) -> dict:
    """Descriptive cross-modal agreement: rank correlation plus per-region products."""
    rho = spearmanr(a_fmri, a_eeg).statistic
    return {
        "spearman": float(rho) if np.isfinite(rho) else 0.0,
        "per_roi_product": (np.asarray(a_fmri) * np.asarray(a_eeg)).tolist(),
    }
