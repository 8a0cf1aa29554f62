"""Sensor-space electrophysiology simulation and minimum-norm source reconstruction.

Ground-truth sources are Gaussian-windowed cosine bursts: early stimulus-locked
components in visual/auditory regions, later reaction-locked components in
sensorimotor/default-mode regions. Sensors sit on a circle around the support and
see the sources through an inverse-square-distance lead field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import RoiSet
from .rng import stream

STIM_SOURCE_SYSTEMS = frozenset({"visual", "auditory"})
REACT_SOURCE_SYSTEMS = frozenset({"sensorimotor", "default-mode"})

STIM_BURST_CENTER_S = 0.100
STIM_BURST_WIDTH_S = 0.040
STIM_BURST_FREQ_HZ = 10.0
REACT_BURST_CENTER_S = 0.350
REACT_BURST_WIDTH_S = 0.080
REACT_BURST_FREQ_HZ = 6.0

DEFAULT_STIM_WINDOW = (0.070, 0.200)
DEFAULT_REACT_WINDOW = (0.300, 0.550)


@dataclass(frozen=True)
class LeadField:
    matrix: np.ndarray
    sensor_positions: np.ndarray

    @property
    def n_sensors(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_rois(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class SourceEstimate:
    samples: np.ndarray
    fs: float

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.fs


def build_lead_field(
    rois: RoiSet,
    n_sensors: int = 64,
    sensor_radius: float = 1.5,
    eps_lf: float = 0.1,
) -> LeadField:
    """Inverse-square-distance gains, normalized by the maximum entry."""
    if n_sensors < 1:
        raise ValueError("need at least one sensor")
    pos = rois.positions
    max_roi_radius = float(np.linalg.norm(pos, axis=1).max())
    if sensor_radius <= max_roi_radius:
        raise ValueError(
            f"sensor radius {sensor_radius} must exceed the outermost region "
            f"radius {max_roi_radius:.3f}"
        )
    angles = 2.0 * np.pi * np.arange(n_sensors) / n_sensors
    sensors = sensor_radius * np.column_stack([np.cos(angles), np.sin(angles)])
    d2 = np.sum((sensors[:, None, :] - pos[None, :, :]) ** 2, axis=-1)
    gain = 1.0 / (d2 + eps_lf)
    return LeadField(matrix=gain / gain.max(), sensor_positions=sensors)


def _burst(t: np.ndarray, center: float, width: float, freq: float) -> np.ndarray:
    return np.exp(-0.5 * ((t - center) / width) ** 2) * np.cos(
        2.0 * np.pi * freq * (t - center)
    )


def ground_truth_sources(
    rois: RoiSet, fs: float = 512.0, duration: float = 1.0
) -> np.ndarray:
    """Noise-free source time courses (n_samples x n_rois)."""
    n_samples = int(round(fs * duration))
    t = np.arange(n_samples) / fs
    sources = np.zeros((n_samples, len(rois)))
    stim = _burst(t, STIM_BURST_CENTER_S, STIM_BURST_WIDTH_S, STIM_BURST_FREQ_HZ)
    react = _burst(t, REACT_BURST_CENTER_S, REACT_BURST_WIDTH_S, REACT_BURST_FREQ_HZ)
    for roi in rois:
        if roi.system in STIM_SOURCE_SYSTEMS:
            sources[:, roi.index] += stim
        if roi.system in REACT_SOURCE_SYSTEMS:
            sources[:, roi.index] += react
    return sources


def simulate_erp_trials(
    rois: RoiSet,
    lead_field: LeadField,
    n_trials: int = 40,
    fs: float = 512.0,
    duration: float = 1.0,
    noise_std: float = 0.2,
    seed: int = 0,
) -> np.ndarray:
    """Trial-averaged sensor data (n_samples x n_sensors).

    Each trial adds fresh Gaussian sensor noise from the per-trial substream
    'eeg-trial', so parallel trial simulation reproduces serial results.
    """
    if n_trials < 1:
        raise ValueError("need at least one trial")
    clean = ground_truth_sources(rois, fs, duration) @ lead_field.matrix.T
    if noise_std == 0:
        return clean
    noise_sum = np.zeros_like(clean)
    for trial in range(n_trials):
        noise_sum += stream(seed, "eeg-trial", trial).standard_normal(clean.shape)
    return clean + noise_std * noise_sum / n_trials


def min_norm_inverse(lead_field: LeadField, lambda_reg: float = 0.05) -> np.ndarray:
    """Tikhonov-regularized minimum-norm operator L'(LL' + lambda I)^-1.

    Computed by a linear solve; matches the closed form to 1e-8.
    """
    if lambda_reg < 0:
        raise ValueError("lambda_reg must be nonnegative")
    l = lead_field.matrix
    gram = l @ l.T + lambda_reg * np.eye(l.shape[0])
    if lambda_reg == 0 and np.linalg.cond(gram) > 1e12:
        raise np.linalg.LinAlgError("sensor Gram matrix is singular at lambda = 0")
    return np.linalg.solve(gram, l).T


def apply_inverse(
    inverse_op: np.ndarray, sensor_data: np.ndarray, fs: float
) -> SourceEstimate:
    return SourceEstimate(samples=np.asarray(sensor_data) @ inverse_op.T, fs=fs)


def window_scores(
    est: SourceEstimate,
    stim_window: tuple[float, float] = DEFAULT_STIM_WINDOW,
    react_window: tuple[float, float] = DEFAULT_REACT_WINDOW,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean absolute source amplitude over the closed stimulus/reaction windows."""
    duration = est.n_samples / est.fs
    times = est.times
    scores = []
    for lo, hi in (stim_window, react_window):
        if lo < 0 or hi > duration or lo > hi:
            raise ValueError(f"window [{lo}, {hi}] outside epoch [0, {duration}]")
        mask = (times >= lo - 1e-12) & (times <= hi + 1e-12)
        if not mask.any():
            raise ValueError(f"window [{lo}, {hi}] contains no samples")
        scores.append(np.mean(np.abs(est.samples[mask]), axis=0))
    return scores[0], scores[1]
