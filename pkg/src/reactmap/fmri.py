"""Block-design BOLD simulation and general linear model fitting.

Boxcar regressors follow a repeating 120 s cycle (30 s stimulus, 30 s rest, 30 s
reaction, 30 s rest), are convolved with the canonical double-gamma response on a
fine grid, and sampled at the repetition time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import gamma as gamma_dist

from .geometry import RoiSet
from .rng import stream

HRF_A1 = 6.0
HRF_A2 = 16.0
HRF_B1 = 1.0
HRF_B2 = 1.0
HRF_RATIO = 1.0 / 6.0
HRF_SUPPORT_S = 32.0

BLOCK_S = 30.0
CYCLE_S = 120.0

STIM_SYSTEMS = frozenset({"visual", "auditory"})
REACT_SYSTEMS = frozenset({"sensorimotor", "default-mode"})

REGRESSOR_NAMES = ("stim", "react", "intercept")


def hrf_double_gamma(time_grid: np.ndarray) -> np.ndarray:
    """Canonical double-gamma response, rescaled to unit peak magnitude.

    h(t) = pdf_gamma(t; 6, 1) - (1/6) pdf_gamma(t; 16, 1), supported on [0, 32] s.
    """
    t = np.asarray(time_grid, dtype=float)
    if t.size == 0:
        raise ValueError("empty time grid")
    if np.any(t < 0):
        raise ValueError("time grid must be nonnegative")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    h = gamma_dist.pdf(t, HRF_A1, scale=HRF_B1) - HRF_RATIO * gamma_dist.pdf(
        t, HRF_A2, scale=HRF_B2
    )
    h = np.where(t > HRF_SUPPORT_S, 0.0, h)
    peak = np.max(np.abs(h))
    if peak == 0:
        raise ValueError("time grid misses the response support")
    return h / peak


def block_boxcars(times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pre-convolution stimulus/reaction indicators of the repeating block cycle."""
    phase = np.mod(np.asarray(times, dtype=float), CYCLE_S)
    stim = (phase < BLOCK_S).astype(float)
    react = ((phase >= 2 * BLOCK_S) & (phase < 3 * BLOCK_S)).astype(float)
    return stim, react


@dataclass(frozen=True)
class DesignMatrix:
    n_volumes: int
    tr: float
    times: np.ndarray
    x_stim: np.ndarray
    x_react: np.ndarray
    intercept: np.ndarray
    boxcar_stim: np.ndarray
    boxcar_react: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([self.x_stim, self.x_react, self.intercept])


def build_block_design(
    total_s: float = 300.0, tr_s: float = 2.0, fine_dt: float = 0.1
) -> DesignMatrix:
    """HRF-convolved block design sampled at the repetition time.

    Convolution runs on the ``fine_dt`` grid before decimation to TR so the
    response peak is not aliased.
    """
    if tr_s <= 0 or total_s <= 0:
        raise ValueError("durations must be positive")
    n_vol_f = total_s / tr_s
    if abs(n_vol_f - round(n_vol_f)) > 1e-9:
        raise ValueError(f"total duration {total_s} not divisible by TR {tr_s}")
    n_vol = int(round(n_vol_f))
    step_f = tr_s / fine_dt
    if abs(step_f - round(step_f)) > 1e-9:
        raise ValueError(f"TR {tr_s} not divisible by fine grid step {fine_dt}")
    step = int(round(step_f))

    t_fine = np.arange(int(round(total_s / fine_dt))) * fine_dt
    stim_f, react_f = block_boxcars(t_fine)
    t_hrf = np.arange(int(round(HRF_SUPPORT_S / fine_dt)) + 1) * fine_dt
    h = hrf_double_gamma(t_hrf)
    x_stim_f = np.convolve(stim_f, h)[: t_fine.size] * fine_dt
    x_react_f = np.convolve(react_f, h)[: t_fine.size] * fine_dt

    idx = np.arange(n_vol) * step
    times = idx * fine_dt
    stim_vol, react_vol = block_boxcars(times)
    return DesignMatrix(
        n_volumes=n_vol,
        tr=tr_s,
        times=times,
        x_stim=x_stim_f[idx],
        x_react=x_react_f[idx],
        intercept=np.ones(n_vol),
        boxcar_stim=stim_vol,
        boxcar_react=react_vol,
    )


def default_beta_true(
    rois: RoiSet,
    active: float = 1.0,
    background: float = 0.1,
    intercept: float = 100.0,
) -> np.ndarray:
    """Ground-truth coefficients: stimulus drive on visual/auditory regions,
    reaction drive on sensorimotor/default-mode regions, weak cross-terms
    elsewhere."""
    n = len(rois)
    beta = np.full((3, n), background)
    beta[2] = intercept
    for roi in rois:
        if roi.system in STIM_SYSTEMS:
            beta[0, roi.index] = active
        if roi.system in REACT_SYSTEMS:
            beta[1, roi.index] = active
    return beta


def simulate_bold(
    design: DesignMatrix,
    beta_true: np.ndarray,
    noise_std: float = 0.15,
    seed: int = 0,
) -> np.ndarray:
    """Y = X beta + Gaussian noise, drawn from the 'fmri-noise' substream."""
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    x = design.matrix
    beta_true = np.asarray(beta_true, dtype=float)
    if beta_true.shape[0] != x.shape[1]:
        raise ValueError(
            f"beta_true must have {x.shape[1]} rows, got {beta_true.shape[0]}"
        )
    y = x @ beta_true
    if noise_std > 0:
        y = y + noise_std * stream(seed, "fmri-noise").standard_normal(y.shape)
    return y


@dataclass(frozen=True)
class GlmResult:
    betas: np.ndarray
    tstats: np.ndarray
    residual_variance: np.ndarray
    dof: int


def glm_fit(y: np.ndarray, design: DesignMatrix) -> GlmResult:
    """Ordinary least squares with per-regressor t statistics.

    The t statistic for regressor j is beta_j / sqrt(sigma^2 (X'X)^-1_jj) with the
    unbiased residual variance over n - p degrees of freedom.
    """
    x = design.matrix
    y = np.atleast_2d(np.asarray(y, dtype=float))
    n, p = x.shape
    if y.shape[0] != n:
        raise ValueError(f"data has {y.shape[0]} rows, design has {n}")
    if np.linalg.matrix_rank(x) < p:
        raise ValueError("design matrix is rank deficient")
    if n <= p:
        raise ValueError("need more volumes than regressors")
    betas, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ betas
    dof = n - p
    sigma2 = np.sum(resid * resid, axis=0) / dof
    xtx_inv = np.linalg.inv(x.T @ x)
    se = np.sqrt(np.outer(np.diag(xtx_inv), sigma2))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstats = np.where(
            se > 0, betas / se, np.where(betas == 0, 0.0, np.sign(betas) * np.inf)
        )
    return GlmResult(betas=betas, tstats=tstats, residual_variance=sigma2, dof=dof)


def fmri_scores(glm: GlmResult) -> tuple[np.ndarray, np.ndarray]:
    """Positive parts of the stimulus and reaction contrast t statistics."""
    return np.clip(glm.tstats[0], 0.0, None), np.clip(glm.tstats[1], 0.0, None)


def bold_connectivity(y: np.ndarray) -> np.ndarray:
    """Pearson correlation between region time courses (descriptive output)."""
    return np.corrcoef(np.asarray(y, dtype=float), rowvar=False)
