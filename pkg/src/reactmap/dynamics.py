"""Graph-induced linear stochastic dynamics, bridge control, and dynamic cost.

The inferred flow defines a weighted graph Laplacian L; the state follows
dX = (A X + B a + u) dt + C dW with A = -kappa I - beta_dyn L and diagonal noise
gain C = sigma0 I + sigma1 diag(sqrt(d)). Ensembles are integrated by
Euler-Maruyama with one seeded noise stream per path index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import stream
from .transport import FlowSolution

DEFAULT_KAPPA = 0.8
DEFAULT_BETA_DYN = 0.4
DEFAULT_SIGMA0 = 0.08
DEFAULT_SIGMA1 = 0.04
DEFAULT_T_SIM = 3.0
DEFAULT_DT = 0.005
DEFAULT_N_PATHS = 80
DEFAULT_EPS_BRIDGE = 0.05


class DynamicsError(RuntimeError):
    """Raised when integration produces a non-finite state."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class GraphOperators:
    W: np.ndarray
    S: np.ndarray
    d: np.ndarray
    L: np.ndarray
    A_dyn: np.ndarray
    C: np.ndarray
    kappa: float
    beta_dyn: float
    sigma0: float
    sigma1: float

    @property
    def n_nodes(self) -> int:
        return self.W.shape[0]


def graph_operators(
    solution: FlowSolution,
    kappa: float = DEFAULT_KAPPA,
    beta_dyn: float = DEFAULT_BETA_DYN,
    sigma0: float = DEFAULT_SIGMA0,
    sigma1: float = DEFAULT_SIGMA1,
) -> GraphOperators:
    """Weighted adjacency, Laplacian, drift, and noise gain from arc fluxes."""
    if np.any(solution.w < 0):
        raise ValueError("fluxes must be nonnegative")
    n = solution.n_nodes
    w_mat = np.zeros((n, n))
    np.add.at(w_mat, (solution.arcs[:, 0], solution.arcs[:, 1]), solution.w)
    s = 0.5 * (w_mat + w_mat.T)
    d = s.sum(axis=1)
    lap = np.diag(d) - s
    return GraphOperators(
        W=w_mat,
        S=s,
        d=d,
        L=lap,
        A_dyn=-kappa * np.eye(n) - beta_dyn * lap,
        C=sigma0 * np.eye(n) + sigma1 * np.diag(np.sqrt(d)),
        kappa=kappa,
        beta_dyn=beta_dyn,
        sigma0=sigma0,
        sigma1=sigma1,
    )


@dataclass(frozen=True)
class PathEnsemble:
    trajectories: np.ndarray
    dt: float
    controlled: bool
    controls: np.ndarray | None

    @property
    def n_paths(self) -> int:
        return self.trajectories.shape[0]

    @property
    def n_steps(self) -> int:
        return self.trajectories.shape[1] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.trajectories.shape[1]) * self.dt

    def terminal_mean(self) -> np.ndarray:
        return self.trajectories[:, -1, :].mean(axis=0)


def step_stim_input(
    profile: np.ndarray, gain: float = 1.0, t_on: float = 0.0, t_off: float = 0.3
) -> Callable[[float], np.ndarray]:
    """Constant stimulus injection g * profile on [t_on, t_off), zero after."""
    profile = gain * np.asarray(profile, dtype=float)
    zero = np.zeros_like(profile)

    def a(t: float) -> np.ndarray:
        return profile if t_on <= t < t_off else zero

    return a


def bridge_control(
    ops: GraphOperators,
    x: np.ndarray,
    t: float,
    m_target: np.ndarray,
    horizon: float,
    eps_bridge: float = DEFAULT_EPS_BRIDGE,
) -> np.ndarray:
    """u = C C' (m_target - x) / (horizon - t + eps_bridge); finite at t = horizon."""
    gain = ops.C @ ops.C.T
    return (np.asarray(m_target) - np.asarray(x)) @ gain.T / (horizon - t + eps_bridge)


def make_bridge_law(
    ops: GraphOperators,
    m_target: np.ndarray,
    horizon: float,
    eps_bridge: float = DEFAULT_EPS_BRIDGE,
) -> Callable[[np.ndarray, float], np.ndarray]:
    def law(x: np.ndarray, t: float) -> np.ndarray:
        return bridge_control(ops, x, t, m_target, horizon, eps_bridge)

    return law


def simulate_ensemble(
    ops: GraphOperators,
    x0: np.ndarray,
    stim_input: Callable[[float], np.ndarray] | None = None,
    control_law: Callable[[np.ndarray, float], np.ndarray] | None = None,
    t_sim: float = DEFAULT_T_SIM,
    dt: float = DEFAULT_DT,
    n_paths: int = DEFAULT_N_PATHS,
    seed: int = 0,
    noise: np.ndarray | None = None,
) -> PathEnsemble:
    """Euler-Maruyama ensemble; deterministic given the seed.

    X_{k+1} = X_k + (A X_k + a(t_k) + u_k) dt + C sqrt(dt) xi_k, with xi_k drawn
    from one substream per path index. ``noise`` overrides the internal draws
    (shape n_paths x n_steps x n), which is how coupled-increment convergence
    tests are built.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps_f = t_sim / dt
    if abs(steps_f - round(steps_f)) > 1e-9:
        raise ValueError(f"horizon {t_sim} not divisible by dt {dt}")
    n_steps = int(round(steps_f))
    n = ops.n_nodes
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"x0 must have shape ({n},)")

    if noise is None:
        noise = np.stack(
            [
                stream(seed, "path", p).standard_normal((n_steps, n))
                for p in range(n_paths)
            ]
        )
    elif noise.shape != (n_paths, n_steps, n):
        raise ValueError(f"noise must have shape ({n_paths}, {n_steps}, {n})")

    controlled = control_law is not None
    traj = np.empty((n_paths, n_steps + 1, n))
    controls = np.zeros((n_paths, n_steps, n)) if controlled else None
    x = np.tile(x0, (n_paths, 1))
    traj[:, 0, :] = x
    sqrt_dt = np.sqrt(dt)
    for k in range(n_steps):
        t = k * dt
        drift = x @ ops.A_dyn.T
        if stim_input is not None:
            drift = drift + stim_input(t)
        if controlled:
            u = control_law(x, t)
            controls[:, k, :] = u
            drift = drift + u
        x = x + drift * dt + sqrt_dt * (noise[:, k, :] @ ops.C.T)
        if not np.all(np.isfinite(x)):
            raise DynamicsError(f"non-finite state at step {k + 1}", step=k + 1)
        traj[:, k + 1, :] = x
    return PathEnsemble(trajectories=traj, dt=dt, controlled=controlled, controls=controls)


def dynamic_cost(
    ensemble: PathEnsemble, ops: GraphOperators, weighted: bool = True
) -> tuple[float, float]:
    """Monte Carlo quadratic control cost with its standard error.

    The weighted form is 1/2 integral u' (C C')^-1 u dt, the energy canonically
    paired with the bridge feedback; ``weighted=False`` gives plain 1/2 |u|^2.
    """
    if ensemble.controls is None:
        raise ValueError("ensemble carries no recorded controls")
    u = ensemble.controls
    if weighted:
        gain = ops.C @ ops.C.T
        try:
            np.linalg.cholesky(gain)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("C C' is singular") from exc
        quad = np.einsum("pkn,pkn->pk", u @ np.linalg.inv(gain).T, u)
    else:
        quad = np.einsum("pkn,pkn->pk", u, u)
    per_path = 0.5 * quad.sum(axis=1) * ensemble.dt
    j = float(per_path.mean())
    se = (
        float(per_path.std(ddof=1) / np.sqrt(ensemble.n_paths))
        if ensemble.n_paths > 1
        else 0.0
    )
    return j, se
