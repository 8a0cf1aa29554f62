"""Five-stage pipeline runner: simulate, fusion, costs, transport, dynamics.

Stages communicate through the CSV/JSON artifacts in the output directory, so any
stage subset can be re-run against cached upstream outputs. A manifest records the
config echo, seeds, per-stage status, and content hashes of every artifact;
wall-clock times live in a separate runtime section so reruns with identical
config produce byte-identical result files.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from . import eeg, fmri, fusion, io, tradeoff, transport
from .config import STAGES, PipelineConfig, config_to_dict
from .geometry import CandidateGraph, RoiSet, assign_tensor_field, build_knn_graph, build_roi_layout
from .rng import child_seed

MANIFEST_SCHEMA = "reactmap/manifest-v1"


@dataclass
class PipelineContext:
    """In-memory artifacts shared between stages within one invocation."""

    rois: RoiSet | None = None
    graph: CandidateGraph | None = None
    costs: dict[str, np.ndarray] = field(default_factory=dict)
    scores: dict[str, np.ndarray] = field(default_factory=dict)
    measures: fusion.MeasurePair | None = None
    solutions: dict[str, transport.FlowSolution] = field(default_factory=dict)
    records: list[tradeoff.TradeoffRecord] = field(default_factory=list)
    metrics: dict[str, float] = field(default_factory=dict)


def build_support(config: PipelineConfig) -> tuple[RoiSet, CandidateGraph]:
    """Deterministic region layout, tensor field, and candidate graph."""
    g = config.geometry
    rois = build_roi_layout(g.n_outer, g.n_inner, g.outer_radii, g.inner_radii)
    rois = assign_tensor_field(rois, fa_high=g.fa_high, fa_low=g.fa_low)
    return rois, build_knn_graph(rois, g.knn_k)


def _ensure_support(config: PipelineConfig, ctx: PipelineContext) -> None:
    if ctx.rois is None or ctx.graph is None:
        ctx.rois, ctx.graph = build_support(config)


def _ensure_scores(out: Path, ctx: PipelineContext) -> None:
    if ctx.scores:
        return
    labels = ctx.rois.labels
    scores = io.read_json(out / "fmri" / "scores.json")
    ctx.scores["fmri_stim"] = np.array([scores["stim"][l] for l in labels])
    ctx.scores["fmri_react"] = np.array([scores["react"][l] for l in labels])
    cols = io.read_csv_columns(out / "eeg" / "window_scores.csv")
    order = {l: i for i, l in enumerate(cols["label"])}
    ctx.scores["eeg_stim"] = np.array(
        [float(cols["stim_score"][order[l]]) for l in labels]
    )
    ctx.scores["eeg_react"] = np.array(
        [float(cols["react_score"][order[l]]) for l in labels]
    )


def _ensure_measures(out: Path, ctx: PipelineContext) -> None:
    if ctx.measures is not None:
        return
    data = io.read_json(out / "fusion" / "measures.json")
    ctx.measures = fusion.MeasurePair(
        mu_stim=np.array(data["mu_stim"]),
        mu_react=np.array(data["mu_react"]),
        b=np.array(data["b"]),
    )


def _ensure_costs(out: Path, ctx: PipelineContext) -> None:
    if ctx.costs:
        return
    cols = io.read_csv_columns(out / "geometry" / "costs.csv")
    for kind in ("isotropic", "anisotropic"):
        key = f"beta_{kind}"
        if key in cols:
            ctx.costs[kind] = np.array([float(v) for v in cols[key]])


def _ensure_solution(out: Path, ctx: PipelineContext, kind: str) -> transport.FlowSolution:
    if kind not in ctx.solutions:
        sol, _ = io.solution_from_dict(
            io.read_json(out / "transport" / f"solution_{kind}.json")
        )
        ctx.solutions[kind] = sol
    return ctx.solutions[kind]


# ---------------------------------------------------------------------------
# Stages


def stage_simulate(config: PipelineConfig, ctx: PipelineContext, out: Path) -> list[Path]:
    _ensure_support(config, ctx)
    rois = ctx.rois
    labels = rois.labels
    seed = config.master_seed
    files: list[Path] = []

    # fMRI branch
    fc = config.fmri
    design = fmri.build_block_design(fc.total_s, fc.tr_s, fc.fine_dt)
    beta_true = fmri.default_beta_true(
        rois, fc.beta_active, fc.beta_background, fc.beta_intercept
    )
    y = fmri.simulate_bold(design, beta_true, fc.noise_std, seed=seed)
    glm = fmri.glm_fit(y, design)
    stim_scores, react_scores = fmri.fmri_scores(glm)
    ctx.scores["fmri_stim"] = stim_scores
    ctx.scores["fmri_react"] = react_scores
    conn = fmri.bold_connectivity(y)

    files.append(
        io.write_csv(
            out / "fmri" / "design.csv",
            ["time_s", "x_stim", "x_react", "intercept", "boxcar_stim", "boxcar_react"],
            zip(
                design.times,
                design.x_stim,
                design.x_react,
                design.intercept,
                design.boxcar_stim,
                design.boxcar_react,
            ),
        )
    )
    files.append(
        io.write_csv(
            out / "fmri" / "bold.csv",
            ["time_s", *labels],
            (np.column_stack([design.times, y])),
        )
    )
    for name, table in (("betas", glm.betas), ("tstats", glm.tstats)):
        files.append(
            io.write_csv(
                out / "fmri" / f"{name}.csv",
                ["regressor", *labels],
                (
                    [fmri.REGRESSOR_NAMES[i], *table[i]]
                    for i in range(len(fmri.REGRESSOR_NAMES))
                ),
            )
        )
    files.append(
        io.write_csv(
            out / "fmri" / "connectivity.csv",
            ["label", *labels],
            ([labels[i], *conn[i]] for i in range(len(labels))),
        )
    )
    files.append(
        io.write_json(
            out / "fmri" / "scores.json",
            {
                "schema": "reactmap/scores-v1",
                "stim": dict(zip(labels, stim_scores)),
                "react": dict(zip(labels, react_scores)),
            },
        )
    )

    # EEG branch
    ec = config.eeg
    lead = eeg.build_lead_field(rois, ec.n_sensors, ec.sensor_radius, ec.eps_lf)
    avg = eeg.simulate_erp_trials(
        rois, lead, ec.n_trials, ec.fs, ec.duration_s, ec.noise_std, seed=seed
    )
    inverse = eeg.min_norm_inverse(lead, ec.lambda_reg)
    est = eeg.apply_inverse(inverse, avg, ec.fs)
    eeg_stim, eeg_react = eeg.window_scores(est, ec.stim_window, ec.react_window)
    ctx.scores["eeg_stim"] = eeg_stim
    ctx.scores["eeg_react"] = eeg_react

    times = est.times
    sensor_names = [f"s{idx:02d}" for idx in range(ec.n_sensors)]
    files.append(
        io.write_csv(
            out / "eeg" / "sensors_avg.csv",
            ["time_s", *sensor_names],
            np.column_stack([times, avg]),
        )
    )
    files.append(
        io.write_csv(
            out / "eeg" / "sources.csv",
            ["time_s", *labels],
            np.column_stack([times, est.samples]),
        )
    )
    files.append(
        io.write_csv(
            out / "eeg" / "window_scores.csv",
            ["label", "stim_score", "react_score"],
            zip(labels, eeg_stim, eeg_react),
        )
    )
    maps = {}
    for name, t_map in (("map_100ms", 0.100), ("map_350ms", 0.350)):
        idx = int(round(t_map * ec.fs))
        maps[name] = dict(zip(labels, np.abs(est.samples[idx])))
    files.append(
        io.write_json(
            out / "eeg" / "source_maps.json",
            {"schema": "reactmap/source-maps-v1", **maps},
        )
    )
    return files


def stage_fusion(config: PipelineConfig, ctx: PipelineContext, out: Path) -> list[Path]:
    _ensure_support(config, ctx)
    _ensure_scores(out, ctx)
    labels = ctx.rois.labels
    fc = config.fusion
    norm = {key: fusion.normalize_unit_max(ctx.scores[key]) for key in ctx.scores}
    fused_stim = fusion.fuse_profiles(
        norm["fmri_stim"], norm["eeg_stim"], fc.w_f, fc.eps0
    )
    fused_react = fusion.fuse_profiles(
        norm["fmri_react"], norm["eeg_react"], fc.w_f, fc.eps0
    )
    measures = fusion.to_measures(fused_stim, fused_react)
    ctx.measures = measures
    sweep = fusion.sensitivity_sweep(
        norm["fmri_stim"], norm["eeg_stim"], np.array(fc.grid), fc.eps0
    )

    files = [
        io.write_json(
            out / "fusion" / "measures.json",
            io.measures_to_dict(
                labels, measures.mu_stim, measures.mu_react, measures.b, fc.w_f
            ),
        ),
        io.write_csv(
            out / "fusion" / "sweep.csv",
            ["w_f", *labels],
            np.column_stack([sweep.grid, sweep.mu_stim_matrix]),
        ),
        io.write_json(
            out / "fusion" / "agreement.json",
            {
                "schema": "reactmap/agreement-v1",
                "stim": fusion.modality_agreement(norm["fmri_stim"], norm["eeg_stim"]),
                "react": fusion.modality_agreement(
                    norm["fmri_react"], norm["eeg_react"]
                ),
                "stable_top_quartile": sorted(sweep.stable_set),
                "per_roi_range": dict(zip(labels, sweep.per_roi_range)),
            },
        ),
    ]
    return files


def stage_costs(config: PipelineConfig, ctx: PipelineContext, out: Path) -> list[Path]:
    _ensure_support(config, ctx)
    rois, graph = ctx.rois, ctx.graph
    cc = config.cost
    ctx.costs["isotropic"] = transport.arc_costs(
        rois, graph, "isotropic", c_iso=cc.c_iso
    ).beta
    ctx.costs["anisotropic"] = transport.arc_costs(
        rois, graph, "anisotropic", eps=cc.eps
    ).beta
    labels = rois.labels
    files = [
        io.write_json(out / "geometry" / "rois.json", io.roiset_to_dict(rois)),
        io.write_json(out / "geometry" / "graph.json", io.graph_to_dict(graph)),
        io.write_csv(
            out / "geometry" / "costs.csv",
            [
                "arc",
                "tail",
                "head",
                "tail_label",
                "head_label",
                "length",
                "beta_isotropic",
                "beta_anisotropic",
            ],
            (
                [
                    e,
                    t,
                    h,
                    labels[t],
                    labels[h],
                    graph.lengths[e],
                    ctx.costs["isotropic"][e],
                    ctx.costs["anisotropic"][e],
                ]
                for e, (t, h) in enumerate(graph.arcs)
            ),
        ),
    ]
    return files


def stage_transport(config: PipelineConfig, ctx: PipelineContext, out: Path) -> list[Path]:
    _ensure_support(config, ctx)
    _ensure_costs(out, ctx)
    _ensure_measures(out, ctx)
    graph, labels = ctx.graph, ctx.rois.labels
    a, b = graph.incidence, ctx.measures.b
    bc = config.bot
    seed = config.master_seed
    kinds = (
        ("isotropic", "anisotropic") if config.cost_kind == "both" else (config.cost_kind,)
    )
    files: list[Path] = []
    for kind in kinds:
        sol = transport.solve_bot(
            a,
            b,
            ctx.costs[kind],
            alpha=bc.alpha,
            restarts=bc.restarts,
            tol=bc.tol,
            seed=child_seed(seed, f"bot-{kind}"),
            maxiter=bc.maxiter,
            smoothing=bc.smoothing,
            perturbation=bc.perturbation,
            perturbation_max=bc.perturbation_max,
            rel_threshold=bc.rel_threshold,
        )
        ctx.solutions[kind] = sol
        files.append(
            io.write_json(
                out / "transport" / f"solution_{kind}.json",
                io.solution_to_dict(sol, ctx.costs[kind], labels, kind),
            )
        )
        ctx.metrics[f"e_alpha_{kind}"] = sol.objective
        ctx.metrics[f"support_size_{kind}"] = sol.support_size

    primary_kind = "anisotropic" if "anisotropic" in ctx.solutions else "isotropic"
    primary = ctx.solutions[primary_kind]
    beta_primary = ctx.costs[primary_kind]

    if config.baselines:
        linear = transport.linear_flow_oracle(a, b, beta_primary)
        surrogate = transport.shortest_path_surrogate(a, b, beta_primary)
        ctx.solutions["linear"] = linear
        ctx.solutions["surrogate"] = surrogate
        for kind, sol in (("linear", linear), ("surrogate", surrogate)):
            files.append(
                io.write_json(
                    out / "transport" / f"solution_{kind}.json",
                    io.solution_to_dict(sol, beta_primary, labels, primary_kind),
                )
            )

    stats = transport.relay_statistics(primary, b)
    files.append(
        io.write_csv(
            out / "transport" / "relay_stats.csv",
            ["label", "b", "inflow", "outflow", "relay_score", "class"],
            zip(labels, b, stats.inflow, stats.outflow, stats.relay_score, stats.classes),
        )
    )

    if "isotropic" in ctx.solutions and "anisotropic" in ctx.solutions:
        comp = transport.flux_comparison(
            ctx.solutions["isotropic"], ctx.solutions["anisotropic"]
        )
        files.append(
            io.write_csv(
                out / "transport" / "flux_comparison.csv",
                ["arc", "tail_label", "head_label", "w_iso", "w_aniso", "difference", "shared_support"],
                (
                    [
                        e,
                        labels[graph.arcs[e, 0]],
                        labels[graph.arcs[e, 1]],
                        comp.w_a[e],
                        comp.w_b[e],
                        comp.difference[e],
                        bool(comp.shared_support[e]),
                    ]
                    for e in range(graph.n_arcs)
                ),
            )
        )
        files.append(
            io.write_json(
                out / "transport" / "comparison.json",
                {
                    "schema": "reactmap/comparison-v1",
                    "jaccard": comp.jaccard,
                    "mass_reallocated": comp.mass_reallocated,
                },
            )
        )
        ctx.metrics["jaccard_iso_aniso"] = comp.jaccard
        ctx.metrics["mass_reallocated"] = comp.mass_reallocated
    return files


def _write_ensemble_csv(path: Path, ensemble: dyn.PathEnsemble) -> Path:
    traj = ensemble.trajectories
    n_paths, n_points, n_nodes = traj.shape

    def rows():
        for p in range(n_paths):
            for k in range(n_points):
                for v in range(n_nodes):
                    yield (p, k, v, traj[p, k, v])

    return io.write_csv(path, ["path", "step", "node", "value"], rows())


def stage_dynamics(config: PipelineConfig, ctx: PipelineContext, out: Path) -> list[Path]:
    _ensure_support(config, ctx)
    _ensure_costs(out, ctx)
    _ensure_measures(out, ctx)
    primary_kind = "anisotropic" if config.cost_kind in ("both", "anisotropic") else "isotropic"
    primary = _ensure_solution(out, ctx, primary_kind)
    labels = ctx.rois.labels
    dc = config.dynamics
    seed = config.master_seed

    measures = ctx.measures
    x0 = measures.mu_stim / measures.mu_stim.max()
    m_target = measures.mu_react / measures.mu_react.max()
    stim = dyn.step_stim_input(measures.mu_stim, dc.stim_gain, dc.stim_t_on, dc.stim_t_off)

    ops = dyn.graph_operators(primary, dc.kappa, dc.beta_dyn, dc.sigma0, dc.sigma1)
    law = dyn.make_bridge_law(ops, m_target, dc.t_sim, dc.eps_bridge)
    uncontrolled = dyn.simulate_ensemble(
        ops, x0, stim, None, dc.t_sim, dc.dt, dc.n_paths,
        seed=child_seed(seed, "ensemble-unctrl"),
    )
    controlled = dyn.simulate_ensemble(
        ops, x0, stim, law, dc.t_sim, dc.dt, dc.n_paths,
        seed=child_seed(seed, "ensemble-ctrl"),
    )
    j_dyn, j_se = dyn.dynamic_cost(controlled, ops, weighted=dc.weighted_cost)
    unctrl_dist = float(np.linalg.norm(uncontrolled.terminal_mean() - m_target))
    ctrl_dist = float(np.linalg.norm(controlled.terminal_mean() - m_target))
    ctx.metrics.update(
        {
            "j_dyn": j_dyn,
            "j_dyn_se": j_se,
            "unctrl_terminal_dist": unctrl_dist,
            "ctrl_terminal_dist": ctrl_dist,
        }
    )

    checkpoints = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, dc.t_sim]
    summary = {
        "schema": "reactmap/ensemble-summary-v1",
        "labels": labels,
        "x0": x0,
        "m_target": m_target,
        "dt": dc.dt,
        "t_sim": dc.t_sim,
        "n_paths": dc.n_paths,
        "j_dyn": j_dyn,
        "j_dyn_se": j_se,
        "weighted_cost": dc.weighted_cost,
        "stim_input": {
            "kind": "step",
            "gain": dc.stim_gain,
            "t_on": dc.stim_t_on,
            "t_off": dc.stim_t_off,
            "profile": measures.mu_stim,
            "note": "declared default, not a measured quantity",
        },
        "terminal_distance": {"uncontrolled": unctrl_dist, "controlled": ctrl_dist},
    }
    for name, ens in (("uncontrolled", uncontrolled), ("controlled", controlled)):
        steps = [int(round(t / dc.dt)) for t in checkpoints]
        summary[name] = {
            "checkpoint_times": checkpoints,
            "mean": [ens.trajectories[:, k, :].mean(axis=0) for k in steps],
            "std": [ens.trajectories[:, k, :].std(axis=0) for k in steps],
            "terminal_mean": ens.terminal_mean(),
        }
    files = [io.write_json(out / "dynamics" / "ensemble_summary.json", summary)]
    if dc.ensembles == "full":
        files.append(
            _write_ensemble_csv(out / "dynamics" / "ensemble_uncontrolled.csv", uncontrolled)
        )
        files.append(
            _write_ensemble_csv(out / "dynamics" / "ensemble_controlled.csv", controlled)
        )

    # Branching-exponent grid and trade-off analysis
    tc = config.tradeoff
    grid = tradeoff.alpha_grid(tc.alpha_grid_size, tc.alpha_grid_lo, tc.alpha_grid_hi)
    records = tradeoff.alpha_grid_run(
        ctx.graph.incidence,
        measures.b,
        ctx.costs[primary_kind],
        x0=x0,
        m_target=m_target,
        grid=grid,
        stim_input=stim,
        kappa=dc.kappa,
        beta_dyn=dc.beta_dyn,
        sigma0=dc.sigma0,
        sigma1=dc.sigma1,
        restarts=config.bot.restarts,
        tol=config.bot.tol,
        maxiter=config.bot.maxiter,
        t_sim=dc.t_sim,
        dt=dc.dt,
        n_paths=dc.n_paths,
        eps_bridge=dc.eps_bridge,
        weighted_cost=dc.weighted_cost,
        double_paths=tc.double_paths,
        seed=child_seed(seed, "tradeoff"),
    )
    ctx.records = records
    for i, rec in enumerate(records):
        if rec.solution is not None:
            rec.solution_ref = f"tradeoff/solutions/alpha_{i:02d}.json"
            files.append(
                io.write_json(
                    out / rec.solution_ref,
                    io.solution_to_dict(
                        rec.solution, ctx.costs[primary_kind], labels, primary_kind
                    ),
                )
            )
    files.append(
        io.write_csv(
            out / "tradeoff" / "records.csv",
            ["alpha", "e_alpha", "j_dyn", "j_dyn_se", "j_dyn_double", "support_size", "degenerate", "solution_ref"],
            (
                [r.alpha, r.e_alpha, r.j_dyn, r.j_dyn_se, r.j_dyn_double, r.support_size, r.degenerate, r.solution_ref]
                for r in records
            ),
        )
    )
    lam = tradeoff.lambda_grid(tc.lambda_grid_size, tc.lambda_grid_lo, tc.lambda_grid_hi)
    sweep = tradeoff.lambda_sweep(records, lam)
    files.append(
        io.write_csv(
            out / "tradeoff" / "lambda_sweep.csv",
            ["lambda", *(f"F_alpha_{r.alpha:.4f}" for r in records), "argmin"],
            (
                [lam[g], *sweep.f_matrix[:, g], int(sweep.argmin_per_lambda[g])]
                for g in range(lam.size)
            ),
        )
    )
    frontier = tradeoff.pareto_frontier(records)
    frontier_alphas = {r.alpha for r in frontier}
    files.append(
        io.write_json(
            out / "tradeoff" / "frontier.json",
            {
                "schema": "reactmap/frontier-v1",
                "points": [
                    {
                        "alpha": r.alpha,
                        "e_alpha": r.e_alpha,
                        "j_dyn": r.j_dyn,
                        "support_size": r.support_size,
                        "degenerate": r.degenerate,
                        "pareto": (not r.degenerate) and r.alpha in frontier_alphas,
                    }
                    for r in records
                ],
            },
        )
    )
    files.append(
        io.write_json(
            out / "tradeoff" / "reversals.json",
            {
                "schema": "reactmap/reversals-v1",
                "lambda_grid": {"lo": tc.lambda_grid_lo, "hi": tc.lambda_grid_hi, "size": tc.lambda_grid_size},
                "events": [
                    {
                        "index_i": ev.index_i,
                        "index_j": ev.index_j,
                        "alpha_i": ev.alpha_i,
                        "alpha_j": ev.alpha_j,
                        "lambda_star": ev.lambda_star,
                        "grid_interval": list(ev.grid_interval),
                        "noise_sensitive": ev.noise_sensitive,
                    }
                    for ev in sweep.reversal_events
                ],
            },
        )
    )
    ctx.metrics["n_pareto"] = len(frontier)
    ctx.metrics["n_reversals"] = len(sweep.reversal_events)
    return files


_STAGE_FUNCS = {
    "simulate": stage_simulate,
    "fusion": stage_fusion,
    "costs": stage_costs,
    "transport": stage_transport,
    "dynamics": stage_dynamics,
}


def run_pipeline(
    config: PipelineConfig,
    out_dir: str | Path | None = None,
    stages: tuple[str, ...] | None = None,
) -> dict:
    """Execute the selected stages and write the run manifest.

    Returns the manifest dict. Re-running with the same config reproduces
    byte-identical artifacts; wall times are segregated under "runtime".
    """
    out = Path(out_dir if out_dir is not None else config.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    selected = tuple(stages if stages is not None else config.stages)
    for s in selected:
        if s not in STAGES:
            raise ValueError(f"unknown stage {s!r}; valid stages: {STAGES}")

    ctx = PipelineContext()
    stage_entries = []
    wall_times: dict[str, float] = {}
    failed = False
    for name in STAGES:
        if name not in selected:
            stage_entries.append({"name": name, "status": "not-selected", "files": []})
            continue
        if failed:
            stage_entries.append({"name": name, "status": "skipped", "files": []})
            continue
        t0 = time.perf_counter()
        try:
            written = _STAGE_FUNCS[name](config, ctx, out)
        except Exception as exc:  # noqa: BLE001 - manifest records the failure
            wall_times[name] = time.perf_counter() - t0
            stage_entries.append(
                {"name": name, "status": "failed", "files": [], "error": str(exc)}
            )
            failed = True
            continue
        wall_times[name] = time.perf_counter() - t0
        stage_entries.append(
            {
                "name": name,
                "status": "completed",
                "files": sorted(str(p.relative_to(out)) for p in written),
            }
        )

    hashes = {}
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.suffix in (".csv", ".json") and path.name != "manifest.json":
            hashes[str(path.relative_to(out))] = io.sha256_file(path)

    config_echo = config_to_dict(config)
    config_echo["output_dir"] = None  # actual location recorded under runtime
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "config": config_echo,
        "master_seed": config.master_seed,
        "stages": stage_entries,
        "files": hashes,
        "metrics": dict(sorted(ctx.metrics.items())),
        "runtime": {
            "wall_times_s": wall_times,
            "output_dir": str(out),
        },
    }
    io.write_json(out / "manifest.json", manifest)
    return manifest


def _flatten(prefix: str, obj) -> dict[str, object]:
    flat: dict[str, object] = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            flat.update(_flatten(f"{prefix}.{k}" if prefix else str(k), v))
    else:
        flat[prefix] = obj
    return flat


def diff_runs(manifest_a: str | Path, manifest_b: str | Path) -> dict:
    """Structured diff of two runs: config deltas, differing files, metric deltas."""
    path_a, path_b = Path(manifest_a), Path(manifest_b)
    a = io.read_json(path_a)
    b = io.read_json(path_b)
    if a.get("schema") != b.get("schema"):
        raise ValueError(
            f"manifest schema mismatch: {a.get('schema')!r} vs {b.get('schema')!r}"
        )

    flat_a = _flatten("", a["config"])
    flat_b = _flatten("", b["config"])
    config_delta = {
        key: {"a": flat_a.get(key), "b": flat_b.get(key)}
        for key in sorted(set(flat_a) | set(flat_b))
        if flat_a.get(key) != flat_b.get(key)
    }
    if a["master_seed"] != b["master_seed"]:
        config_delta["master_seed"] = {"a": a["master_seed"], "b": b["master_seed"]}

    files_a, files_b = a["files"], b["files"]
    differing = sorted(
        key
        for key in set(files_a) & set(files_b)
        if files_a[key] != files_b[key]
    )
    metric_delta = {}
    for key in sorted(set(a["metrics"]) | set(b["metrics"])):
        va, vb = a["metrics"].get(key), b["metrics"].get(key)
        if va != vb:
            metric_delta[key] = {
                "a": va,
                "b": vb,
                "delta": (vb - va) if va is not None and vb is not None else None,
            }

    cross = {}
    rel = "transport/solution_anisotropic.json"
    if rel in files_a and rel in files_b:
        sol_a, _ = io.solution_from_dict(io.read_json(path_a.parent / rel))
        sol_b, _ = io.solution_from_dict(io.read_json(path_b.parent / rel))
        if sol_a.arcs.shape == sol_b.arcs.shape and np.array_equal(sol_a.arcs, sol_b.arcs):
            comp = transport.flux_comparison(sol_a, sol_b)
            cross = {
                "support_jaccard": comp.jaccard,
                "mass_reallocated": comp.mass_reallocated,
            }

    return {
        "identical": not (config_delta or differing or metric_delta),
        "config_delta": config_delta,
        "differing_files": differing,
        "only_in_a": sorted(set(files_a) - set(files_b)),
        "only_in_b": sorted(set(files_b) - set(files_a)),
        "metric_delta": metric_delta,
        "cross_run": cross,
    }
