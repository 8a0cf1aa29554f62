"""Shared fixtures: the default-seed artifact chain used across test modules."""

from __future__ import annotations

import numpy as np
import pytest

import reactmap as rm
from reactmap import eeg, fmri, fusion, transport
from reactmap.rng import child_seed

DEFAULT_SEED = 7


@pytest.fixture(scope="session")
def default_rois():
    return rm.assign_tensor_field(rm.build_roi_layout())


@pytest.fixture(scope="session")
def default_graph(default_rois):
    return rm.build_knn_graph(default_rois, 5)


@pytest.fixture(scope="session")
def default_scores(default_rois):
    design = fmri.build_block_design()
    y = fmri.simulate_bold(
        design, fmri.default_beta_true(default_rois), 0.15, seed=DEFAULT_SEED
    )
    glm = fmri.glm_fit(y, design)
    fmri_stim, fmri_react = fmri.fmri_scores(glm)
    lead = eeg.build_lead_field(default_rois)
    avg = eeg.simulate_erp_trials(default_rois, lead, seed=DEFAULT_SEED)
    est = eeg.apply_inverse(eeg.min_norm_inverse(lead), avg, 512.0)
    eeg_stim, eeg_react = eeg.window_scores(est)
    return {
        "fmri_stim": fmri_stim,
        "fmri_react": fmri_react,
        "eeg_stim": eeg_stim,
        "eeg_react": eeg_react,
    }


@pytest.fixture(scope="session")
def default_measures(default_scores):
    norm = {k: fusion.normalize_unit_max(v) for k, v in default_scores.items()}
    return fusion.to_measures(
        fusion.fuse_profiles(norm["fmri_stim"], norm["eeg_stim"]),
        fusion.fuse_profiles(norm["fmri_react"], norm["eeg_react"]),
    )


@pytest.fixture(scope="session")
def default_costs(default_rois, default_graph):
    return {
        "anisotropic": transport.arc_costs(default_rois, default_graph, "anisotropic").beta,
        "isotropic": transport.arc_costs(default_rois, default_graph, "isotropic").beta,
    }


@pytest.fixture(scope="session")
def default_solutions(default_graph, default_measures, default_costs):
    """Branched solutions at the default seed for each cost kind and exponent."""
    a, b = default_graph.incidence, default_measures.b
    sols = {}
    for kind in ("anisotropic", "isotropic"):
        sols[kind] = transport.solve_bot(
            a,
            b,
            default_costs[kind],
            0.65,
            seed=child_seed(DEFAULT_SEED, f"bot-{kind}"),
        )
    for alpha in (0.25, 0.85):
        sols[alpha] = transport.solve_bot(
            a,
            b,
            default_costs["anisotropic"],
            alpha,
            seed=child_seed(DEFAULT_SEED, "bot-anisotropic"),
        )
    return sols
