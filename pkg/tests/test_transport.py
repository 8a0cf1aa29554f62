import numpy as np
import pytest

from reactmap import transport
from reactmap.geometry import Roi, RoiSet, graph_from_edges, incidence_from_arcs
from reactmap.rng import child_seed
from reactmap.transport import (
    TransportError,
    anisotropic_arc_cost,
    extract_support,
    extract_support as _extract,
    flow_objective,
    flux_comparison,
    forest_oracle,
    isotropic_arc_cost,
    linear_flow_oracle,
    relay_statistics,
    shortest_path_surrogate,
    solve_bot,
)
from reactmap.verify import oracle_battery, random_small_instance


def make_roi(index, position, tensor=None, label=None):
    return Roi(
        index=index,
        label=label or f"R{index}",
        position=np.asarray(position, dtype=float),
        system="visual",
        tensor=np.eye(2) if tensor is None else np.asarray(tensor, dtype=float),
        tangent=np.array([1.0, 0.0]),
        shell="outer",
    )


def y_graph():
    """Two unit sources joined to a relay, relay to sink, plus expensive direct arcs.

    Nodes: 0 = s1, 1 = s2, 2 = relay, 3 = sink.
    """
    arcs = []
    beta = []
    for (i, j), cost in (
        ((0, 2), 1.0),
        ((1, 2), 1.0),
        ((2, 3), 1.0),
        ((0, 3), 1.9),
        ((1, 3), 1.9),
    ):
        arcs.append((i, j))
        beta.append(cost)
        arcs.append((j, i))
        beta.append(cost)
    arcs = np.array(arcs)
    a = incidence_from_arcs(4, arcs)
    b = np.array([1.0, 1.0, 0.0, -2.0])
    return a, b, np.array(beta), arcs


class TestAnisotropicCost:
    def test_identity_tensor_gives_length(self):
        r0 = make_roi(0, [0.0, 0.0])
        r1 = make_roi(1, [3.0, 4.0])
        assert anisotropic_arc_cost(r0, r1, eps=0.0) == pytest.approx(5.0)

    def test_along_principal_axis(self):
        tensor = np.diag([4.0, 0.25])
        r0 = make_roi(0, [0.0, 0.0], tensor)
        r1 = make_roi(1, [2.0, 0.0], tensor)
        assert anisotropic_arc_cost(r0, r1, eps=0.0) == pytest.approx(1.0)

    def test_across_principal_axis_four_times_dearer(self):
        tensor = np.diag([4.0, 0.25])
        r0 = make_roi(0, [0.0, 0.0], tensor)
        r1 = make_roi(1, [0.0, 2.0], tensor)
        across = anisotropic_arc_cost(r0, r1, eps=0.0)
        assert across == pytest.approx(4.0)

    def test_opposite_arcs_equal_cost(self, default_rois, default_graph, default_costs):
        beta = default_costs["anisotropic"]
        np.testing.assert_allclose(beta[0::2], beta[1::2], rtol=1e-12)

    def test_coincident_regions_rejected(self):
        r0 = make_roi(0, [1.0, 1.0])
        r1 = make_roi(1, [1.0, 1.0])
        with pytest.raises(ValueError):
            anisotropic_arc_cost(r0, r1)

    def test_rotating_axis_away_from_edge_increases_cost(self):
        angles = np.linspace(0.0, np.pi / 2, 20)
        costs = []
        for theta in angles:
            rot = np.array(
                [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
            )
            tensor = rot @ np.diag([1.0, 0.1]) @ rot.T
            r0 = make_roi(0, [0.0, 0.0], tensor)
            r1 = make_roi(1, [1.0, 0.0], tensor)
            costs.append(anisotropic_arc_cost(r0, r1, eps=0.05))
        assert np.all(np.diff(costs) > 0)


class TestIsotropicCost:
    def test_pure_distance_baseline(self):
        r0, r1 = make_roi(0, [0, 0]), make_roi(1, [0, 2])
        assert isotropic_arc_cost(r0, r1, 0.3, 0.7, c_iso=0.0) == pytest.approx(2.0)

    def test_full_white_matter_gives_length(self):
        r0, r1 = make_roi(0, [0, 0]), make_roi(1, [0, 2])
        assert isotropic_arc_cost(r0, r1, 1.0, 1.0, c_iso=5.0) == pytest.approx(2.0)

    def test_zero_white_matter_doubles(self):
        r0, r1 = make_roi(0, [0, 0]), make_roi(1, [0, 2])
        assert isotropic_arc_cost(r0, r1, 0.0, 0.0, c_iso=1.0) == pytest.approx(4.0)

    def test_score_out_of_range_rejected(self):
        r0, r1 = make_roi(0, [0, 0]), make_roi(1, [0, 2])
        with pytest.raises(ValueError):
            isotropic_arc_cost(r0, r1, -0.1, 0.5)


class TestSolveBot:
    def test_two_node_single_path(self):
        arcs = np.array([[0, 1], [1, 0]])
        a = incidence_from_arcs(2, arcs)
        b = np.array([1.0, -1.0])
        beta = np.array([1.0, 5.0])
        for alpha in (0.5, 1.0):
            sol = solve_bot(a, b, beta, alpha, seed=0)
            np.testing.assert_allclose(sol.w, [1.0, 0.0], atol=1e-8)
            assert sol.objective == pytest.approx(1.0, abs=1e-8)

    def test_y_graph_prefers_shared_relay_route(self):
        a, b, beta, arcs = y_graph()
        sol = solve_bot(a, b, beta, alpha=0.5, seed=0)
        assert sol.objective == pytest.approx(2.0 + np.sqrt(2.0), rel=1e-6)
        support_arcs = {tuple(arcs[e]) for e in sol.support}
        assert support_arcs == {(0, 2), (1, 2), (2, 3)}

    def test_matches_forest_oracle_on_y_graph(self):
        a, b, beta, _ = y_graph()
        for alpha in (0.5, 0.65, 0.8):
            exact = forest_oracle(a, b, beta, alpha)
            sol = solve_bot(a, b, beta, alpha, seed=1)
            assert sol.objective <= exact.objective * (1 + 1e-6)

    def test_zero_b_gives_zero_flow(self):
        a, _, beta, _ = y_graph()
        sol = solve_bot(a, np.zeros(4), beta, 0.65, seed=0)
        np.testing.assert_array_equal(sol.w, 0.0)
        assert sol.objective == 0.0
        assert sol.support.size == 0

    def test_unbalanced_b_rejected(self):
        a, _, beta, _ = y_graph()
        with pytest.raises(TransportError):
            solve_bot(a, np.array([1.0, 0, 0, 0]), beta, 0.65)

    def test_disconnected_mass_rejected(self):
        arcs = np.array([[0, 1], [1, 0], [2, 3], [3, 2]])
        a = incidence_from_arcs(4, arcs)
        beta = np.ones(4)
        with pytest.raises(TransportError):
            solve_bot(a, np.array([1.0, 0.0, 0.0, -1.0]), beta, 0.65)

    def test_alpha_range_validated(self):
        a, b, beta, _ = y_graph()
        for alpha in (0.0, 1.5, -0.2):
            with pytest.raises(ValueError):
                solve_bot(a, b, beta, alpha)

    def test_feasibility_and_nonnegativity(self, default_graph, default_measures, default_costs):
        sol = solve_bot(
            default_graph.incidence,
            default_measures.b,
            default_costs["anisotropic"],
            0.65,
            seed=3,
        )
        assert sol.feasibility_residual <= 1e-6
        assert sol.w.min() >= -1e-12

    def test_objective_not_above_initializations(self):
        a, b, beta, _ = y_graph()
        sol = solve_bot(a, b, beta, 0.65, seed=5)
        # repaired clipped-least-squares init carries a computable objective
        w_ls, *_ = np.linalg.lstsq(a, b, rcond=None)
        init_obj = flow_objective(np.clip(w_ls, 0, None), beta, 0.65)
        assert sol.objective <= init_obj * (1 + 1e-9)

    def test_opposite_flux_cancellation_never_helps(self, default_graph, default_measures, default_costs):
        sol = solve_bot(
            default_graph.incidence,
            default_measures.b,
            default_costs["anisotropic"],
            0.65,
            seed=9,
        )
        w = sol.w.copy()
        for e in range(0, len(w), 2):
            c = min(w[e], w[e + 1])
            w[e] -= c
            w[e + 1] -= c
        assert flow_objective(w, default_costs["anisotropic"], 0.65) <= sol.objective + 1e-12


class TestForestOracle:
    def test_single_path_instance(self):
        arcs = np.array([[0, 1], [1, 0]])
        a = incidence_from_arcs(2, arcs)
        sol = forest_oracle(a, np.array([1.0, -1.0]), np.array([1.0, 5.0]), 0.5)
        np.testing.assert_allclose(sol.w, [1.0, 0.0])

    def test_cycle_graph_picks_cheaper_path(self):
        arcs = []
        beta = []
        for (i, j), cost in (((0, 1), 1.0), ((1, 2), 1.0), ((2, 3), 1.0), ((3, 0), 2.5)):
            arcs += [(i, j), (j, i)]
            beta += [cost, cost]
        a = incidence_from_arcs(4, np.array(arcs))
        b = np.array([1.0, 0.0, -1.0, 0.0])
        sol = forest_oracle(a, b, np.array(beta), 0.7)
        assert sol.objective == pytest.approx(2.0)
        used = {tuple(np.array(arcs)[e]) for e in sol.support}
        assert used == {(0, 1), (1, 2)}

    def test_zero_mass(self):
        a, _, beta, _ = y_graph()
        sol = forest_oracle(a, np.zeros(4), beta, 0.5)
        assert sol.objective == 0.0

    def test_node_limit(self):
        n = 9
        arcs = np.array([(i, (i + 1) % n) for i in range(n)] + [((i + 1) % n, i) for i in range(n)])
        a = incidence_from_arcs(n, arcs)
        with pytest.raises(ValueError):
            forest_oracle(a, np.zeros(n), np.ones(len(arcs)), 0.5)

    def test_solutions_cycle_free(self):
        for idx in range(5):
            a, b, beta, = random_small_instance(11, idx)
            sol = forest_oracle(a, b, beta, 0.6)
            w = sol.w
            for e in range(0, len(w), 2):
                assert min(w[e], w[e + 1]) <= 1e-12


class TestLinearOracle:
    def test_alpha_one_reduction(self):
        for idx in range(10):
            a, b, beta = random_small_instance(21, idx)
            lp = linear_flow_oracle(a, b, beta)
            sol = solve_bot(a, b, beta, 1.0, seed=child_seed(21, "t", idx))
            assert sol.objective <= lp.objective * 1.005
            assert lp.feasibility_residual <= 1e-8


class TestSurrogate:
    def test_single_pair_takes_shortest_path(self):
        arcs = np.array([[0, 1], [1, 0], [1, 2], [2, 1]])
        a = incidence_from_arcs(3, arcs)
        beta = np.array([1.0, 1.0, 2.0, 2.0])
        sol = shortest_path_surrogate(a, np.array([1.0, 0.0, -1.0]), beta)
        np.testing.assert_allclose(sol.w, [1.0, 0.0, 1.0, 0.0], atol=1e-12)
        assert sol.feasibility_residual <= 1e-9

    def test_objective_at_alpha_one_bounded_by_lp(self):
        for idx in range(10):
            a, b, beta = random_small_instance(31, idx)
            lp = linear_flow_oracle(a, b, beta)
            surr = shortest_path_surrogate(a, b, beta)
            assert flow_objective(surr.w, beta, 1.0) >= lp.objective * (1 - 1e-9)

    def test_y_graph_uses_direct_paths(self):
        a, b, beta, arcs = y_graph()
        surr = shortest_path_surrogate(a, b, beta)
        used = {tuple(arcs[e]) for e in surr.support}
        assert used == {(0, 3), (1, 3)}

    def test_disconnected_pair_rejected(self):
        arcs = np.array([[0, 1], [1, 0], [2, 3], [3, 2]])
        a = incidence_from_arcs(4, arcs)
        with pytest.raises(TransportError):
            shortest_path_surrogate(a, np.array([1.0, 0, 0, -1.0]), np.ones(4))


class TestSupport:
    def test_threshold_arithmetic(self):
        sol = _make_solution(np.array([1.0, 1e-6]))
        assert extract_support(sol).tolist() == [0]

    def test_equal_fluxes_full_support(self):
        sol = _make_solution(np.array([0.5, 0.5, 0.5]))
        assert extract_support(sol).tolist() == [0, 1, 2]

    def test_zero_flow_empty_support(self):
        sol = _make_solution(np.zeros(3))
        assert extract_support(sol).size == 0

    def test_thresholding_never_mutates_fluxes(self):
        w = np.array([1.0, 1e-6, 0.3])
        sol = _make_solution(w.copy())
        extract_support(sol, rel_threshold=0.5)
        np.testing.assert_array_equal(sol.w, w)

    def test_default_run_support_in_paper_range(self, default_solutions):
        assert 12 <= default_solutions["anisotropic"].support_size <= 24

    def test_monotone_branching(self, default_solutions):
        assert default_solutions[0.25].support_size <= default_solutions[0.85].support_size


def _make_solution(w):
    n_arcs = len(w)
    arcs = np.array([[i % 3, (i + 1) % 3] for i in range(n_arcs)])
    return transport.FlowSolution(
        w=np.asarray(w, float),
        objective=0.0,
        alpha=0.65,
        arcs=arcs,
        n_nodes=3,
        feasibility_residual=0.0,
        support=transport.support_indices(np.asarray(w, float)),
    )


class TestRelayStatistics:
    def test_pass_through_chain(self):
        arcs = np.array([[0, 1], [1, 2]])
        sol = transport.FlowSolution(
            w=np.array([1.0, 1.0]),
            objective=2.0,
            alpha=0.65,
            arcs=arcs,
            n_nodes=3,
            feasibility_residual=0.0,
            support=np.array([0, 1]),
        )
        stats = relay_statistics(sol, np.array([1.0, 0.0, -1.0]))
        np.testing.assert_allclose(stats.relay_score, [0.0, 1.0, 0.0])
        assert stats.classes == ("source-dominated", "relay", "sink-dominated")

    def test_source_node_classification(self):
        arcs = np.array([[0, 1]])
        sol = transport.FlowSolution(
            w=np.array([1.0]),
            objective=1.0,
            alpha=0.65,
            arcs=arcs,
            n_nodes=2,
            feasibility_residual=0.0,
            support=np.array([0]),
        )
        stats = relay_statistics(sol, np.array([1.0, -1.0]))
        assert stats.outflow[0] == 1.0
        assert stats.inflow[0] == 0.0
        assert stats.classes[0] == "source-dominated"

    def test_global_flux_conservation(self, default_solutions, default_measures):
        stats = relay_statistics(default_solutions["anisotropic"], default_measures.b)
        assert stats.inflow.sum() == pytest.approx(stats.outflow.sum())

    def test_thalamic_nodes_relay_at_default_seed(
        self, default_rois, default_solutions, default_measures
    ):
        stats = relay_statistics(default_solutions["anisotropic"], default_measures.b)
        top4 = set(np.argsort(-stats.relay_score)[:4].tolist())
        thalamic = {r.index for r in default_rois if r.system == "thalamic"}
        assert thalamic <= top4


class TestFluxComparison:
    def test_identical_solutions(self, default_solutions):
        comp = flux_comparison(
            default_solutions["anisotropic"], default_solutions["anisotropic"]
        )
        assert comp.jaccard == 1.0
        assert comp.mass_reallocated == 0.0

    def test_disjoint_supports(self):
        a = _make_solution(np.array([1.0, 0.0, 0.0]))
        b = _make_solution(np.array([0.0, 0.0, 1.0]))
        comp = flux_comparison(a, b)
        assert comp.jaccard == 0.0

    def test_graph_mismatch_rejected(self):
        a = _make_solution(np.ones(4))
        b = _make_solution(np.ones(6))
        with pytest.raises(ValueError):
            flux_comparison(a, b)

    def test_iso_vs_aniso_redistributes_mass(self, default_solutions):
        comp = flux_comparison(
            default_solutions["isotropic"], default_solutions["anisotropic"]
        )
        assert comp.jaccard < 1.0
        assert comp.mass_reallocated > 0.0


class TestOracleEquivalenceQuick:
    def test_small_battery(self):
        result = oracle_battery(n_instances=10, seed=42)
        for alpha, stats in result["alphas"].items():
            assert stats["passes"] >= 9, f"alpha {alpha}: {stats}"
        assert result["linear"]["passes"] == 10
