import numpy as np
import pytest

from reactmap import fmri


class TestHrf:
    def test_zero_at_origin(self):
        t = np.arange(0.0, 32.1, 0.1)
        h = fmri.hrf_double_gamma(t)
        assert h[0] == 0.0

    def test_unit_peak(self):
        h = fmri.hrf_double_gamma(np.arange(0.0, 32.1, 0.1))
        assert np.max(np.abs(h)) == 1.0

    def test_peak_location_near_five_seconds(self):
        t = np.arange(0.0, 32.1, 0.1)
        h = fmri.hrf_double_gamma(t)
        assert abs(t[np.argmax(h)] - 5.0) <= 0.5

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            fmri.hrf_double_gamma(np.array([]))

    def test_decreasing_grid_rejected(self):
        with pytest.raises(ValueError):
            fmri.hrf_double_gamma(np.array([1.0, 0.5]))

    def test_convolution_linearity(self):
        h = fmri.hrf_double_gamma(np.arange(0.0, 32.1, 0.1))
        box = np.zeros(200)
        box[20:80] = 1.0
        np.testing.assert_allclose(
            np.convolve(3.0 * box, h), 3.0 * np.convolve(box, h), rtol=1e-14
        )


class TestBlockDesign:
    def test_default_volume_count(self):
        design = fmri.build_block_design(300.0, 2.0)
        assert design.n_volumes == 150

    def test_block_order_boxcars(self):
        stim, react = fmri.block_boxcars(np.array([15.0, 75.0, 45.0, 105.0, 135.0]))
        assert stim.tolist() == [1, 0, 0, 0, 1]
        assert react.tolist() == [0, 1, 0, 0, 0]

    def test_non_divisible_total_rejected(self):
        with pytest.raises(ValueError):
            fmri.build_block_design(301.0, 2.0)

    def test_intercept_and_finiteness(self):
        design = fmri.build_block_design()
        np.testing.assert_array_equal(design.intercept, 1.0)
        assert np.all(np.isfinite(design.matrix))


class TestSimulateBold:
    def test_noiseless_is_exact(self, default_rois):
        design = fmri.build_block_design()
        beta = fmri.default_beta_true(default_rois)
        y = fmri.simulate_bold(design, beta, noise_std=0.0)
        np.testing.assert_allclose(y, design.matrix @ beta)

    def test_seed_determinism(self, default_rois):
        design = fmri.build_block_design()
        beta = fmri.default_beta_true(default_rois)
        y1 = fmri.simulate_bold(design, beta, seed=11)
        y2 = fmri.simulate_bold(design, beta, seed=11)
        np.testing.assert_array_equal(y1, y2)

    def test_residual_std_near_noise_level(self, default_rois):
        design = fmri.build_block_design()
        beta = fmri.default_beta_true(default_rois)
        y = fmri.simulate_bold(design, beta, noise_std=0.15, seed=7)
        resid = y - design.matrix @ beta
        stds = resid.std(axis=0, ddof=0)
        assert np.all(np.abs(stds - 0.15) < 0.02)

    def test_shape_mismatch_rejected(self, default_rois):
        design = fmri.build_block_design()
        with pytest.raises(ValueError):
            fmri.simulate_bold(design, np.ones((2, 18)))


class TestGlm:
    def test_noiseless_recovery(self, default_rois):
        design = fmri.build_block_design()
        beta = fmri.default_beta_true(default_rois)
        glm = fmri.glm_fit(design.matrix @ beta, design)
        np.testing.assert_allclose(glm.betas, beta, atol=1e-8)

    def test_intercept_only_signal(self):
        design = fmri.build_block_design()
        y = np.full((design.n_volumes, 3), 42.0)
        glm = fmri.glm_fit(y, design)
        np.testing.assert_allclose(glm.betas[:2], 0.0, atol=1e-8)

    def test_residual_orthogonality(self, default_rois):
        design = fmri.build_block_design()
        beta = fmri.default_beta_true(default_rois)
        y = fmri.simulate_bold(design, beta, seed=5)
        glm = fmri.glm_fit(y, design)
        resid = y - design.matrix @ glm.betas
        gram = design.matrix.T @ resid
        assert np.max(np.abs(gram)) < 1e-8

    def test_rank_deficient_design_rejected(self):
        design = fmri.build_block_design()
        broken = fmri.DesignMatrix(
            n_volumes=design.n_volumes,
            tr=design.tr,
            times=design.times,
            x_stim=design.intercept.copy(),
            x_react=design.x_react,
            intercept=design.intercept,
            boxcar_stim=design.boxcar_stim,
            boxcar_react=design.boxcar_react,
        )
        with pytest.raises(ValueError):
            fmri.glm_fit(np.ones((design.n_volumes, 2)), broken)

    def test_active_tstats_dominate_inactive(self, default_rois):
        design = fmri.build_block_design()
        beta = fmri.default_beta_true(default_rois)
        y = fmri.simulate_bold(design, beta, noise_std=0.15, seed=7)
        glm = fmri.glm_fit(y, design)
        for row in (0, 1):
            active = beta[row] == 1.0
            assert glm.tstats[row][active].min() > glm.tstats[row][~active].max()

    def test_unbiasedness_over_seeds(self, default_rois):
        design = fmri.build_block_design()
        beta = fmri.default_beta_true(default_rois)
        estimates = []
        for seed in range(200):
            y = fmri.simulate_bold(design, beta, noise_std=0.30, seed=seed)
            estimates.append(fmri.glm_fit(y, design).betas)
        estimates = np.array(estimates)
        se = estimates.std(axis=0, ddof=1) / np.sqrt(len(estimates))
        z = np.abs(estimates.mean(axis=0) - beta) / se
        # 54 simultaneous z-scores: allow the usual multiple-comparison slack
        # on the max while requiring the bulk to sit inside 3 SE
        assert z.max() < 3.5
        assert (z < 3.0).mean() > 0.95


class TestScores:
    def test_all_negative_clipped_to_zero(self):
        glm = fmri.GlmResult(
            betas=np.zeros((3, 4)),
            tstats=np.array([[-1.0, -2, -3, -4], [-1, -1, -1, -1], [5, 5, 5, 5.0]]),
            residual_variance=np.ones(4),
            dof=10,
        )
        stim, react = fmri.fmri_scores(glm)
        np.testing.assert_array_equal(stim, 0.0)
        np.testing.assert_array_equal(react, 0.0)

    def test_mixed_signs_preserved(self):
        glm = fmri.GlmResult(
            betas=np.zeros((3, 3)),
            tstats=np.array([[2.0, -1.0, 0.5], [0.0, 3.0, -2.0], [1, 1, 1.0]]),
            residual_variance=np.ones(3),
            dof=10,
        )
        stim, react = fmri.fmri_scores(glm)
        np.testing.assert_array_equal(stim, [2.0, 0.0, 0.5])
        np.testing.assert_array_equal(react, [0.0, 3.0, 0.0])

    def test_visual_auditory_dominate_stim(self, default_rois, default_scores):
        stim = default_scores["fmri_stim"]
        sensory = [
            r.index for r in default_rois if r.system in ("visual", "auditory")
        ]
        others = [i for i in range(len(default_rois)) if i not in sensory]
        assert stim[sensory].min() > stim[others].max()

    def test_connectivity_is_correlation(self, default_rois):
        design = fmri.build_block_design()
        y = fmri.simulate_bold(design, fmri.default_beta_true(default_rois), seed=3)
        conn = fmri.bold_connectivity(y)
        assert conn.shape == (18, 18)
        np.testing.assert_allclose(np.diag(conn), 1.0)
        np.testing.assert_allclose(conn, conn.T)
