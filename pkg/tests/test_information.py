import numpy as np
import pytest

from fusionkit import (
    BlockCovariance,
    GaussianPrior,
    InfoOnlyPrior,
    LinearModel,
    ModalityPair,
    NoPriorInfo,
    NoScore,
    NotPD,
    SamplerPrior,
    SingularInformation,
    crlb,
    error_covariance,
    joint_information,
    no_prior,
    prewhiten,
    prior_information_mc,
    simulate,
    snr_matrix,
    synergy_matrices,
    total_information,
)
from fusionkit.information import InfoMatrix, joint_fisher_routes, route_disagreement

from conftest import random_joint_noise, random_pair, random_pd, rel_fro


class TestSnrMatrix:
    def test_identity(self):
        snr = snr_matrix(LinearModel(np.eye(2)), np.eye(2))
        assert np.allclose(snr.matrix, np.eye(2))
        assert snr.kind == "snr"

    def test_channel_accumulation_oracle(self):
        # diagonal noise: snr must equal sum_k a_k a_k^T / sigma_k^2
        A = np.array([[1.0, 0.0], [1.0, 1.0]])
        sigma = np.diag([1.0, 4.0])
        snr = snr_matrix(LinearModel(A), sigma)
        expected = sum(np.outer(A[k], A[k]) / sigma[k, k] for k in range(2))
        assert np.allclose(snr.matrix, expected)
        assert np.allclose(snr.matrix, [[1.25, 0.25], [0.25, 0.25]])

    def test_single_channel_rank_one(self, rng):
        a = rng.standard_normal(3)
        snr = snr_matrix(LinearModel(a[None, :]), [[2.0]])
        assert rel_fro(snr.matrix, np.outer(a, a) / 2.0) < 1e-12
        w = np.linalg.eigvalsh(snr.matrix)
        assert np.sum(w > 1e-12) == 1

    def test_not_pd_noise(self):
        with pytest.raises(NotPD):
            snr_matrix(LinearModel(np.eye(2)), np.diag([1.0, 0.0]))


class TestTotalInformation:
    def test_zero_prior(self, rng):
        snr = snr_matrix(LinearModel(rng.standard_normal((3, 2))), np.eye(3))
        J = total_information(snr, no_prior(2))
        assert np.array_equal(J.matrix, snr.matrix)

    def test_gaussian_identity_prior(self, rng):
        snr = snr_matrix(LinearModel(rng.standard_normal((3, 2))), np.eye(3))
        prior = GaussianPrior(mean=np.zeros(2), cov=np.eye(2))
        J = total_information(snr, prior)
        assert rel_fro(J.matrix, snr.matrix + np.eye(2)) < 1e-12

    def test_random_psd_pair_adds(self, rng):
        S = random_pd(rng, 3)
        J_s = random_pd(rng, 3)
        J = total_information(InfoMatrix(S, kind="snr"), InfoOnlyPrior(J_s))
        assert np.allclose(J.matrix, S + J_s)

    def test_no_prior_info_raises(self):
        prior = SamplerPrior(m=2, draw=lambda rng, n: rng.standard_normal((n, 2)))
        with pytest.raises(NoPriorInfo):
            total_information(InfoMatrix(np.eye(2), kind="snr"), prior)


class TestCrlb:
    def test_identity(self):
        assert np.allclose(crlb(InfoMatrix(np.eye(3), kind="total")), np.eye(3))

    def test_equals_ml_error_covariance(self, rng):
        model = LinearModel(rng.standard_normal((5, 3)))
        sigma = random_pd(rng, 5)
        bound = crlb(snr_matrix(model, sigma))
        assert rel_fro(bound, error_covariance(model, sigma)) < 1e-12

    def test_singular_information_reports_null_space(self):
        # n < m: a single channel cannot resolve two sources
        model = LinearModel(np.array([[1.0, 1.0]]))
        snr = snr_matrix(model, np.eye(1))
        with pytest.raises(SingularInformation) as exc_info:
            crlb(snr)
        null = exc_info.value.null_space
        assert null.shape[1] >= 1
        # the null direction carries no information
        assert np.linalg.norm(snr.matrix @ null) < 1e-12


class TestPrewhiten:
    def test_identity_noise_passthrough(self, rng):
        pair = ModalityPair(
            first=LinearModel(rng.standard_normal((3, 2))),
            second=LinearModel(rng.standard_normal((2, 2))),
            noise=BlockCovariance(np.eye(3), np.eye(2), 0.3 * np.ones((3, 2)) / 3),
        )
        wp = prewhiten(pair)
        assert np.allclose(wp.A_tilde, pair.first.A)
        assert np.allclose(wp.B_tilde, pair.second.A)
        assert np.allclose(wp.rho, pair.noise.sigma_vu)

    def test_rho_spectral_norm_below_one(self):
        # SVD check over 1000 random PD joint covariances
        rng = np.random.default_rng(101)
        for _ in range(1000):
            n1 = int(rng.integers(1, 5))
            n2 = int(rng.integers(1, 5))
            noise = random_joint_noise(rng, n1, n2)
            pair = ModalityPair(
                first=LinearModel(rng.standard_normal((n1, 2))),
                second=LinearModel(rng.standard_normal((n2, 2))),
                noise=noise,
            )
            assert prewhiten(pair).sigma_max_rho < 1.0

    def test_whitened_noise_covariance_is_identity_with_rho(self, rng):
        # Monte-Carlo oracle: whiten simulated noises, check the joint covariance
        N = 100_000
        pair = random_pair(rng, 3, 2, 2)
        wp = prewhiten(pair)
        prior = GaussianPrior(mean=np.zeros(2), cov=np.eye(2))
        batch = simulate(pair, prior, N=N, seed=13)
        v = batch.observations - batch.sources @ pair.first.A.T
        u = batch.second_observations - batch.sources @ pair.second.A.T
        v_t = np.linalg.solve(wp.L_v, v.T).T
        u_t = np.linalg.solve(wp.L_u, u.T).T
        z = np.hstack([v_t, u_t])
        emp = z.T @ z / N
        expected = np.block([
            [np.eye(3), wp.rho],
            [wp.rho.T, np.eye(2)],
        ])
        assert rel_fro(emp, expected) < 0.05

    def test_not_pd_marginal(self, rng):
        noise = BlockCovariance(np.diag([1.0, 0.0]), np.eye(2), np.zeros((2, 2)))
        pair = ModalityPair(
            first=LinearModel(rng.standard_normal((2, 2))),
            second=LinearModel(rng.standard_normal((2, 2))),
            noise=noise,
        )
        with pytest.raises(NotPD):
            prewhiten(pair)


class TestJointInformation:
    def test_uncorrelated_additivity_exact(self, rng):
        for _ in range(20):
            n1, n2, m = 3, 2, 2
            A = rng.standard_normal((n1, m))
            B = rng.standard_normal((n2, m))
            noise = BlockCovariance(random_pd(rng, n1), random_pd(rng, n2), np.zeros((n1, n2)))
            pair = ModalityPair(LinearModel(A), LinearModel(B), noise)
            prior = GaussianPrior(mean=np.zeros(m), cov=random_pd(rng, m))
            J = joint_information(pair, prior)
            expected = (
                snr_matrix(pair.first, noise.sigma_v).matrix
                + snr_matrix(pair.second, noise.sigma_u).matrix
                + prior.info_matrix()
            )
            assert rel_fro(J.matrix, expected) < 1e-12

    def test_redundant_second_modality_collapses(self, rng):
        noise = random_joint_noise(rng, 3, 2)
        A = rng.standard_normal((3, 2))
        B = noise.sigma_uv @ np.linalg.solve(noise.sigma_v, A)
        pair = ModalityPair(LinearModel(A), LinearModel(B), noise)
        J = joint_information(pair, no_prior(2))
        J_x = snr_matrix(pair.first, noise.sigma_v).matrix
        assert rel_fro(J.matrix, J_x) < 1e-10

    def test_two_scalar_channels_uncorrelated(self, rng):
        # two scalar channels with uncorrelated noise: rank-one terms add
        a1 = rng.standard_normal(2)
        a2 = rng.standard_normal(2)
        s1, s2 = 0.5, 2.0
        noise = BlockCovariance([[s1]], [[s2]], [[0.0]])
        pair = ModalityPair(LinearModel(a1[None, :]), LinearModel(a2[None, :]), noise)
        J_s = random_pd(rng, 2)
        J = joint_information(pair, InfoOnlyPrior(J_s))
        expected = np.outer(a1, a1) / s1 + np.outer(a2, a2) / s2 + J_s
        assert rel_fro(J.matrix, expected) < 1e-12

    def test_route_equivalence_sweep(self):
        rng = np.random.default_rng(303)
        worst = 0.0
        for _ in range(300):
            n1 = int(rng.integers(1, 7))
            n2 = int(rng.integers(1, 7))
            m = int(rng.integers(1, 5))
            pair = random_pair(rng, n1, n2, m)
            worst = max(worst, route_disagreement(joint_fisher_routes(pair)))
        assert worst < 1e-8

    def test_fusion_monotonicity(self):
        # J_joint - J_single is PSD: fusing never loses information
        rng = np.random.default_rng(404)
        for _ in range(1000):
            n1 = int(rng.integers(1, 5))
            n2 = int(rng.integers(1, 5))
            m = int(rng.integers(1, 4))
            pair = random_pair(rng, n1, n2, m)
            J = joint_information(pair).matrix
            J_x = snr_matrix(pair.first, pair.noise.sigma_v).matrix
            J_y = snr_matrix(pair.second, pair.noise.sigma_u).matrix
            assert np.linalg.eigvalsh(J - J_x)[0] >= -1e-10
            assert np.linalg.eigvalsh(J - J_y)[0] >= -1e-10

    def test_strong_correlation_growth(self):
        # trace strictly increases toward the fully-correlated corner; the
        # fixed pair is Frobenius-orthogonal so the cross term that can
        # cause a transient dip at small c vanishes
        A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]])
        B = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        traces = []
        for c in (0.0, 0.5, 0.9, 0.99):
            noise = BlockCovariance(np.eye(3), np.eye(3), c * np.eye(3))
            pair = ModalityPair(LinearModel(A), LinearModel(B), noise)
            traces.append(float(np.trace(joint_information(pair).matrix)))
        assert all(t2 > t1 for t1, t2 in zip(traces, traces[1:]))

    def test_near_singular_flag(self):
        A = np.array([[1.0, 0.2], [0.3, 1.0]])
        B = np.array([[0.7, -0.1], [0.2, 0.8]])
        c = 1.0 - 1e-9
        noise = BlockCovariance(np.eye(2), np.eye(2), c * np.eye(2))
        pair = ModalityPair(LinearModel(A), LinearModel(B), noise)
        J = joint_information(pair)
        assert J.near_singular


class TestSynergyMatrices:
    def test_zero_cross_gives_other_snr(self, rng):
        n1, n2, m = 3, 2, 2
        A = rng.standard_normal((n1, m))
        B = rng.standard_normal((n2, m))
        sv, su = random_pd(rng, n1), random_pd(rng, n2)
        pair = ModalityPair(
            LinearModel(A), LinearModel(B), BlockCovariance(sv, su, np.zeros((n1, n2)))
        )
        rep = synergy_matrices(pair)
        assert rel_fro(rep.S_x, B.T @ np.linalg.inv(su) @ B) < 1e-10
        assert rel_fro(rep.S_y, A.T @ np.linalg.inv(sv) @ A) < 1e-10

    def test_redundant_construction_zeroes_synergy(self, rng):
        noise = random_joint_noise(rng, 3, 3)
        A = rng.standard_normal((3, 2))
        B = noise.sigma_uv @ np.linalg.solve(noise.sigma_v, A)
        pair = ModalityPair(LinearModel(A), LinearModel(B), noise)
        rep = synergy_matrices(pair)
        J = joint_information(pair).matrix
        assert np.linalg.norm(rep.S_x, "fro") <= 1e-10 * np.linalg.norm(J, "fro")

    def test_psd_sweep(self):
        rng = np.random.default_rng(55)
        for _ in range(1000):
            n1 = int(rng.integers(1, 5))
            n2 = int(rng.integers(1, 5))
            pair = random_pair(rng, n1, n2, int(rng.integers(1, 4)))
            rep = synergy_matrices(pair)
            assert rep.min_eigenvalues[0] >= -1e-10
            assert rep.min_eigenvalues[1] >= -1e-10


class TestPriorInformationMc:
    def test_gaussian_matches_cov_inverse(self, rng):
        cov = random_pd(rng, 2)
        prior = GaussianPrior(mean=np.zeros(2), cov=cov)
        est = prior_information_mc(prior, N=100_000, seed=3)
        target = np.linalg.inv(cov)
        assert np.all(np.abs(est.J - target) <= 3.0 * est.std_err + 1e-9)

    def test_source_scaling(self):
        # s' = 2 s scales the information by 1/4
        base = GaussianPrior(mean=np.zeros(1), cov=np.eye(1))
        scaled = GaussianPrior(mean=np.zeros(1), cov=4.0 * np.eye(1))
        e1 = prior_information_mc(base, N=50_000, seed=8)
        e2 = prior_information_mc(scaled, N=50_000, seed=8)
        assert e2.J[0, 0] == pytest.approx(e1.J[0, 0] / 4.0, rel=1e-10)

    def test_laplace_scalar(self):
        # analytic score +-1/b gives J_s = 1/b^2 with zero MC variance
        b = 1.7
        prior = SamplerPrior(
            m=1,
            draw=lambda rng, n: rng.laplace(0.0, b, size=(n, 1)),
            score_fn=lambda s: -np.sign(s) / b,
        )
        est = prior_information_mc(prior, N=100_000, seed=10)
        assert abs(est.J[0, 0] - 1.0 / b**2) <= 3.0 * est.std_err[0, 0] + 1e-12

    def test_no_score_raises(self):
        prior = SamplerPrior(m=1, draw=lambda rng, n: rng.standard_normal((n, 1)))
        with pytest.raises(NoScore):
            prior_information_mc(prior, N=100, seed=0)

    def test_thread_count_does_not_change_results(self, rng, monkeypatch):
        # seed-split blocks merge in block order: the worker count set via
        # FUSIONKIT_THREADS must not affect the estimate
        prior = GaussianPrior(mean=np.zeros(2), cov=random_pd(rng, 2))
        monkeypatch.setenv("FUSIONKIT_THREADS", "1")
        seq = prior_information_mc(prior, N=30_000, seed=12)
        monkeypatch.setenv("FUSIONKIT_THREADS", "4")
        par = prior_information_mc(prior, N=30_000, seed=12)
        assert np.array_equal(seq.J, par.J)
        assert np.array_equal(seq.std_err, par.std_err)
