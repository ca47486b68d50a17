import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmesim import certify, circuit, noise, qmath

SINGLET = circuit.singlet().density()


class TestSettings:
    def test_axis_setting_observable(self):
        s = certify.setting("Z", "Z")
        assert np.allclose(s.observable(), np.kron(qmath.SIGMA_Z, qmath.SIGMA_Z))

    def test_projectors_resolve_identity(self):
        s = certify.setting("X", "Y")
        assert np.allclose(np.sum(s.projectors(), axis=0), np.eye(4), atol=1e-14)

    def test_non_unit_vector_rejected(self):
        with pytest.raises(certify.CertifyError):
            certify.setting(np.array([1.0, 1.0, 0.0]), "Z")

    def test_pauli_settings_complete(self):
        assert len(certify.PAULI_SETTINGS) == 9


class TestCorrelatorsAndWitness:
    def test_singlet_correlations(self):
        t = certify.correlation_matrix(SINGLET)
        assert np.allclose(t, -np.eye(3), atol=1e-12)

    def test_witness_values(self):
        assert certify.witness_w(SINGLET) == pytest.approx(-1.0, abs=1e-12)
        assert certify.witness_w(noise.rho_mix()) == pytest.approx(1.0, abs=1e-12)
        assert certify.witness_w(noise.rho_dist()) == pytest.approx(1.0, abs=1e-12)

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_witness_lower_bound(self, seed):
        rho = certify.random_density_matrix(np.random.default_rng(seed))
        assert certify.witness_w(rho) >= -1.0 - 1e-12


class TestChsh:
    def test_singlet_fixed_settings(self):
        s = certify.chsh(SINGLET, certify.singlet_optimal_settings())
        assert s == pytest.approx(2 * np.sqrt(2), abs=1e-12)

    def test_chsh_max_matches_settings(self):
        for rho in (SINGLET, noise.dephased_singlet(0.4), noise.baseline_state(0.2)):
            val, settings_ = certify.chsh_max(rho)
            assert certify.chsh(rho, settings_) == pytest.approx(val, abs=1e-9)

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=50, deadline=None)
    def test_tsirelson_and_ordering(self, seed):
        rho = certify.random_density_matrix(np.random.default_rng(seed))
        val, _ = certify.chsh_max(rho)
        fixed = certify.chsh(rho, certify.singlet_optimal_settings())
        assert fixed <= val + 1e-9
        assert val <= 2 * np.sqrt(2) + 1e-9

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_separable_states_respect_classical_bound(self, seed):
        rho = certify.random_separable_state(np.random.default_rng(seed))
        val, _ = certify.chsh_max(rho)
        assert val <= 2.0 + 1e-9

    def test_wrong_setting_count(self):
        with pytest.raises(certify.CertifyError):
            certify.chsh(SINGLET, certify.singlet_optimal_settings()[:3])


class TestCounts:
    def test_simulation_is_deterministic(self):
        a = certify.simulate_counts(SINGLET, certify.PAULI_SETTINGS, 1000, 7)
        b = certify.simulate_counts(SINGLET, certify.PAULI_SETTINGS, 1000, 7)
        assert [r.counts for r in a] == [r.counts for r in b]

    def test_counts_track_probabilities(self):
        recs = certify.simulate_counts(SINGLET, [certify.setting("Z", "Z")], 100_000, 1)
        f = np.asarray(recs[0].counts) / recs[0].total
        p = certify.outcome_probabilities(SINGLET, recs[0].setting)
        assert np.allclose(f, p, atol=0.01)

    def test_bad_count_target(self):
        with pytest.raises(certify.CertifyError):
            certify.simulate_counts(SINGLET, certify.PAULI_SETTINGS, 0, 1)


class TestTomography:
    def test_linear_inversion_recovers_truth_asymptotically(self):
        recs = []
        for s in certify.PAULI_SETTINGS:
            p = certify.outcome_probabilities(SINGLET, s)
            recs.append(
                certify.CountsRecord(s, tuple(int(round(1e9 * x)) for x in p), 1e9)
            )
        rho = certify.tomography_linear(recs)
        assert np.max(np.abs(rho - SINGLET.matrix)) < 1e-6

    def test_linear_inversion_missing_setting(self):
        recs = certify.simulate_counts(SINGLET, certify.PAULI_SETTINGS[:-1], 100, 1)
        with pytest.raises(certify.MissingSetting):
            certify.tomography_linear(recs)

    def test_mle_recovers_mixed_truth(self):
        truth = noise.dephased_singlet(0.5)
        recs = certify.simulate_counts(truth, certify.PAULI_SETTINGS, 10_000, 11)
        res = certify.tomography_mle(recs, target=truth)
        assert res.converged
        assert res.fidelity_to_target > 0.99

    def test_mle_monotone_likelihood_vs_linear(self):
        recs = certify.simulate_counts(SINGLET, certify.PAULI_SETTINGS, 2000, 3)
        res = certify.tomography_mle(recs)

        def ll(rho):
            out = 0.0
            for rec in recs:
                p = certify.outcome_probabilities(
                    qmath.DensityMatrix((2, 2), rho), rec.setting
                )
                out += np.dot(rec.counts, np.log(np.maximum(p, 1e-300)))
            return out

        lin = certify._psd_project(certify.tomography_linear(recs))
        assert res.log_likelihood >= ll(lin) - 1e-6

    def test_mle_drops_empty_settings(self):
        recs = certify.simulate_counts(SINGLET, certify.PAULI_SETTINGS, 5000, 5)
        recs[0] = certify.CountsRecord(recs[0].setting, (0, 0, 0, 0), 5000.0)
        res = certify.tomography_mle(recs)
        assert res.dropped_settings == 1
        assert res.converged


class TestPpt:
    @pytest.mark.parametrize("eta", [0.0, 0.3, 0.6, 1.0])
    def test_dephased_singlet_spectrum(self, eta):
        eigs, neg = certify.ppt_report(noise.dephased_singlet(eta))
        expect = sorted([0.5, 0.5, (1 - eta) / 2, -(1 - eta) / 2], reverse=True)
        assert np.allclose(eigs, expect, atol=1e-10)
        assert neg == pytest.approx((1 - eta) / 2, abs=1e-10)

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_separable_states_have_ppt(self, seed):
        rho = certify.random_separable_state(np.random.default_rng(seed))
        eigs, neg = certify.ppt_report(rho)
        assert eigs[-1] >= -1e-10
        assert neg <= 1e-10


class TestFidelityAndErrors:
    def test_uhlmann_pure_limit_matches_overlap(self):
        rho = noise.dephased_singlet(0.3)
        f_pure = certify.fidelity(rho, circuit.singlet())
        f_mixed = certify.fidelity(rho, circuit.singlet().density())
        assert f_mixed == pytest.approx(f_pure, abs=1e-10)

    def test_uhlmann_identical_states(self):
        rho = noise.baseline_state(0.4)
        assert certify.fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)

    def test_monte_carlo_errors_deterministic_and_sized(self):
        recs = certify.simulate_counts(
            noise.dephased_singlet(0.6), certify.PAULI_SETTINGS, 10_000, 21
        )
        e1 = certify.monte_carlo_errors(recs, 20, 5)
        e2 = certify.monte_carlo_errors(recs, 20, 5)
        assert e1 == e2
        assert 1e-4 < e1["witness"] < 0.1
        assert 1e-4 < e1["min_pt_eigenvalue"] < 0.1

    def test_monte_carlo_needs_replicas(self):
        recs = certify.simulate_counts(SINGLET, certify.PAULI_SETTINGS, 100, 1)
        with pytest.raises(certify.CertifyError):
            certify.monte_carlo_errors(recs, 1, 0)
