import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heterohelm.asymptotics import (AsymptoticModel, SWEEP_COLUMNS, basis_size_for,
                                    eval_asymptotic, eval_msd_asymptotic, excited_validity_bound,
                                    numeric_eigenvalues, reduced_msd_pp, second_opinion,
                                    sweep_epsilon, thread_count)
from heterohelm.basis import BC
from heterohelm.errors import ConfigError, ResolutionTooLow, UnsupportedModel

PI = math.pi
eps_st = st.floats(0.01, 1.0)
eta_st = st.floats(-1.0, 1.0)


class TestFormulas:
    def test_dd_limit(self):
        np.testing.assert_allclose(eval_asymptotic(AsymptoticModel("dd"), 1e-6, 0.3), PI ** 2 / 2,
                                   rtol=1e-10)

    def test_nd_example(self):
        np.testing.assert_allclose(eval_asymptotic(AsymptoticModel("nd"), 0.1, 1.0),
                                   PI ** 2 / 8 - PI / 160, rtol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(eps_st, eta_st)
    def test_pp_flat_branch(self, eps, eta):
        np.testing.assert_allclose(eval_asymptotic(AsymptoticModel("pp", 1, PI / 2), eps, eta),
                                   2 * PI ** 2, rtol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(eps_st, eta_st, st.integers(1, 4))
    def test_dn_reflection(self, eps, eta, n):
        dn = eval_asymptotic(AsymptoticModel("dn", n), eps, eta)
        m2 = (2 * n - 1) ** 2
        expected = PI ** 2 * m2 / 8 + PI / 16 * eps * m2 * math.cos(-PI * (1 + eta) / eps)
        np.testing.assert_allclose(dn, expected, rtol=1e-13, atol=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(eps_st)
    def test_nn_at_unit_eta(self, eps):
        expected = PI ** 2 / 2 - PI * eps / 2 * math.sin(PI / eps) ** 2
        np.testing.assert_allclose(eval_asymptotic(AsymptoticModel("nn"), eps, 1.0), expected,
                                   rtol=1e-13)

    def test_dd_excited_scaling(self):
        eps, eta = 0.07, 0.0  # sin(pi eta / eps) = 0 removes the cubic term
        for n in (1, 2, 3):
            m = AsymptoticModel("dd", n, order=0)
            np.testing.assert_allclose(eval_asymptotic(m, eps, eta) / n ** 2, PI ** 2 / 2,
                                       rtol=1e-15)
        c = [(eval_asymptotic(AsymptoticModel("dd", n, order=2), eps, eta) - PI ** 2 * n * n / 2)
             / eps ** 2 for n in (2, 3)]
        np.testing.assert_allclose(c[1] / c[0], 81 / 16, rtol=1e-12)

    def test_homogeneous_limits(self):
        assert AsymptoticModel("dn", 2).homogeneous_limit == pytest.approx(9 * PI ** 2 / 8)
        assert AsymptoticModel("pp", 1, 0.0).homogeneous_limit == pytest.approx(2 * PI ** 2)

    @pytest.mark.parametrize("kwargs", [dict(bc="nn", n=2), dict(bc="pp"), dict(bc="dd", n=0),
                                        dict(bc="nd", order=3), dict(bc="dd", n=2, order=4)])
    def test_unsupported(self, kwargs):
        with pytest.raises(UnsupportedModel):
            AsymptoticModel(**kwargs)

    def test_bad_epsilon(self):
        with pytest.raises(ConfigError):
            eval_asymptotic(AsymptoticModel("dd"), 0.0, 1.0)


class TestSpread:
    def test_dd_first(self):
        np.testing.assert_allclose(eval_msd_asymptotic("dd", 1, 0.1, 1.0),
                                   math.sqrt(7) / 64 * PI ** 2 * 0.01, rtol=1e-14)

    def test_pp_flat_zero(self):
        assert reduced_msd_pp(PI / 2) < 1e-15

    def test_nd_vanishing_prefactor(self):
        # cos(pi (eta - 1) / eps) = 0 at eps = 2 (eta - 1); eta = 1.05 gives eps = 0.1
        assert abs(eval_msd_asymptotic("nd", 1, 0.1, 1.05)) < 1e-12

    def test_nonnegative(self):
        for bc in ("dd", "nd", "dn", "nn"):
            for eps in (0.2, 0.1, 0.05):
                assert eval_msd_asymptotic(bc, 1, eps, 0.3) >= 0


class TestValidity:
    @pytest.mark.parametrize("eps, bound", [(0.01, 12.5), (1.0, 1.25), (0.0625, 5.0)])
    def test_values(self, eps, bound):
        np.testing.assert_allclose(excited_validity_bound(eps), bound, rtol=1e-15)


class TestNumeric:
    def test_basis_size(self):
        assert basis_size_for(0.2) == 101
        assert basis_size_for(0.01) == 400
        with pytest.raises(ResolutionTooLow):
            basis_size_for(0.05, 30)

    def test_dd_residual_below_quartic_term(self):
        E = numeric_eigenvalues("dd", 0.1, 1.0, 1, N=256)[0]
        residual = abs(E - eval_asymptotic(AsymptoticModel("dd"), 0.1, 1.0))
        assert residual < 15 * PI ** 2 * 0.1 ** 4 / 1024

    def test_dd_residual_ratio(self):
        res = [abs(numeric_eigenvalues("dd", e, 1.0, 1, N=256)[0]
                   - eval_asymptotic(AsymptoticModel("dd"), e, 1.0)) for e in (0.1, 0.05)]
        assert res[0] / res[1] >= 20

    def test_dd_residual_monotone(self):
        res = [r.residual for r in sweep_epsilon("dd", 1.0, (0.2, 0.1, 0.05))]
        assert res[0] > res[1] > res[2]

    def test_pp_branches(self):
        records = sweep_epsilon("pp", 1.0, (0.05,))
        by_phi = {r.phi: r for r in records}
        for phi in (0.0, PI / 2):
            r = by_phi[phi]
            assert r.residual / r.E_asymptotic <= 5e-2
        assert by_phi[PI / 2].E_asymptotic == pytest.approx(2 * PI ** 2, rel=1e-15)

    @pytest.mark.parametrize("bc, eps", [("dd", 0.1), ("nd", 0.15), ("nn", 0.2)])
    def test_second_opinion(self, bc, eps):
        rr = numeric_eigenvalues(bc, eps, 0.5, 1)[0]
        np.testing.assert_allclose(second_opinion(bc, eps, 0.5), rr, rtol=1e-8)

    def test_sweep_records(self):
        records = sweep_epsilon("dd", 0.5, (0.2, 0.1), n_states=3, threads=2)
        assert [r.epsilon for r in records] == [0.2, 0.2, 0.1, 0.1, 0.1]
        assert list(records[0].as_dict()) == list(SWEEP_COLUMNS)

    def test_sweep_rejects_grid(self):
        with pytest.raises(ConfigError):
            sweep_epsilon("dd", 1.0, (0.0,))
        with pytest.raises(ResolutionTooLow):
            sweep_epsilon("dd", 1.0, (0.05,), N=20)


class TestThreads:
    def test_env(self, monkeypatch):
        monkeypatch.setenv("HH_THREADS", "3")
        assert thread_count() == 3
        assert thread_count(2) == 2

    def test_bad_env(self, monkeypatch):
        monkeypatch.setenv("HH_THREADS", "many")
        with pytest.raises(ConfigError):
            thread_count()
        monkeypatch.setenv("HH_THREADS", "0")
        with pytest.raises(ConfigError):
            thread_count()

    def test_thread_independent(self, monkeypatch):
        monkeypatch.setenv("HH_THREADS", "1")
        serial = sweep_epsilon("nd", 0.5, (0.2, 0.1))
        monkeypatch.setenv("HH_THREADS", "4")
        parallel = sweep_epsilon("nd", 0.5, (0.2, 0.1))
        assert [r.as_dict() for r in serial] == [r.as_dict() for r in parallel]
