import math

import pytest

from sfheat.chaos import (chaos_second_moment, chaos_term, existence_check,
                          holder_exponents, series_term_bound)
from sfheat.errors import BudgetError, RegimeError
from sfheat.params import InitialCondition

TERM1_EXACT = 2.0 * math.sqrt(2.0) / (3.0 * math.sqrt(2.0 * math.pi))  # 0.3761263890


class TestExistenceCheck:
    def test_alpha2_d3(self):
        rep = existence_check(2.0, 3)
        assert rep.p_choice == 4.0 and rep.q_choice == 2.0
        assert rep.cond_d_lt_2q and rep.cond_d_lt_4pqa and rep.cond_d_lt_pa2
        assert rep.exists

    def test_alpha1_d3_boundary(self):
        rep = existence_check(1.0, 3)
        assert rep.q_choice == 1.5
        assert not rep.cond_d_lt_2q  # 3 < 3 fails
        assert not rep.exists

    def test_alpha2_d1(self):
        assert existence_check(2.0, 1).exists

    def test_truth_table_matches_threshold(self):
        for alpha in (0.5, 1.0, 1.5, 2.0):
            for d in range(1, 6):
                rep = existence_check(alpha, d)
                assert rep.exists == (d < 2.0 + alpha), (alpha, d)
                # conjunction structure: exists iff all three conditions hold
                assert rep.exists == (rep.cond_d_lt_2q and rep.cond_d_lt_4pqa
                                      and rep.cond_d_lt_pa2)

    def test_holder_conjugacy(self):
        for alpha in (0.5, 1.0, 1.7, 2.0):
            p, q = holder_exponents(alpha)
            assert 2.0 / p + 1.0 / q == pytest.approx(1.0)


class TestChaosTerm:
    def test_n0_is_one(self):
        term = chaos_term(0, 2.0, 1, 1.0)
        assert term.value == 1.0
        assert term.mc_error == 0.0

    def test_n0_scales_with_constant(self):
        term = chaos_term(0, 2.0, 1, 1.0, u0=InitialCondition.constant(2.0))
        assert term.value == 4.0

    def test_n1_semigroup_oracle(self):
        term = chaos_term(1, 2.0, 1, 1.0)
        assert term.method == "closed_form_alpha2"
        assert term.value == pytest.approx(TERM1_EXACT, abs=1e-3)

    def test_n1_fourier_route_agrees(self):
        det = chaos_term(1, 2.0, 1, 1.0)
        fmc = chaos_term(1, 2.0, 1, 1.0, method="fourier_mc", n_samples=100_000)
        assert fmc.method == "fourier_mc"
        tol = 3 * math.hypot(det.mc_error, fmc.mc_error)
        assert abs(det.value - fmc.value) <= tol

    def test_n2_routes_agree(self):
        det = chaos_term(2, 2.0, 1, 1.0)
        fmc = chaos_term(2, 2.0, 1, 1.0, method="fourier_mc", n_samples=100_000)
        assert abs(det.value - fmc.value) <= 3 * math.hypot(det.mc_error, fmc.mc_error)

    def test_monotone_in_t(self):
        lo = chaos_term(1, 2.0, 1, 0.5)
        hi = chaos_term(1, 2.0, 1, 1.0)
        assert lo.value < hi.value

    def test_terms_nonnegative_and_eventually_decreasing(self):
        vals = [chaos_term(n, 2.0, 1, 1.0).value for n in range(5)]
        assert all(v >= 0 for v in vals)
        assert vals[1] > vals[2] > vals[3] > vals[4]

    def test_budget_error(self):
        with pytest.raises(BudgetError):
            chaos_term(7, 2.0, 1, 1.0)

    def test_nonconstant_u0_rejected(self):
        with pytest.raises(ValueError):
            chaos_term(1, 2.0, 1, 1.0, u0=InitialCondition.cosine(1.0))

    def test_fourier_d2_unsupported(self):
        with pytest.raises(NotImplementedError):
            chaos_term(1, 1.5, 2, 1.0)


class TestSeriesBound:
    def test_ratio_decays_alpha2_d1(self):
        ratios = [series_term_bound(n + 1, 2.0, 1, 1.0) / series_term_bound(n, 2.0, 1, 1.0)
                  for n in range(20, 60)]
        assert all(b < a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] < 0.5 * ratios[0]

    def test_ratio_decays_alpha19_d3(self):
        assert existence_check(1.9, 3).exists
        ratios = [series_term_bound(n + 1, 1.9, 3, 1.0) / series_term_bound(n, 1.9, 3, 1.0)
                  for n in (20, 40, 80)]
        assert ratios[2] < ratios[1] < ratios[0]

    def test_pole_outside_region(self):
        # alpha = 0.5, d = 3 violates d < 2 + alpha: the classifier refuses
        with pytest.raises(ValueError):
            series_term_bound(5, 0.5, 3, 1.0)


class TestSecondMoment:
    def test_nmax0(self):
        res = chaos_second_moment(2.0, 1, 1.0, 0)
        assert res.value == 1.0

    def test_nmax1(self):
        res = chaos_second_moment(2.0, 1, 1.0, 1)
        assert res.value == pytest.approx(1.0 + TERM1_EXACT, abs=1e-3)
        assert res.tail_bound > 0

    def test_existence_gate(self):
        with pytest.raises(RegimeError):
            chaos_second_moment(0.5, 3, 1.0, 2)

    def test_tail_shrinks_with_nmax(self):
        r2 = chaos_second_moment(2.0, 1, 1.0, 2)
        r4 = chaos_second_moment(2.0, 1, 1.0, 4)
        assert r4.tail_bound < r2.tail_bound
