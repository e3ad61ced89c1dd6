import math

import pytest
from hypothesis import given, strategies as st

from gtbounds.approx_bounds import (
    ROOS_C,
    RoosParams,
    mi_perturb_bound_dif,
    mi_perturb_bound_eq,
    roos_bound,
    run_tv_grid,
    soon_bound_dif,
    soon_bound_eq,
    verify_mi_continuity,
    verify_tv_chain,
)
from gtbounds.errors import DomainError, ParameterError
from gtbounds.infomath import (
    BinomialSpec,
    Distribution,
    binomial_pmf,
    entropy,
    tv_distance,
)
from gtbounds.rng import substream


class TestSoonBounds:
    def test_eq_values(self):
        assert soon_bound_eq(10, 2, 100) == pytest.approx(7 / 99)
        # k - ell <= 1 leaves at most one draw, bound collapses to zero
        # (clamped; the unclamped expression would be negative at k = ell).
        assert soon_bound_eq(5, 4, 50) == 0.0
        assert soon_bound_eq(5, 5, 50) == 0.0

    def test_dif_values(self):
        assert soon_bound_dif(1, 7, 40) == 0.0
        assert soon_bound_dif(3, 5, 50) == pytest.approx(2 / 47)
        assert soon_bound_dif(2, 2, 4) == pytest.approx(1 / 3)

    def test_eq_tight_when_single_draw(self):
        # k - ell = 1: one draw, hypergeometric equals binomial exactly and
        # the bound is exactly zero.
        reports = verify_tv_chain(p=20, k=4, ell=3, m=5, v_eq=0)
        eq = reports[0]
        assert eq.bound == 0.0
        assert eq.exact_tv == pytest.approx(0.0, abs=1e-14)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            soon_bound_eq(3, 0, 10)
        with pytest.raises(DomainError):
            soon_bound_dif(4, 3, 10)


class TestRoosBound:
    def test_constant(self):
        assert ROOS_C == pytest.approx(1.167147, abs=1e-6)

    def test_zero_gap(self):
        assert roos_bound(4, 0.0) == 0.0

    def test_closed_form(self):
        ell, gap = 4, 0.05
        eta = gap**2 * ell * (ell + 2)
        want = ROOS_C * math.sqrt(eta) * (1 + math.sqrt(2 * eta)) * math.exp(2 * eta)
        assert roos_bound(ell, gap) == pytest.approx(want, rel=1e-12)
        assert RoosParams.make(ell, gap).eta_roos == pytest.approx(eta)

    def test_dominates_exact_tv(self):
        ell, gap = 4, 0.05
        tv = tv_distance(binomial_pmf(BinomialSpec(ell, 0.5)), binomial_pmf(BinomialSpec(ell, 0.55)))
        assert tv <= roos_bound(ell, gap)

    def test_clamped_at_one(self):
        assert roos_bound(50, 0.5) == 1.0

    @given(ell=st.integers(1, 30), q=st.floats(0.0, 0.9), gap=st.floats(0.0, 0.1))
    def test_dominates_exact_tv_property(self, ell, q, gap):
        tv = tv_distance(
            binomial_pmf(BinomialSpec(ell, q)), binomial_pmf(BinomialSpec(ell, q + gap))
        )
        assert tv <= roos_bound(ell, gap) + 1e-12


class TestTvChain:
    def test_report_shape(self):
        reports = verify_tv_chain(p=50, k=5, ell=2, m=12, v_eq=1)
        assert [r.step for r in reports] == [
            "eq_hypergeometric_vs_binomial",
            "dif_hypergeometric_vs_binomial",
            "dif_conditional_vs_unconditional_binomial",
        ]
        assert all(r.satisfied for r in reports)
        d = reports[2].to_json_dict()
        assert d["params"]["delta_gap"] == pytest.approx(12 / 50 - 11 / 47)

    def test_degenerate_conditional(self):
        # ell = 1 and v_eq = m makes the conditional draw have success
        # probability 0, so steps 2 and 3 are exact.
        reports = verify_tv_chain(p=4, k=2, ell=2, m=2, v_eq=0)
        assert reports[0].exact_tv == 0.0  # k - ell = 0: nothing drawn
        reports = verify_tv_chain(p=10, k=3, ell=1, m=2, v_eq=2)
        assert reports[1].exact_tv == pytest.approx(0.0, abs=1e-14)

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            verify_tv_chain(p=10, k=3, ell=1, m=11, v_eq=0)
        with pytest.raises(DomainError):
            verify_tv_chain(p=10, k=3, ell=1, m=2, v_eq=3)

    def test_grid_all_satisfied_small(self):
        reports = run_tv_grid(ps=(50,), ks=range(2, 5))
        assert reports
        assert all(r.satisfied for r in reports)


class TestMiPerturbBounds:
    def test_values(self):
        assert mi_perturb_bound_eq(0.25) == pytest.approx(0.25 * math.log(2))
        assert mi_perturb_bound_dif(0.0) == 0.0
        assert mi_perturb_bound_dif(0.1) == pytest.approx(0.1 * math.log(40))

    def test_ranges(self):
        with pytest.raises(ParameterError):
            mi_perturb_bound_eq(1.5)
        with pytest.raises(ParameterError):
            mi_perturb_bound_dif(-0.1)

    def test_continuity_check_small(self):
        report = verify_mi_continuity(trials=200, seed=42)
        assert report.passed
        assert report.checks == 600
        d = report.to_json_dict()
        assert d["passed"] is True and d["violations"] == []

    def test_continuity_check_deterministic(self):
        a = verify_mi_continuity(trials=50, seed=7)
        b = verify_mi_continuity(trials=50, seed=7)
        assert a == b

    def test_entropy_tv_continuity(self):
        # Entropy continuity lemma: |H(P) - H(Q)| <= d * log(2 / d) on a
        # binary alphabet, with d the one-norm distance (twice tv_distance),
        # valid for d <= 1/2.
        rng = substream(99, 0)
        checked = 0
        for _ in range(400):
            x, y = rng.random(), rng.random()
            P = Distribution.bernoulli(x)
            Q = Distribution.bernoulli(y)
            d = 2.0 * tv_distance(P, Q)
            if d == 0 or d > 0.5:
                continue
            checked += 1
            assert abs(entropy(P) - entropy(Q)) <= d * math.log(2.0 / d) + 1e-12
        assert checked > 50

    def test_entropy_local_quadratic(self):
        # Near the uniform binary pmf the entropy gap is second order: with
        # one marginal pinned at 1/2 and the other at 1/2 + eps in
        # [0.4, 0.6], the gap is at most 3 * tv^2 (tv = eps here).
        rng = substream(99, 1)
        log2 = math.log(2.0)
        for _ in range(200):
            eps = 0.1 * (2.0 * rng.random() - 1.0)
            tv = abs(eps)
            gap = abs(log2 - entropy(Distribution.bernoulli(0.5 + eps)))
            assert gap <= 3.0 * tv**2 + 1e-12
