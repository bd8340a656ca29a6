import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mmwave_mplp import analytic as A
from mmwave_mplp.channel import antenna_model
from mmwave_mplp.geometry import NetworkConfig
from mmwave_mplp.specfun import gamma_fn, varrho
from mmwave_mplp.validation import REFERENCE_N0

CFG = NetworkConfig()
ANT = antenna_model(64)


def log_u_integral(f, k, lambda_b, pieces=60):
    """int f(u) du over the bulk of the association-gain law, in w = log u."""
    lo = math.log(A.gain_quantile(1e-15, k, lambda_b))
    hi = math.log(A.gain_quantile(1 - 1e-13, k, lambda_b))
    edges = np.linspace(lo, hi, pieces + 1)
    g = lambda w: f(math.exp(w)) * math.exp(w)  # noqa: E731
    return math.fsum(integrate.quad(g, a, b, epsabs=0, epsrel=1e-11, limit=200)[0]
                     for a, b in zip(edges[:-1], edges[1:]))


def coverage_oracle(T, cfg):
    k = A.constants(cfg, threshold=T)
    return log_u_integral(lambda u: A.conditional_coverage(u, T, k, cfg.lambda_b)
                          * A.pdf_gain_combined(u, k, cfg.lambda_b), k, cfg.lambda_b)


def chi_oracle(cfg):
    k = A.constants(cfg)
    lb = cfg.lambda_b

    def f(u):  # F_C(u) dF_T(u)
        return A.cdf_gain_cross(u, k, lb) * A.cdf_gain_typical(u, k, lb) * \
            k.gamma_T * lb / k.alpha_L * u ** (-1 / k.alpha_L - 1)

    return log_u_integral(f, k, lb)


class TestConstants:
    def test_gamma_T(self):
        assert A.constants(CFG).gamma_T == pytest.approx(2 * 64 ** 0.4, rel=1e-14)
        assert A.constants(CFG).gamma_T == pytest.approx(10.5561, abs=1e-4)

    def test_gamma_C(self):
        r = 2.5 / 7
        want = 2 ** (1 + r) * 0.01 * (0.01 * 64) ** (1 / 7) * gamma_fn(1 - r)
        k = A.constants(CFG)
        assert k.gamma_C == pytest.approx(want, rel=1e-14)
        assert k.gamma_P == pytest.approx(want * 0.01 ** (1 / 7), rel=1e-14)

    def test_no_corner_propagation(self):
        k = A.constants(CFG.with_(delta_db=math.inf))
        assert k.gamma_C == 0.0 and k.gamma_P == 0.0

    def test_zero_threshold(self):
        k = A.constants(CFG.with_(noise_n0=1e-5), threshold=0.0)
        assert k.beta_1 == 0.0 and k.beta_2 == 0.0 and k.beta_3 == 0.0

    def test_beta_2(self):
        T = 3.0
        k = A.constants(CFG, threshold=T)
        p, g = ANT.p_t, ANT.g_side
        want = k.gamma_T * (p * varrho(T, 2.5) + (1 - p) * varrho(T * g / 64, 2.5))
        assert k.beta_2 == pytest.approx(want, rel=1e-12)

    def test_zero_street_intensity(self):
        k = A.constants(CFG.with_(lambda_s=0.0))
        assert k.gamma_C == 0.0 and k.beta_3 == 0.0 and k.zeta_2 > 0

    def test_requires_nlos_steeper(self):
        with pytest.raises(ValueError):
            A.constants(CFG.with_(alpha_N=2.5))

    def test_anisotropic_rejected(self):
        with pytest.raises(ValueError):
            A.constants(CFG.with_(lambda_s_h=0.02))


class TestGainCdfs:
    k = A.constants(CFG)

    def test_limits(self):
        for F in (A.cdf_gain_typical, A.cdf_gain_cross, A.cdf_gain_combined):
            assert F(1e300, self.k, 0.01) == pytest.approx(1.0, abs=1e-12)
            assert F(1e-300, self.k, 0.01) == pytest.approx(0.0, abs=1e-12)

    def test_product(self):
        u = np.logspace(-12, 0, 50)
        assert np.allclose(A.cdf_gain_combined(u, self.k, 0.01),
                           A.cdf_gain_typical(u, self.k, 0.01) * A.cdf_gain_cross(u, self.k, 0.01),
                           rtol=0, atol=0)

    def test_cross_increases_with_corner_loss(self):
        u = np.logspace(-12, 0, 50)
        k30 = A.constants(CFG.with_(delta_db=30))
        assert np.all(A.cdf_gain_cross(u, k30, 0.01) >= A.cdf_gain_cross(u, self.k, 0.01))

    def test_zero_streets_typical_only(self):
        k0 = A.constants(CFG.with_(lambda_s=0.0))
        u = np.logspace(-12, 0, 50)
        assert np.array_equal(A.cdf_gain_combined(u, k0, 0.01), A.cdf_gain_typical(u, k0, 0.01))

    def test_parallel_bounds_and_limit(self):
        u = np.logspace(-20, 0, 200)
        F = A.cdf_gain_parallel(u, self.k, 0.01, 0.01)
        assert np.all((F >= 0) & (F <= 1)) and np.all(np.diff(F) >= 0)
        assert A.cdf_gain_parallel(1e30, self.k, 0.01, 0.01) == pytest.approx(1.0, abs=1e-6)
        assert np.all(A.cdf_gain_parallel(u, self.k, 0.01, 0.01, small_argument=True) == 1.0)

    def test_pdf_integrates_to_one(self):
        total = log_u_integral(lambda u: A.pdf_gain_combined(u, self.k, 0.01), self.k, 0.01)
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_pdf_matches_numerical_derivative(self):
        u = 3e-4
        h = u * 1e-6
        num = (A.cdf_gain_combined(u + h, self.k, 0.01) - A.cdf_gain_combined(u - h, self.k, 0.01)) / (2 * h)
        assert A.pdf_gain_combined(u, self.k, 0.01) == pytest.approx(num, rel=1e-6)

    def test_quantile_inverts(self):
        for q in (1e-6, 0.1, 0.5, 0.9):
            assert A.cdf_gain_combined(A.gain_quantile(q, self.k, 0.01), self.k, 0.01) == \
                pytest.approx(q, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(ls=st.floats(1e-4, 0.1), lb=st.floats(1e-3, 0.3), aL=st.floats(2.0, 3.5),
       gap=st.floats(0.05, 6.0), delta=st.floats(0.0, 40.0))
def test_cdfs_monotone(ls, lb, aL, gap, delta):
    cfg = NetworkConfig.isotropic(ls, lambda_b=lb, alpha_L=aL, alpha_N=aL + gap, delta_db=delta)
    k = A.constants(cfg)
    u = np.logspace(-20, 0, 300)
    for F in (A.cdf_gain_typical(u, k, lb), A.cdf_gain_cross(u, k, lb),
              A.cdf_gain_parallel(u, k, ls, lb), A.cdf_gain_combined(u, k, lb)):
        assert np.all(np.diff(F) >= -1e-15)
        assert np.all((F >= 0) & (F <= 1))


class TestConditionalCoverage:
    def test_no_noise_no_interference(self):
        cfg = CFG.with_(lambda_s=0.0, lambda_b=0.0)
        k = A.constants(cfg, threshold=2.0)
        assert A.conditional_coverage(1e-6, 2.0, k, 0.0) == 1.0

    def test_noise_vanishes_for_large_gain(self):
        cfg = CFG.with_(noise_n0=1e-5, lambda_b=0.0)
        k = A.constants(cfg, threshold=2.0)
        assert A.conditional_coverage(1e12, 2.0, k, 0.0) == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(1e-9, 1e-1), st.floats(0.1, 100.0))
    def test_log_additivity(self, u, T):
        cfg = CFG.with_(noise_n0=1e-5)
        k = A.constants(cfg, threshold=T)
        parts = [replace(k, beta_2=0.0, beta_3=0.0), replace(k, beta_1=0.0, beta_3=0.0),
                 replace(k, beta_1=0.0, beta_2=0.0)]
        prod = math.prod(A.conditional_coverage(u, T, p, 0.01) for p in parts)
        assert A.conditional_coverage(u, T, k, 0.01) == pytest.approx(prod, rel=1e-12, abs=1e-300)

    def test_threshold_mismatch(self):
        with pytest.raises(ValueError):
            A.conditional_coverage(1e-3, 2.0, A.constants(CFG, threshold=1.0), 0.01)


class TestCoverage:
    @pytest.mark.parametrize("t_db", [-10, 0, 10, 20, 30])
    @pytest.mark.parametrize("n0", [0.0, REFERENCE_N0])
    def test_matches_log_u_oracle(self, t_db, n0):
        cfg = CFG.with_(noise_n0=n0)
        T = 10 ** (t_db / 10)
        assert A.coverage(T, cfg) == pytest.approx(coverage_oracle(T, cfg), abs=1e-8)

    def test_near_pole(self):
        cfg = CFG.with_(alpha_N=2.51)
        assert A.coverage(10.0, cfg) == pytest.approx(coverage_oracle(10.0, cfg), abs=1e-6)

    def test_small_threshold(self):
        assert A.coverage(1e-6, CFG) == pytest.approx(1.0, abs=1e-3)

    def test_monotone_in_threshold(self):
        v = [A.coverage(10 ** (t / 10), CFG.with_(noise_n0=REFERENCE_N0)) for t in range(-10, 31)]
        assert np.all(np.diff(v) <= 0)

    def test_nondecreasing_in_corner_loss_when_dense(self):
        cfg = CFG.with_(lambda_b=0.2, noise_n0=REFERENCE_N0)
        v = [A.coverage(1.0, cfg.with_(delta_db=d)) for d in (0, 10, 20, 30, 40)]
        assert np.all(np.diff(v) >= -1e-12)

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            A.coverage(0.0, CFG)

    def test_curve(self):
        c = A.coverage_curve(np.arange(-10, 31, 1.0), CFG)
        assert c.values.shape == (41,) and c.method == A.Method.ANALYTIC_EXACT


class TestInterferenceLimited:
    def test_lambda_b_invariance(self):
        a = A.coverage_interference_limited(3.0, CFG.with_(lambda_b=0.05))
        b = A.coverage_interference_limited(3.0, CFG.with_(lambda_b=0.5))
        assert a == b

    def test_equals_zero_noise_coverage(self):
        assert A.coverage_interference_limited(3.0, CFG) == pytest.approx(A.coverage(3.0, CFG), abs=1e-12)

    def test_convergence(self):
        cfg = CFG.with_(lambda_b=0.2, noise_n0=REFERENCE_N0)
        for t in (-10, 0, 10, 20, 30):
            T = 10 ** (t / 10)
            assert abs(A.coverage(T, cfg) - A.coverage_interference_limited(T, cfg)) <= 0.01

    def test_denser_streets_lower_asymptote(self):
        v = [A.coverage_interference_limited(1.0, CFG.with_(lambda_s=s)) for s in (0.001, 0.01, 0.05)]
        assert v[0] > v[1] > v[2]


class TestBounds:
    def test_parallel_bound_median(self):
        k = A.constants(CFG)
        u = A.gain_quantile(0.5, k, CFG.lambda_b)
        v = A.lt_parallel_lower_bound(1.0, u, CFG)
        assert 0.99 <= v <= 1.0

    def test_parallel_bound_no_corners(self):
        assert A.lt_parallel_lower_bound(1.0, 1e-6, CFG.with_(delta_db=math.inf)) == 1.0

    @given(st.floats(1e-12, 1.0), st.floats(0.01, 100.0))
    def test_parallel_bound_at_most_one(self, u, T):
        assert 0.0 < A.lt_parallel_lower_bound(T, u, CFG) <= 1.0

    def test_jensen_typical_identity(self):
        for T in (0.5, 1.0, 10.0):
            k = A.constants(CFG, threshold=T)
            assert A.jensen_lt_bounds(T, CFG)[0] == pytest.approx(math.exp(-k.beta_2 / k.gamma_T), rel=1e-12)

    def test_jensen_cross_identity(self):
        # exp(-gamma_T**(-r) beta_3 Gamma(1 + r))
        T, r = 2.0, 2.5 / 7
        k = A.constants(CFG, threshold=T)
        want = math.exp(-k.gamma_T ** -r * k.beta_3 * gamma_fn(1 + r))
        assert A.jensen_lt_bounds(T, CFG)[1] == pytest.approx(want, rel=1e-12)

    def test_jensen_no_streets(self):
        assert A.jensen_lt_bounds(1.0, CFG.with_(lambda_s=0.0))[1] == 1.0

    def test_jensen_ordering(self):
        for T in (1.0, 10.0, 100.0):
            lt, lc = A.jensen_lt_bounds(T, CFG)
            assert lc >= 0.98 and lt < lc
        assert A.jensen_lt_bounds(100.0, CFG)[0] < 0.9

    def test_jensen_pole(self):
        lc = [A.jensen_lt_bounds(1.0, CFG.with_(alpha_N=a))[1] for a in (3.0, 2.6, 2.51, 2.5001, 2.50001)]
        assert np.all(np.diff(lc) < 0) and lc[-1] < 1e-3


class TestAssociation:
    def test_no_streets(self):
        assert A.assoc_prob_typical(CFG.with_(lambda_s=0.0)) == 1.0
        assert A.assoc_prob_typical_approx(CFG.with_(lambda_s=0.0)) == 1.0

    @pytest.mark.parametrize("ls", [0.001, 0.01, 0.1])
    @pytest.mark.parametrize("aN", [2.6, 7.0])
    def test_matches_oracle(self, ls, aN):
        cfg = CFG.with_(lambda_s=ls, alpha_N=aN)
        assert A.assoc_prob_typical(cfg) == pytest.approx(chi_oracle(cfg), abs=1e-8)

    def test_lambda_b_invariance(self):
        a = A.assoc_prob_typical(CFG.with_(lambda_b=0.001))
        b = A.assoc_prob_typical(CFG.with_(lambda_b=0.1))
        assert abs(a - b) < 1e-9

    def test_dense_streets(self):
        assert A.assoc_prob_typical(CFG.with_(lambda_s=0.1)) > 0.7

    def test_approx_slope(self):
        h = 1e-4
        fd = (A.assoc_prob_typical(CFG.with_(lambda_s=0.001 + h))
              - A.assoc_prob_typical(CFG.with_(lambda_s=0.001 - h))) / (2 * h)
        slope = A.assoc_prob_typical_approx(CFG.with_(lambda_s=1.0)) - 1.0
        assert slope == pytest.approx(fd, rel=0.05)

    def test_approx_tight(self):
        for ls in np.linspace(0.001, 0.05, 20):
            cfg = CFG.with_(lambda_s=float(ls))
            assert abs(A.assoc_prob_typical_approx(cfg) - A.assoc_prob_typical(cfg)) <= 0.02

    def test_printed_form_is_quadratic(self):
        f = [1 - A.assoc_prob_typical_approx(CFG.with_(lambda_s=s), printed_form=True)
             for s in (0.01, 0.02)]
        assert f[1] / f[0] == pytest.approx(4.0, rel=1e-12)


class TestTaylor:
    def test_exact_without_streets(self):
        cfg = CFG.with_(lambda_s=0.0, noise_n0=REFERENCE_N0)
        assert A.coverage_taylor(5.0, cfg) == pytest.approx(A.coverage(5.0, cfg), abs=1e-12)

    def test_collinear(self):
        cfg = CFG.with_(noise_n0=REFERENCE_N0)
        v = [A.coverage_taylor(5.0, cfg.with_(lambda_s=s)) for s in (0.001, 0.01, 0.02)]
        mid = v[0] + (v[2] - v[0]) * (0.01 - 0.001) / (0.02 - 0.001)
        assert abs(v[1] - mid) < 1e-3
        assert abs(v[1] - mid) < 1e-10

    @pytest.mark.parametrize("aN", [3.0, 5.0, 7.0, 10.0])
    @pytest.mark.parametrize("ls", [0.001, 0.01, 0.02])
    def test_close_to_exact(self, aN, ls):
        cfg = CFG.with_(alpha_N=aN, lambda_s=ls)
        for t in (-10, 0, 10, 20, 30):
            T = 10 ** (t / 10)
            assert abs(A.coverage_taylor(T, cfg) - A.coverage(T, cfg)) <= 0.02


class TestCrossover:
    T = 10 ** 1.5
    cfg = CFG.with_(noise_n0=REFERENCE_N0)

    def test_slope_signs(self):
        assert A.coverage_slope_lambda_s(self.T, self.cfg.with_(lambda_b=0.005)) > 0
        assert A.coverage_slope_lambda_s(self.T, self.cfg.with_(lambda_b=0.01)) < 0

    def test_root(self):
        root = A.lambda_b_crossover(self.T, self.cfg, bracket=(0.005, 0.01))
        assert 0.005 < root < 0.01
        s_root = abs(A.coverage_slope_lambda_s(self.T, self.cfg.with_(lambda_b=root)))
        ends = min(abs(A.coverage_slope_lambda_s(self.T, self.cfg.with_(lambda_b=b)))
                   for b in (0.005, 0.01))
        assert s_root < 0.1 * ends

    def test_no_sign_change(self):
        with pytest.raises(A.NoSignChangeError):
            A.lambda_b_crossover(self.T, self.cfg, bracket=(0.001, 0.004))

    def test_noise_free_has_no_crossover(self):
        with pytest.raises(A.NoSignChangeError):
            A.lambda_b_crossover(self.T, CFG, bracket=(0.001, 0.1))


def test_coverage_curve_validation():
    with pytest.raises(ValueError):
        A.CoverageCurve([0.0, 1.0], [0.5], A.Method.MONTE_CARLO)
    with pytest.raises(ValueError):
        A.CoverageCurve([0.0], [1.5], A.Method.MONTE_CARLO)
