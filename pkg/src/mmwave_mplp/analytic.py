"""Closed-form association, coverage and density-scaling results.

All integrals over the association gain ``u`` are evaluated in the variable
``x = lambda_b * u**(-1/alpha_L)``, in which the gain CDF becomes
``exp(-gamma_T x - gamma_C x**r)`` with ``r = alpha_L / alpha_N``. The cross
term's ``x**(r - 1)`` singularity is removed by the further substitution
``x = s**(1/r)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .channel import AntennaModel, antenna_model
from .geometry import NetworkConfig
from .specfun import (DEFAULT_QUAD, QuadratureSpec, bessel_k1, gamma_fn,
                      integrate_semi_infinite, sinc, varrho)


class Method(str, enum.Enum):
    ANALYTIC_EXACT = "analytic_exact"
    ANALYTIC_TAYLOR = "analytic_taylor"
    JENSEN_BOUND = "jensen_bound"
    MONTE_CARLO = "monte_carlo"


class NoSignChangeError(ValueError):
    pass


@dataclass(frozen=True)
class AnalyticConstants:
    gamma_T: float
    gamma_C: float
    gamma_P: float
    beta_1: float
    beta_2: float
    beta_3: float
    zeta_1: float
    zeta_2: float
    epsilon: float
    threshold: float
    alpha_L: float
    alpha_N: float
    lambda_s: float

    @property
    def r(self) -> float:
        return self.alpha_L / self.alpha_N


@dataclass
class CoverageCurve:
    thresholds_db: np.ndarray
    values: np.ndarray
    method: Method
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.thresholds_db = np.asarray(self.thresholds_db, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.method = Method(self.method)
        if self.values.shape != self.thresholds_db.shape:
            raise ValueError("one value per threshold")
        if np.any((self.values < 0) | (self.values > 1)):
            raise ValueError("coverage values must lie in [0, 1]")


def _antenna(config, antenna):
    return antenna_model(config.n_t) if antenna is None else antenna


def _cross_scale(config: NetworkConfig, G: float) -> float:
    """gamma_C / lambda_S = 2**(1+r) (cG)**(1/alpha_N) Gamma(1 - r)."""
    r = config.alpha_L / config.alpha_N
    c = config.corner_gain
    if c == 0.0:
        return 0.0
    if not r < 1.0:
        raise ValueError("closed forms need alpha_N > alpha_L")
    return 2.0 ** (1.0 + r) * (c * G) ** (1.0 / config.alpha_N) * gamma_fn(1.0 - r)


def constants(config: NetworkConfig, antenna: AntennaModel = None, threshold: float = 1.0,
              spec: QuadratureSpec = DEFAULT_QUAD) -> AnalyticConstants:
    """Scale constants of the gain CDFs and the conditional coverage for threshold ``T``."""
    antenna = _antenna(config, antenna)
    lam_s = config.lambda_s
    if not config.alpha_N > config.alpha_L:
        raise ValueError("closed forms need alpha_N > alpha_L")
    T = float(threshold)
    if T < 0:
        raise ValueError("threshold must be >= 0")
    aL, aN = config.alpha_L, config.alpha_N
    r = aL / aN
    G, g, p = antenna.g_main, antenna.g_side, antenna.p_t
    gamma_T = 2.0 * G ** (1.0 / aL)
    zeta_2 = _cross_scale(config, G)
    rho_main = varrho(T, aL, spec)
    rho_side = varrho(T * g / G, aL, spec)
    eps = (p * rho_main) ** r + ((1.0 - p) * rho_side) ** r
    zeta_1 = zeta_2 * eps
    gamma_C = zeta_2 * lam_s
    return AnalyticConstants(
        gamma_T=gamma_T,
        gamma_C=gamma_C,
        gamma_P=gamma_C * config.corner_gain ** (1.0 / aN),
        beta_1=T * config.noise_n0,
        beta_2=gamma_T * (p * rho_main + (1.0 - p) * rho_side),
        beta_3=zeta_1 * lam_s,
        zeta_1=zeta_1,
        zeta_2=zeta_2,
        epsilon=eps,
        threshold=T,
        alpha_L=aL,
        alpha_N=aN,
        lambda_s=lam_s,
    )


def _u_pow(u, a):
    with np.errstate(divide="ignore"):
        return np.asarray(u, dtype=float) ** (-1.0 / a)


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def cdf_gain_typical(u, k: AnalyticConstants, lambda_b: float):
    """CDF of the best typical-street association gain (antenna gain included)."""
    return _out(np.exp(-k.gamma_T * lambda_b * _u_pow(u, k.alpha_L)))


def cdf_gain_cross(u, k: AnalyticConstants, lambda_b: float):
    return _out(np.exp(-k.gamma_C * lambda_b ** k.r * _u_pow(u, k.alpha_N)))


def _parallel_arg(u, k, lambda_s, lambda_b, extra=1.0):
    return 2.0 * np.sqrt(2.0 * k.gamma_P * lambda_s * lambda_b ** k.r * extra * _u_pow(u, k.alpha_N))


def _z_k1(z):
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    big = z > 1e-300
    out[big] = z[big] * np.asarray(bessel_k1(z[big]))
    return out


def cdf_gain_parallel(u, k: AnalyticConstants, lambda_s: float, lambda_b: float,
                      small_argument: bool = False):
    """Approximate CDF of the best parallel-street gain, ``z K1(z)``.

    With ``small_argument=True`` the ``K1(z) ~ 1/z`` limit is used and the
    result is identically 1.
    """
    if small_argument:
        return _out(np.ones_like(np.asarray(u, dtype=float)))
    return _out(_z_k1(_parallel_arg(u, k, lambda_s, lambda_b)))


def cdf_gain_combined(u, k: AnalyticConstants, lambda_b: float):
    """CDF of the association gain over typical and cross stations."""
    return _out(np.asarray(cdf_gain_typical(u, k, lambda_b)) * cdf_gain_cross(u, k, lambda_b))


def pdf_gain_combined(u, k: AnalyticConstants, lambda_b: float):
    u = np.asarray(u, dtype=float)
    hazard = (k.gamma_T * lambda_b / k.alpha_L * u ** (-1.0 / k.alpha_L - 1.0)
              + k.gamma_C * lambda_b ** k.r / k.alpha_N * u ** (-1.0 / k.alpha_N - 1.0))
    return _out(cdf_gain_combined(u, k, lambda_b) * hazard)


def gain_quantile(q: float, k: AnalyticConstants, lambda_b: float) -> float:
    """Inverse of :func:`cdf_gain_combined`."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    target = -math.log(q)
    # x = lambda_b u**(-1/alpha_L) solves gamma_T x + gamma_C x**r = target
    x = optimize.brentq(lambda x: k.gamma_T * x + k.gamma_C * x ** k.r - target,
                        0.0, target / k.gamma_T, xtol=1e-300, rtol=1e-14)
    return (lambda_b / x) ** k.alpha_L


def conditional_coverage(u, T: float, k: AnalyticConstants, lambda_b: float):
    """Coverage given association gain ``u``; ``k`` must be built for ``T``."""
    if not math.isclose(T, k.threshold, rel_tol=1e-12):
        raise ValueError(f"constants were built for T={k.threshold}, not {T}")
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        expo = (k.beta_1 / u + k.beta_2 * lambda_b * u ** (-1.0 / k.alpha_L)
                + k.beta_3 * lambda_b ** k.r * u ** (-1.0 / k.alpha_N))
    return _out(np.exp(-expo))


def _x_integrals(k: AnalyticConstants, lambda_b: float, spec: QuadratureSpec,
                 weights_T: tuple, weights_C: tuple):
    """Weighted integrals of the integrand family used by the coverage results.

    Returns ``sum_i wT_i * int x**eT_i E(x) dx`` over the typical-type terms
    plus ``sum_i wC_i * int x**eC_i * r x**(r-1) E(x) dx`` over the cross-type
    terms, where ``E(x) = exp(-b1 (x/lambda_b)**aL - (b2 + gT) x - (b3 + gC) x**r)``.
    """
    r = k.r
    a = k.beta_2 + k.gamma_T
    b = k.beta_3 + k.gamma_C
    noise = k.beta_1 / lambda_b ** k.alpha_L if k.beta_1 else 0.0

    def E(x):
        return math.exp(-noise * x ** k.alpha_L - a * x - b * x ** r)

    scale = 1.0 / a
    total = 0.0
    for w, e in weights_T:
        if w:
            total += w * integrate_semi_infinite(lambda x: x ** e * E(x), 0.0, scale, spec)
    for w, e in weights_C:
        if w:
            # x = s**(1/r):  r x**(r-1) dx = ds
            total += w * integrate_semi_infinite(
                lambda s: (s ** (e / r) if e else 1.0) * E(s ** (1.0 / r)), 0.0, scale ** r, spec)
    return total


def coverage(T: float, config: NetworkConfig, antenna: AntennaModel = None,
             spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """SINR coverage probability for threshold ``T`` (linear)."""
    if not T > 0:
        raise ValueError("T must be > 0")
    k = constants(config, antenna, T, spec)
    val = _x_integrals(k, config.lambda_b, spec, [(k.gamma_T, 0.0)], [(k.gamma_C, 0.0)])
    return min(max(val, 0.0), 1.0)


def coverage_interference_limited(T: float, config: NetworkConfig,
                                  antenna: AntennaModel = None,
                                  spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Coverage with the noise term dropped; independent of ``lambda_b``."""
    if not T > 0:
        raise ValueError("T must be > 0")
    k = constants(config.with_(noise_n0=0.0), antenna, T, spec)
    val = _x_integrals(k, 1.0, spec, [(k.gamma_T, 0.0)], [(k.gamma_C, 0.0)])
    return min(max(val, 0.0), 1.0)


def coverage_curve(thresholds_db, config: NetworkConfig, antenna: AntennaModel = None,
                   method: Method = Method.ANALYTIC_EXACT,
                   spec: QuadratureSpec = DEFAULT_QUAD) -> CoverageCurve:
    fn = {Method.ANALYTIC_EXACT: coverage, Method.ANALYTIC_TAYLOR: coverage_taylor}[Method(method)]
    t_db = np.asarray(thresholds_db, dtype=float)
    vals = [fn(10.0 ** (t / 10.0), config, antenna, spec) for t in t_db]
    return CoverageCurve(t_db, np.clip(vals, 0.0, 1.0), method,
                         meta={"lambda_b": config.lambda_b, "lambda_s": config.lambda_s})


def lt_parallel_lower_bound(T: float, u: float, config: NetworkConfig,
                            antenna: AntennaModel = None,
                            spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Approximate lower bound on the parallel-interference Laplace transform."""
    k = constants(config, antenna, T, spec)
    rho = varrho(T, config.alpha_L, spec)
    z = _parallel_arg(u, k, config.lambda_s, config.lambda_b, extra=rho ** k.r)
    return float(_z_k1(np.atleast_1d(z))[0])


def jensen_lt_bounds(T: float, config: NetworkConfig, antenna: AntennaModel = None,
                     spec: QuadratureSpec = DEFAULT_QUAD) -> tuple:
    """Jensen lower bounds of the typical and cross interference transforms.

    Both assume association with a typical station.
    """
    antenna = _antenna(config, antenna)
    k = constants(config, antenna, T, spec)
    p, G, g = antenna.p_t, antenna.g_main, antenna.g_side
    aL = config.alpha_L
    lb_typical = math.exp(-p * varrho(T, aL, spec) - (1 - p) * varrho(T * g / G, aL, spec))
    r = k.r
    lb_cross = math.exp(-2.0 * config.lambda_s * config.corner_gain ** (1.0 / config.alpha_N)
                        * gamma_fn(1.0 - r) * gamma_fn(1.0 + r) * k.epsilon)
    return lb_typical, lb_cross


def assoc_prob_typical(config: NetworkConfig, antenna: AntennaModel = None,
                       spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Probability that the strongest station sits on the receiver street."""
    antenna = _antenna(config, antenna)
    aL = config.alpha_L
    gamma_T = 2.0 * antenna.g_main ** (1.0 / aL)
    gamma_C = _cross_scale(config, antenna.g_main) * config.lambda_s
    if gamma_C == 0.0:
        return 1.0
    r = aL / config.alpha_N
    w = gamma_C * gamma_T ** -r
    # mu = gamma_T x
    return integrate_semi_infinite(lambda mu: math.exp(-mu - w * mu ** r), 0.0, 1.0, spec)


def assoc_prob_typical_approx(config: NetworkConfig, antenna: AntennaModel = None,
                              printed_form: bool = False) -> float:
    """First-order (linear in street intensity) association probability.

    ``printed_form=True`` puts ``gamma_C``, which already carries the street
    intensity, where ``(cG)**(1/alpha_N)`` belongs. That variant is quadratic
    in the intensity and is kept only for comparison.
    """
    antenna = _antenna(config, antenna)
    aL, aN = config.alpha_L, config.alpha_N
    r = aL / aN
    G = antenna.g_main
    gamma_T = 2.0 * G ** (1.0 / aL)
    if printed_form:
        scale = _cross_scale(config, G) * config.lambda_s
    else:
        scale = (config.corner_gain * G) ** (1.0 / aN)
    coef = 2.0 ** (1.0 + r) * scale * gamma_T ** -r / sinc(r)
    return 1.0 - coef * config.lambda_s


def coverage_taylor(T: float, config: NetworkConfig, antenna: AntennaModel = None,
                    spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Coverage with the street-dependent exponential linearized.

    The result is exactly affine in the street intensity and coincides with
    :func:`coverage` when that intensity is zero.
    """
    if not T > 0:
        raise ValueError("T must be > 0")
    lam_s = config.lambda_s
    k0 = constants(config.with_(lambda_s=0.0), antenna, T, spec)
    z1 = constants(config, antenna, T, spec).zeta_1
    z2 = k0.zeta_2
    r = k0.r
    # P1 ~ gamma_T int A - (z1 + z2) lam_s gamma_T int x**r A
    # P2 ~ z2 lam_s int r x**(r-1) A
    val = _x_integrals(k0, config.lambda_b, spec,
                       [(k0.gamma_T, 0.0), (-(z1 + z2) * lam_s * k0.gamma_T, r)],
                       [(z2 * lam_s, 0.0)])
    return float(val)


def coverage_slope_lambda_s(T: float, config: NetworkConfig, antenna: AntennaModel = None,
                            step: float = None, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Central finite difference of :func:`coverage` with respect to street intensity."""
    lam = config.lambda_s
    h = step if step is not None else max(1e-4, 0.05 * lam)
    lo = max(lam - h, 0.0)
    hi = lam + h
    return (coverage(T, config.with_(lambda_s=hi), antenna, spec)
            - coverage(T, config.with_(lambda_s=lo), antenna, spec)) / (hi - lo)


def lambda_b_crossover(T: float, config: NetworkConfig, antenna: AntennaModel = None,
                       bracket: tuple = (1e-3, 1.0), rtol: float = 1e-3,
                       spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """BS intensity where d(coverage)/d(lambda_s) changes sign.

    Raises :class:`NoSignChangeError` if the slopes at the bracket ends share
    a sign.
    """
    lo, hi = bracket

    def slope(lb):
        return coverage_slope_lambda_s(T, config.with_(lambda_b=lb), antenna, spec=spec)

    s_lo, s_hi = slope(lo), slope(hi)
    if s_lo * s_hi > 0:
        raise NoSignChangeError(
            f"coverage slope has the same sign at lambda_b={lo} ({s_lo:.3g}) "
            f"and lambda_b={hi} ({s_hi:.3g})")
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        s_mid = slope(mid)
        if s_mid == 0.0:
            return mid
        if (s_mid > 0) == (s_lo > 0):
            lo, s_lo = mid, s_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
