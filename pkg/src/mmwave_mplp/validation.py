"""Acceptance checks shared by ``mmwave-mplp validate`` and the test suite.

Each ``criterion_*`` function returns a :class:`CriterionResult`; none of them
raise on failure. Monte Carlo cross-checks against the closed forms use
``min_segment = 0`` (the closed forms have no distance clamp) and a 2 km
half-window: a typical station farther than 2 km is never the nearest one
(probability ``exp(-40)`` at ``lambda_b = 0.01``).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import integrate as _integrate

from . import analytic as A
from . import montecarlo as M
from .channel import antenna_model, parallel_gain_via, station_gains
from .geometry import (Category, LayoutSource, NetworkConfig, load_street_map,
                       parse_street_map, place_base_stations, sample_mplp)
from .specfun import bessel_k1, gamma_fn, varrho

BASELINE = NetworkConfig()
MC_CONFIG = BASELINE.with_(min_segment=0.0, window_half=2000.0)
THRESHOLDS_DB = np.arange(-10.0, 31.0, 1.0)

# Thermal noise over 1 GHz with a 7 dB noise figure (-77 dBm), 30 dBm transmit
# power and the 28 GHz free-space loss at 1 m (61.4 dB) folded in, since path
# gains here are normalized to unit distance.
REFERENCE_N0 = 10.0 ** ((-77.0 - 30.0 + 20.0 * math.log10(4.0 * math.pi * 28e9 / 299792458.0)) / 10.0)
SCALING_THRESHOLD_DB = 15.0
ORDERING_THRESHOLD_DB = 0.0

BUNDLED_MAP = "street_map_8x15.txt"


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail}"


def bundled_map_path():
    return resources.files("mmwave_mplp").joinpath("data", BUNDLED_MAP)


def ks_distance(samples, cdf) -> float:
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    F = np.asarray(cdf(x), dtype=float)
    return float(max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n)))


class _Cache:
    """Simulation batches shared between criteria within one run."""

    def __init__(self, workers=1, scale=1.0):
        self.workers = workers
        self.scale = scale
        self._store = {}

    def n(self, base):
        return max(200, int(base * self.scale))

    def get(self, key, fn):
        if key not in self._store:
            self._store[key] = fn()
        return self._store[key]

    def association(self):
        return self.get("assoc", lambda: M.simulate(
            MC_CONFIG, n_layouts=self.n(10_000), n_fading=0, seed=101, workers=self.workers))

    def coverage(self, alpha_N=7.0):
        cfg = MC_CONFIG.with_(alpha_N=alpha_N)
        return self.get(("cov", alpha_N), lambda: M.simulate(
            cfg, n_layouts=self.n(4000), n_fading=10, seed=202, workers=self.workers))


def criterion_1(cache: _Cache) -> CriterionResult:
    t0 = time.perf_counter()
    batch = cache.association()
    elapsed = time.perf_counter() - t0
    k = A.constants(MC_CONFIG)
    d = ks_distance(batch.association_gain, lambda u: A.cdf_gain_combined(u, k, MC_CONFIG.lambda_b))
    return CriterionResult(1, "association-gain CDF", d <= 0.02,
                           f"KS={d:.4f} (<=0.02) over {batch.n_layouts} layouts, "
                           f"{elapsed:.1f}s with {cache.workers} worker(s)")


def criterion_2(cache: _Cache) -> CriterionResult:
    batch = cache.coverage()
    mc = np.array([r.estimate for r in batch.coverage(M.InterferenceFilter.TYPICAL_CROSS,
                                                      THRESHOLDS_DB)])
    an = np.array([A.coverage(10.0 ** (t / 10.0), MC_CONFIG) for t in THRESHOLDS_DB])
    i = int(np.argmax(np.abs(mc - an)))
    dev = float(abs(mc[i] - an[i]))
    return CriterionResult(2, "coverage vs Monte Carlo", dev <= 0.03,
                           f"max|dev|={dev:.4f} at {THRESHOLDS_DB[i]:g} dB (<=0.03)")


def criterion_3(cache: _Cache) -> CriterionResult:
    batch = cache.coverage()
    curves = {f: batch.coverage(f, THRESHOLDS_DB) for f in (
        M.InterferenceFilter.TYPICAL_ONLY, M.InterferenceFilter.TYPICAL_CROSS,
        M.InterferenceFilter.ALL)}
    worst = 0.0
    fs = list(curves)
    for a in range(len(fs)):
        for b in range(a + 1, len(fs)):
            for ra, rb in zip(curves[fs[a]], curves[fs[b]]):
                hw = max(ra.half_width_95, rb.half_width_95)
                if hw > 0:
                    worst = max(worst, abs(ra.estimate - rb.estimate) / hw)
                elif ra.estimate != rb.estimate:
                    worst = math.inf
    near = cache.coverage(alpha_N=2.51)
    to = np.array([r.estimate for r in near.coverage(M.InterferenceFilter.TYPICAL_ONLY, THRESHOLDS_DB)])
    tc = np.array([r.estimate for r in near.coverage(M.InterferenceFilter.TYPICAL_CROSS, THRESHOLDS_DB)])
    gap = float(np.max(to - tc))
    ok = worst <= 2.0 and gap > 0.03
    return CriterionResult(3, "interference negligibility", ok,
                           f"alpha_N=7 max pairwise gap = {worst:.2f} CI half-widths (<=2); "
                           f"alpha_N=2.51 typical-only minus typical+cross = {gap:.4f} (>0.03)")


def criterion_4() -> CriterionResult:
    worst = 0.0
    asym = {}
    for ls in (0.001, 0.01, 0.05):
        cfg = BASELINE.with_(lambda_s=ls, lambda_b=0.2, noise_n0=REFERENCE_N0)
        for t in THRESHOLDS_DB:
            T = 10.0 ** (t / 10.0)
            a = A.coverage_interference_limited(T, cfg)
            worst = max(worst, abs(A.coverage(T, cfg) - a))
            asym[ls, t] = a

    def ordered(t):
        return asym[0.001, t] > asym[0.01, t] > asym[0.05, t]

    holds = [t for t in THRESHOLDS_DB if ordered(t)]
    ok = worst <= 0.02 and ordered(ORDERING_THRESHOLD_DB)
    return CriterionResult(4, "asymptotic coverage", ok,
                           f"max|P(lambda_b=0.2)-asymptote|={worst:.2e} (<=0.02), "
                           f"asymptote strictly decreasing in lambda_s at "
                           f"{ORDERING_THRESHOLD_DB:g} dB: {ordered(ORDERING_THRESHOLD_DB)} "
                           f"(holds on {holds[0]:g}..{holds[-1]:g} dB; N0={REFERENCE_N0:.3g})")


def _linear_fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    return float(slope), float(intercept), r2


def criterion_5() -> CriterionResult:
    T = 10.0 ** (SCALING_THRESHOLD_DB / 10.0)
    ls = np.linspace(0.001, 0.02, 8)
    fits = {}
    for lb in (0.005, 0.01):
        base = BASELINE.with_(lambda_b=lb, noise_n0=REFERENCE_N0)
        cov = np.array([A.coverage(T, base.with_(lambda_s=v)) for v in ls])
        fits[lb] = _linear_fit(ls, cov)
    r2 = min(f[2] for f in fits.values())
    signs = fits[0.005][0] > 0 and fits[0.01][0] < 0
    worst = 0.0
    for aN in np.arange(3.0, 10.01, 0.5):
        for v in (0.001, 0.01, 0.02):
            for n0 in (0.0, REFERENCE_N0):
                cfg = BASELINE.with_(alpha_N=float(aN), lambda_s=v, noise_n0=n0)
                for t in THRESHOLDS_DB[::5]:
                    Tt = 10.0 ** (t / 10.0)
                    worst = max(worst, abs(A.coverage_taylor(Tt, cfg) - A.coverage(Tt, cfg)))
    ok = r2 >= 0.98 and signs and worst <= 0.02
    return CriterionResult(5, "linear street-intensity scaling", ok,
                           f"R2_min={r2:.5f} (>=0.98), slope@lambda_b=0.005={fits[0.005][0]:+.3f}, "
                           f"slope@0.01={fits[0.01][0]:+.3f} (T={SCALING_THRESHOLD_DB:g} dB), "
                           f"max|taylor-exact|={worst:.2e} (<=0.02)")


def criterion_6(cache: _Cache) -> CriterionResult:
    batch = cache.association()
    n = batch.n_layouts
    frac = np.bincount(batch.category, minlength=3) / n
    chi = A.assoc_prob_typical(MC_CONFIG)
    mc_gap = abs(frac[Category.TYPICAL] - chi)
    approx_gap = max(abs(A.assoc_prob_typical_approx(BASELINE.with_(lambda_s=v))
                         - A.assoc_prob_typical(BASELINE.with_(lambda_s=v)))
                     for v in np.linspace(0.001, 0.05, 50))
    chi_dense = A.assoc_prob_typical(BASELINE.with_(lambda_s=0.1))
    par = frac[Category.PARALLEL]
    ok = mc_gap <= 0.02 and approx_gap <= 0.02 and chi_dense > 0.7 and par < 0.01
    return CriterionResult(6, "association probability", ok,
                           f"|MC-exact|={mc_gap:.4f} (<=0.02), max|approx-exact|={approx_gap:.4f} "
                           f"(<=0.02), chi(lambda_s=0.1)={chi_dense:.3f} (>0.7), "
                           f"parallel fraction={par:.4f} (<0.01)")


def criterion_7() -> CriterionResult:
    a = A.assoc_prob_typical(BASELINE.with_(lambda_b=0.001))
    b = A.assoc_prob_typical(BASELINE.with_(lambda_b=0.1))
    return CriterionResult(7, "lambda_b invariance of association", abs(a - b) < 1e-9,
                           f"|chi(0.001)-chi(0.1)|={abs(a - b):.1e} (<1e-9)")


def compare_street_models(n_samples=3000, seed=303, workers=1, map_path=None,
                          noise_n0=REFERENCE_N0) -> dict:
    """Ergodic rates of MPLP, fixed-grid and loaded-map street systems.

    Street densities are fitted from the map; the grid uses the matching
    mean spacings and all three share the map's bounding-box size.
    """
    path = bundled_map_path() if map_path is None else map_path
    smap = parse_street_map(path)
    layout = load_street_map(path)
    cfg = BASELINE.with_(lambda_s_h=smap.lambda_s_h, lambda_s_v=smap.lambda_s_v, noise_n0=noise_n0)
    w, h = smap.width, smap.height
    ext = (-w / 2.0, w / 2.0, -h / 2.0, h / 2.0)
    kw = dict(n_samples=n_samples, workers=workers)
    return {
        "mplp": M.estimate_ergodic_rate(LayoutSource.MPLP, cfg, seed=seed, extent=ext, **kw),
        "grid": M.estimate_ergodic_rate(LayoutSource.FIXED_GRID, cfg, seed=seed + 1, extent=ext,
                                        spacing_h=h / smap.horizontal.size,
                                        spacing_v=w / smap.vertical.size, **kw),
        "map": M.estimate_ergodic_rate(LayoutSource.LOADED_MAP, cfg, seed=seed + 2,
                                       map_layout=layout, **kw),
        "config": cfg,
    }


def criterion_8(cache: _Cache) -> CriterionResult:
    res = compare_street_models(n_samples=cache.n(3000), workers=cache.workers)
    rates = {k: v for k, v in res.items() if k != "config"}
    vals = [r.estimate for r in rates.values()]
    rel = (max(vals) - min(vals)) / min(vals)
    disjoint = [f"{a}/{b}" for a in rates for b in rates if a < b and (
        rates[a].interval[1] < rates[b].interval[0] or rates[b].interval[1] < rates[a].interval[0])]
    txt = ", ".join(f"{k}={r.estimate:.3f}+-{r.half_width_95:.3f}" for k, r in rates.items())
    note = f"; non-overlapping CIs: {', '.join(disjoint)}" if disjoint else "; all CIs overlap"
    return CriterionResult(8, "street-model comparison", rel <= 0.05,
                           f"{txt} bit/s/Hz, spread={100 * rel:.2f}% (<=5%){note}")


def k1_oracle(z: float) -> float:
    """K1 from its integral representation, by panelled quadrature."""
    t_max = math.acosh(max(745.0 / z, 1.0) + 1.0)
    edges = np.linspace(0.0, t_max, int(t_max * 4) + 2)

    def f(t):
        return math.exp(-z * math.cosh(t)) * math.cosh(t)

    return math.fsum(_integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0]
                     for a, b in zip(edges[:-1], edges[1:]))


def varrho_alpha2(t: float) -> float:
    return math.sqrt(t) * (math.pi / 2.0 - math.atan(1.0 / math.sqrt(t)))


def criterion_9() -> CriterionResult:
    zs = np.logspace(-8.0, math.log10(50.0), 60)
    k1_err = max(abs(bessel_k1(z) / k1_oracle(z) - 1.0) for z in zs)
    ts = np.logspace(-4, 4, 41)
    rho_err = max(abs(varrho(t, 2.0) / varrho_alpha2(t) - 1.0) for t in ts)
    xs = np.linspace(0.05, 20.0, 400)
    g_err = max(abs(gamma_fn(x + 1.0) / (x * gamma_fn(x)) - 1.0) for x in xs)
    ok = k1_err <= 1e-10 and rho_err <= 1e-8 and g_err <= 1e-12
    return CriterionResult(9, "special functions", ok,
                           f"K1 rel err={k1_err:.1e} (<=1e-10), varrho rel err={rho_err:.1e} "
                           f"(<=1e-8), gamma recurrence={g_err:.1e} (<=1e-12)")


def brute_force_violations(n_layouts=1000, seed=404) -> int:
    """Parallel stations whose returned gain is beaten by some vertical street."""
    cfg = NetworkConfig(lambda_s_h=0.02, lambda_s_v=0.02, lambda_b=0.02, window_half=200.0)
    antenna = antenna_model(cfg.n_t)
    root = np.random.SeedSequence(seed)
    bad = 0
    for ss in root.spawn(n_layouts):
        a, b = ss.spawn(2)
        layout = sample_mplp(cfg, np.random.default_rng(a))
        st = place_base_stations(layout, cfg, antenna.p_t, b)
        gains = station_gains(st, layout, cfg)
        p = st.category == Category.PARALLEL
        v = layout.vertical_intercepts
        if not p.any() or not v.size:
            continue
        every = parallel_gain_via(st.offset[p][:, None], st.intercept[p][:, None], v[None, :], cfg)
        bad += int(np.count_nonzero(every.max(axis=1) > gains[p] * (1.0 + 1e-12)))
    return bad


def filter_monotonicity_violations(batch: M.SimulationBatch) -> int:
    order = [M.InterferenceFilter.NOISE_ONLY, M.InterferenceFilter.TYPICAL_ONLY,
             M.InterferenceFilter.TYPICAL_CROSS, M.InterferenceFilter.ALL]
    s = [batch.sinr(f) for f in order]
    return int(sum(np.count_nonzero(s[i + 1] > s[i]) for i in range(len(s) - 1)))


def cdf_monotonicity_violations(n_configs=200, seed=505) -> int:
    rng = np.random.default_rng(seed)
    u = np.logspace(-20, 0, 400)
    bad = 0
    for _ in range(n_configs):
        aL = rng.uniform(2.0, 3.0)
        cfg = NetworkConfig(lambda_s_h=(ls := rng.uniform(1e-4, 0.1)), lambda_s_v=ls,
                            lambda_b=rng.uniform(1e-3, 0.2), alpha_L=aL,
                            alpha_N=rng.uniform(aL + 0.05, 10.0), delta_db=rng.uniform(0, 40))
        k = A.constants(cfg)
        for F in (A.cdf_gain_typical(u, k, cfg.lambda_b), A.cdf_gain_cross(u, k, cfg.lambda_b),
                  A.cdf_gain_parallel(u, k, ls, cfg.lambda_b),
                  A.cdf_gain_combined(u, k, cfg.lambda_b)):
            F = np.asarray(F)
            bad += int(np.count_nonzero(np.diff(F) < -1e-15))
            bad += int(np.count_nonzero((F < 0) | (F > 1)))
    return bad


def criterion_10(cache: _Cache) -> CriterionResult:
    bf = brute_force_violations(n_layouts=cache.n(1000))
    fm = filter_monotonicity_violations(cache.coverage())
    cm = cdf_monotonicity_violations()
    ok = bf == 0 and fm == 0 and cm == 0
    return CriterionResult(10, "property suites", ok,
                           f"path-optimality violations={bf}, filter-monotonicity violations={fm}, "
                           f"CDF violations={cm}")


def run_all(workers=1, scale=1.0, only=None, echo=print) -> list:
    """Run every criterion (or those numbered in ``only``) and echo one line each."""
    cache = _Cache(workers=workers, scale=scale)
    table = {
        1: lambda: criterion_1(cache), 2: lambda: criterion_2(cache),
        3: lambda: criterion_3(cache), 4: criterion_4, 5: criterion_5,
        6: lambda: criterion_6(cache), 7: criterion_7, 8: lambda: criterion_8(cache),
        9: criterion_9, 10: lambda: criterion_10(cache),
    }
    out = []
    for num, fn in table.items():
        if only and num not in only:
            continue
        res = fn()
        if echo:
            echo(res.line())
        out.append(res)
    return out
