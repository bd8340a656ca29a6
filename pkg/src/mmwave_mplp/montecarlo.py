"""Seeded Monte Carlo oracle for association, coverage and rate.

Every layout ``i`` draws from its own stream ``SeedSequence(seed, spawn_key=(i,))``
so results do not depend on how layouts are split across worker processes.
One pass records the serving signal and the per-category interference of each
fading round; all interference filters are then evaluated on the same random
numbers.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import CoverageCurve, Method
from .channel import AntennaModel, antenna_model, station_gains
from .geometry import (BaseStationSet, Category, LayoutSource, NetworkConfig, StreetLayout,
                       fixed_grid, place_base_stations, sample_mplp)


class InterferenceFilter(str, enum.Enum):
    NOISE_ONLY = "noise_only"
    TYPICAL_ONLY = "typical"
    TYPICAL_CROSS = "typical_cross"
    ALL = "all"

    @property
    def included(self) -> tuple:
        return {
            InterferenceFilter.NOISE_ONLY: (),
            InterferenceFilter.TYPICAL_ONLY: (Category.TYPICAL,),
            InterferenceFilter.TYPICAL_CROSS: (Category.TYPICAL, Category.CROSS),
            InterferenceFilter.ALL: (Category.TYPICAL, Category.CROSS, Category.PARALLEL),
        }[self]


class EmptyNetworkError(ValueError):
    """No base station can reach the receiver."""


@dataclass(frozen=True)
class SinrSample:
    sinr_linear: float
    association_gain_u: float
    associated_category: Category
    interference_breakdown: tuple
    signal: float = 0.0


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    half_width_95: float
    n_samples: int
    seed_root: int

    @property
    def interval(self) -> tuple:
        return self.estimate - self.half_width_95, self.estimate + self.half_width_95


def proportion_result(hits: int, n: int, seed_root: int) -> EstimatorResult:
    if n <= 0:
        raise ValueError("need at least one sample")
    p = hits / n
    return EstimatorResult(p, 1.96 * math.sqrt(p * (1.0 - p) / n), n, seed_root)


def mean_result(values, seed_root: int) -> EstimatorResult:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("need at least one sample")
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return EstimatorResult(float(np.sum(v) / v.size), 1.96 * sd / math.sqrt(v.size), v.size, seed_root)


# --- single realization -------------------------------------------------------

def _serving_and_interference(gains, category, main_lobe, antenna, fading):
    """Serving index and per-category interference for each fading row."""
    serving = int(np.argmax(gains))
    beam = np.where(main_lobe, antenna.g_main, antenna.g_side)
    power = fading * (beam * gains)
    power[:, serving] = 0.0
    interference = np.stack([power[:, category == k].sum(axis=1) for k in Category], axis=1)
    return serving, interference


def sinr_sample(layout: StreetLayout, stations: BaseStationSet, config: NetworkConfig,
                antenna: AntennaModel = None,
                interference_filter: InterferenceFilter = InterferenceFilter.ALL,
                seed=None) -> SinrSample:
    """One SINR draw on a fixed network.

    The receiver associates with the largest main-lobe path gain. Fading is
    unit-mean Rayleigh, independent per station. With no noise and no
    included interference the SINR is ``inf``.
    """
    antenna = antenna_model(config.n_t) if antenna is None else antenna
    gains = station_gains(stations, layout, config)
    if gains.size == 0 or not np.any(gains > 0):
        raise EmptyNetworkError("no reachable base station")
    rng = np.random.default_rng(seed)
    fading = rng.exponential(size=(1, gains.size))
    serving, interference = _serving_and_interference(
        gains, stations.category, stations.main_lobe, antenna, fading)
    others = np.delete(gains, serving)
    assert others.size == 0 or others.max() <= gains[serving]
    u = antenna.g_main * gains[serving]
    signal = fading[0, serving] * u
    filt = InterferenceFilter(interference_filter)
    total = config.noise_n0 + sum(interference[0, int(k)] for k in filt.included)
    with np.errstate(divide="ignore"):
        sinr = float(np.float64(signal) / total) if total > 0 else math.inf
    return SinrSample(sinr, float(u), Category(int(stations.category[serving])),
                      tuple(float(x) for x in interference[0]), float(signal))


# --- layout sources -----------------------------------------------------------

@dataclass(frozen=True)
class LayoutFactory:
    """Draws street layouts for one of the three street models.

    ``FIXED_GRID`` lattices keep the receiver street on the lattice and get a
    fresh uniform offset of the cross streets per realization;
    ``LOADED_MAP`` reuses ``map_layout`` every time.
    """

    source: LayoutSource = LayoutSource.MPLP
    extent: tuple = None
    spacing_h: float = None
    spacing_v: float = None
    map_layout: StreetLayout = None

    def __post_init__(self):
        src = LayoutSource(self.source)
        object.__setattr__(self, "source", src)
        if src == LayoutSource.FIXED_GRID and not (self.spacing_h and self.spacing_v):
            raise ValueError("fixed grid needs spacing_h and spacing_v")
        if src == LayoutSource.LOADED_MAP and self.map_layout is None:
            raise ValueError("loaded-map source needs map_layout")

    def draw(self, config: NetworkConfig, rng: np.random.Generator) -> StreetLayout:
        if self.source == LayoutSource.MPLP:
            return sample_mplp(config, rng, extent=self.extent)
        if self.source == LayoutSource.FIXED_GRID:
            return fixed_grid(self.spacing_h, self.spacing_v,
                              offset_h=0.0,
                              offset_v=rng.uniform(0, self.spacing_v),
                              window_half=config.window_half, extent=self.extent)
        return self.map_layout


# --- batch simulation ---------------------------------------------------------

@dataclass
class SimulationBatch:
    """Raw per-layout results.

    ``signal`` and ``interference`` have one row per layout and one column
    per fading round; ``interference[..., k]`` is the power from category
    ``k``. ``best_gain[:, k]`` is the largest ``G * path gain`` in category
    ``k`` (0 if the category is empty).
    """

    association_gain: np.ndarray
    category: np.ndarray
    best_gain: np.ndarray
    signal: np.ndarray
    interference: np.ndarray
    noise_n0: float
    seed_root: int
    meta: dict = field(default_factory=dict)

    @property
    def n_layouts(self) -> int:
        return self.association_gain.size

    def sinr(self, interference_filter: InterferenceFilter) -> np.ndarray:
        filt = InterferenceFilter(interference_filter)
        total = np.full(self.signal.shape, float(self.noise_n0))
        for k in filt.included:
            total = total + self.interference[..., int(k)]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.signal / total
        out[total == 0] = math.inf
        return out

    def coverage(self, interference_filter, thresholds_db) -> list:
        s = self.sinr(interference_filter).ravel()
        n = s.size
        return [proportion_result(int(np.count_nonzero(s > 10.0 ** (t / 10.0))), n, self.seed_root)
                for t in np.asarray(thresholds_db, dtype=float)]


def _simulate_one(config, antenna, factory, n_fading, seed, index):
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    layout_ss, station_ss, fading_ss = ss.spawn(3)
    layout = factory.draw(config, np.random.default_rng(layout_ss))
    stations = place_base_stations(layout, config, antenna.p_t, station_ss)
    gains = station_gains(stations, layout, config)
    if gains.size == 0 or not np.any(gains > 0):
        raise EmptyNetworkError(f"layout {index} has no reachable base station")
    best = np.zeros(len(Category))
    for k in Category:
        sel = gains[stations.category == k]
        if sel.size:
            best[int(k)] = antenna.g_main * sel.max()
    fading = np.random.default_rng(fading_ss).exponential(size=(n_fading, gains.size))
    serving, interference = _serving_and_interference(
        gains, stations.category, stations.main_lobe, antenna, fading)
    u = antenna.g_main * gains[serving]
    return u, int(stations.category[serving]), best, fading[:, serving] * u, interference


def _simulate_range(args):
    config, antenna, factory, n_fading, seed, lo, hi = args
    return [_simulate_one(config, antenna, factory, n_fading, seed, i) for i in range(lo, hi)]


def resolve_workers(workers=None) -> int:
    """Explicit value, else ``MMWAVE_WORKERS``, else the CPU count."""
    if workers is None:
        env = os.environ.get("MMWAVE_WORKERS")
        workers = int(env) if env else (os.cpu_count() or 1)
    workers = int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def simulate(config: NetworkConfig, antenna: AntennaModel = None, n_layouts: int = 1000,
             n_fading: int = 1, seed: int = 0, workers: int = 1,
             factory: LayoutFactory = None) -> SimulationBatch:
    """Realize ``n_layouts`` networks with ``n_fading`` fading rounds each.

    Output is bit-identical for any ``workers`` value.
    """
    if n_layouts < 1 or n_fading < 0:
        raise ValueError("need n_layouts >= 1 and n_fading >= 0")
    antenna = antenna_model(config.n_t) if antenna is None else antenna
    factory = LayoutFactory() if factory is None else factory
    workers = resolve_workers(workers)
    n_chunks = min(n_layouts, workers * 4) if workers > 1 else 1
    bounds = np.linspace(0, n_layouts, n_chunks + 1).astype(int)
    tasks = [(config, antenna, factory, n_fading, seed, int(a), int(b))
             for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers == 1:
        parts = [_simulate_range(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_range, tasks))
    rows = [r for part in parts for r in part]
    return SimulationBatch(
        association_gain=np.array([r[0] for r in rows]),
        category=np.array([r[1] for r in rows], dtype=np.int8),
        best_gain=np.array([r[2] for r in rows]),
        signal=np.array([r[3] for r in rows]).reshape(n_layouts, n_fading),
        interference=np.array([r[4] for r in rows]).reshape(n_layouts, n_fading, len(Category)),
        noise_n0=config.noise_n0,
        seed_root=int(seed),
        meta={"source": factory.source.value, "n_fading": n_fading},
    )


# --- estimators ---------------------------------------------------------------

def estimate_coverage_all(config: NetworkConfig, antenna: AntennaModel = None,
                          thresholds_db=np.arange(-10, 31, 1.0), n_layouts: int = 1000,
                          n_fading_per_layout: int = 10, seed: int = 0,
                          workers: int = 1) -> dict:
    """Coverage curves for every interference filter on common random numbers.

    Returns ``{filter: (CoverageCurve, [EstimatorResult, ...])}``. The
    intervals treat all ``n_layouts * n_fading`` draws as independent, which
    slightly understates the spread when rounds share a layout.
    """
    batch = simulate(config, antenna, n_layouts, n_fading_per_layout, seed, workers)
    t_db = np.asarray(thresholds_db, dtype=float)
    out = {}
    for filt in InterferenceFilter:
        res = batch.coverage(filt, t_db)
        curve = CoverageCurve(t_db, [r.estimate for r in res], Method.MONTE_CARLO,
                              meta={"filter": filt.value, "seed": seed})
        out[filt] = (curve, res)
    return out


def estimate_coverage(config: NetworkConfig, antenna: AntennaModel = None,
                      thresholds_db=np.arange(-10, 31, 1.0),
                      interference_filter: InterferenceFilter = InterferenceFilter.TYPICAL_CROSS,
                      n_layouts: int = 1000, n_fading_per_layout: int = 10, seed: int = 0,
                      workers: int = 1):
    """Empirical ``P(SINR > T)`` with per-threshold 95% intervals."""
    allf = estimate_coverage_all(config, antenna, thresholds_db, n_layouts,
                                 n_fading_per_layout, seed, workers)
    return allf[InterferenceFilter(interference_filter)]


def sample_association_gains(config: NetworkConfig, antenna: AntennaModel = None,
                             n_layouts: int = 10_000, seed: int = 0,
                             workers: int = 1) -> SimulationBatch:
    """Association gains and per-category maxima, without fading draws."""
    return simulate(config, antenna, n_layouts, 0, seed, workers)


def estimate_association_split(config: NetworkConfig, antenna: AntennaModel = None,
                               n_layouts: int = 10_000, seed: int = 0,
                               workers: int = 1) -> tuple:
    """Fractions of layouts served by a typical, cross and parallel station."""
    batch = sample_association_gains(config, antenna, n_layouts, seed, workers)
    return tuple(proportion_result(int(np.count_nonzero(batch.category == k)), n_layouts, seed)
                 for k in Category)


def ergodic_rate_from_sinr(sinr, seed_root: int = 0, literal: bool = False) -> EstimatorResult:
    """Mean of ``log2(1 + SINR)``, or of ``1 + SINR`` when ``literal``."""
    s = np.asarray(sinr, dtype=float)
    if np.any(np.isinf(s)):
        raise ValueError("infinite SINR sample; the rate is unbounded (set noise_n0 > 0)")
    vals = 1.0 + s if literal else np.log2(1.0 + s)
    return mean_result(vals, seed_root)


def estimate_ergodic_rate(layout_source: LayoutSource, config: NetworkConfig,
                          antenna: AntennaModel = None, n_samples: int = 2000, seed: int = 0,
                          workers: int = 1, n_fading_per_layout: int = 1,
                          extent: tuple = None, spacing_h: float = None,
                          spacing_v: float = None, map_layout: StreetLayout = None,
                          literal: bool = False) -> EstimatorResult:
    """Ergodic rate in bit/s/Hz with all interference included.

    ``n_samples`` counts layouts; each contributes ``n_fading_per_layout``
    SINR draws.
    """
    factory = LayoutFactory(layout_source, extent, spacing_h, spacing_v, map_layout)
    batch = simulate(config, antenna, n_samples, n_fading_per_layout, seed, workers, factory)
    # average within a layout first so the interval reflects layout-level spread
    s = batch.sinr(InterferenceFilter.ALL)
    if np.any(np.isinf(s)):
        raise ValueError("infinite SINR sample; the rate is unbounded (set noise_n0 > 0)")
    per_layout = (1.0 + s if literal else np.log2(1.0 + s)).mean(axis=1)
    return mean_result(per_layout, seed)
