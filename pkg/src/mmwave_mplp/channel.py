"""Manhattan-distance pathloss, sectorized antennas and strongest paths.

Segment lengths are listed in propagation order: ``segments[0]`` leaves the
base station (LOS exponent), every later segment follows a corner (NLOS
exponent plus one corner loss).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (BaseStation, BaseStationSet, BeamMark, Category, NetworkConfig,
                       Orientation, StreetLayout)

_SEGMENTS_FOR = {Category.TYPICAL: 1, Category.CROSS: 2, Category.PARALLEL: 3}


@dataclass(frozen=True)
class AntennaModel:
    g_main: float
    g_side: float
    beamwidth: float
    p_t: float


def antenna_model(n_t: int, p_t: float = None) -> AntennaModel:
    """Two-level sectorized pattern of an ``n_t``-element planar array.

    The side-lobe gain keeps the total radiated power constant. ``p_t``
    defaults to ``beamwidth / (2 pi)``.
    """
    if n_t < 1:
        raise ValueError("n_t must be >= 1")
    root = math.sqrt(n_t)
    k = math.sqrt(3.0) / (2.0 * math.pi)
    s = math.sin(math.sqrt(3.0) / (2.0 * root))
    g = (root - k * n_t * s) / (root - k * s)
    theta = math.sqrt(3.0) / root
    if p_t is None:
        p_t = theta / (2.0 * math.pi)
    return AntennaModel(g_main=float(n_t), g_side=g, beamwidth=theta, p_t=p_t)


@dataclass(frozen=True)
class PathDescriptor:
    segments: tuple
    category: Category

    def __post_init__(self):
        segs = tuple(float(d) for d in self.segments)
        cat = Category(self.category)
        if not segs or any(not d > 0 for d in segs):
            raise ValueError(f"segments must be positive, got {segs}")
        if len(segs) != _SEGMENTS_FOR[cat]:
            raise ValueError(f"{cat.name} path needs {_SEGMENTS_FOR[cat]} segments")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "category", cat)

    @property
    def corners(self) -> int:
        return len(self.segments) - 1


@dataclass(frozen=True)
class PathGain:
    gain_linear: float
    descriptor: PathDescriptor


def pathloss_db(desc: PathDescriptor, alpha_L: float, alpha_N: float, delta_db: float) -> float:
    d = desc.segments
    return (10.0 * (alpha_L * math.log10(d[0]) + alpha_N * sum(math.log10(x) for x in d[1:]))
            + desc.corners * delta_db)


def path_gain(desc: PathDescriptor, config: NetworkConfig) -> PathGain:
    """Product of the per-segment gains, without any antenna gain."""
    d = desc.segments
    g = d[0] ** -config.alpha_L
    c = config.corner_gain
    for x in d[1:]:
        g *= c * x ** -config.alpha_N
    return PathGain(g, desc)


def received_power(bs, path: PathGain, beam_gain: float, fading: float,
                   tx_power: float = 1.0) -> float:
    if fading < 0:
        raise ValueError("fading power must be >= 0")
    return tx_power * beam_gain * fading * path.gain_linear


def beam_gain(bs: BaseStation, antenna: AntennaModel) -> float:
    """Gain an interfering station directs at the receiver."""
    return antenna.g_main if bs.beam_mark == BeamMark.MAIN_LOBE else antenna.g_side


def _neighbours(streets: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Nearest street on each side of every ``x``; NaN where none exists."""
    n = streets.size
    j = np.searchsorted(streets, x, side="left")
    padded = np.concatenate([[np.nan], streets, [np.nan]])
    left = padded[j]          # streets[j - 1] < x
    right = padded[j + 1]     # streets[j] >= x
    return np.stack([left, right], axis=-1) if n else np.full(np.shape(x) + (2,), np.nan)


def parallel_candidates(x_bs, vertical_intercepts, min_segment: float = 0.0) -> np.ndarray:
    """Candidate turning streets for parallel stations at horizontal offsets ``x_bs``.

    The log path gain, as a function of the turning point ``v``, is convex
    between consecutive breakpoints ``0, x_bs`` and, with a distance clamp
    ``m > 0``, also ``+-m`` and ``x_bs +- m``. The best street is therefore a
    nearest neighbour of some breakpoint. Returns an ``(n, k)`` array of those
    neighbours (NaN where absent); ``k`` is 4 without a clamp and 12 with one.
    """
    x_bs = np.atleast_1d(np.asarray(x_bs, dtype=float))
    v = np.asarray(vertical_intercepts, dtype=float)
    m = float(min_segment)
    shifts = np.array([-m, 0.0, m]) if m > 0 else np.zeros(1)
    near_rx = _neighbours(v, shifts).reshape(-1)
    near_bs = _neighbours(v, x_bs[:, None] + shifts[None, :]).reshape(x_bs.size, -1)
    return np.concatenate([np.broadcast_to(near_rx, (x_bs.size, near_rx.size)), near_bs], axis=1)


def _pow(d, alpha, floor):
    with np.errstate(divide="ignore", over="ignore"):
        return np.maximum(np.abs(d), floor) ** -alpha


def parallel_gain_via(x_bs, y_bs, via, config: NetworkConfig):
    """Path gain of a parallel station turning at vertical street ``via``."""
    m = config.min_segment
    c = config.corner_gain
    with np.errstate(over="ignore", invalid="ignore"):
        return (c * c * _pow(x_bs - via, config.alpha_L, m) * _pow(y_bs, config.alpha_N, m)
                * _pow(via, config.alpha_N, m))


def _best_parallel(x_bs, y_bs, verticals, config):
    cands = parallel_candidates(x_bs, verticals, config.min_segment)
    gains = parallel_gain_via(x_bs[:, None], y_bs[:, None], cands, config)
    gains = np.where(np.isnan(gains), -1.0, gains)
    k = np.argmax(gains, axis=1)
    rows = np.arange(x_bs.size)
    best = gains[rows, k]
    via = cands[rows, k]
    return np.where(best < 0, 0.0, best), np.where(best < 0, np.nan, via)


def station_gains(stations: BaseStationSet, layout: StreetLayout,
                  config: NetworkConfig) -> np.ndarray:
    """Strongest-path gain of every station (0 for unreachable stations)."""
    m = config.min_segment
    c = config.corner_gain
    cat = stations.category
    off = stations.offset
    icpt = stations.intercept
    gains = np.zeros(off.size)
    t = cat == Category.TYPICAL
    gains[t] = _pow(off[t], config.alpha_L, m)
    x = cat == Category.CROSS
    gains[x] = c * _pow(off[x], config.alpha_L, m) * _pow(icpt[x], config.alpha_N, m)
    p = cat == Category.PARALLEL
    if p.any() and layout.vertical_intercepts.size:
        gains[p], _ = _best_parallel(off[p], icpt[p], layout.vertical_intercepts, config)
    return gains


def strongest_path(bs: BaseStation, layout: StreetLayout, config: NetworkConfig) -> PathDescriptor:
    """Highest-gain path from ``bs`` to the receiver at the origin.

    Detoured paths with extra corners are never considered. Returns ``None``
    for a parallel station when the layout has no vertical street.
    """
    m = config.min_segment
    cat = Category(bs.category)
    if cat == Category.TYPICAL:
        return PathDescriptor((max(abs(bs.offset), m),), cat)
    if cat == Category.CROSS:
        return PathDescriptor((max(abs(bs.offset), m), max(abs(bs.intercept), m)), cat)
    if not layout.vertical_intercepts.size:
        return None
    _, via = _best_parallel(np.array([bs.offset]), np.array([bs.intercept]),
                            layout.vertical_intercepts, config)
    v = float(via[0])
    return PathDescriptor((max(abs(bs.offset - v), m), max(abs(bs.intercept), m),
                           max(abs(v), m)), cat)


def parallel_path_via(bs: BaseStation, via: float, config: NetworkConfig) -> PathDescriptor:
    m = config.min_segment
    return PathDescriptor((max(abs(bs.offset - via), m), max(abs(bs.intercept), m),
                           max(abs(via), m)), Category.PARALLEL)
