"""Street systems and base-station placement.

The receiver always sits at the origin on the horizontal street ``y = 0``.
Horizontal streets are "parallel" streets, vertical ones are "cross" streets.
Streets have zero width.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

DEFAULT_WINDOW_HALF = 5000.0


class LayoutSource(str, enum.Enum):
    MPLP = "mplp"
    FIXED_GRID = "grid"
    LOADED_MAP = "map"


class Category(enum.IntEnum):
    TYPICAL = 0
    CROSS = 1
    PARALLEL = 2


class BeamMark(enum.IntEnum):
    SIDE_LOBE = 0
    MAIN_LOBE = 1


class Orientation(enum.IntEnum):
    HORIZONTAL = 0
    VERTICAL = 1


@dataclass(frozen=True)
class NetworkConfig:
    """Scalar model parameters.

    Densities are per meter. ``min_segment`` is the floor applied to every
    path segment length before the power law is evaluated.
    """

    lambda_s_h: float = 0.01
    lambda_s_v: float = 0.01
    lambda_b: float = 0.01
    alpha_L: float = 2.5
    alpha_N: float = 7.0
    delta_db: float = 20.0
    n_t: int = 64
    noise_n0: float = 0.0
    tx_power: float = 1.0
    window_half: float = DEFAULT_WINDOW_HALF
    min_segment: float = 1.0

    def __post_init__(self):
        for name in ("lambda_s_h", "lambda_s_v", "lambda_b"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.alpha_L > 1.0:
            raise ValueError("alpha_L must be > 1")
        if not self.alpha_N >= self.alpha_L:
            raise ValueError("alpha_N must be >= alpha_L")
        if not self.delta_db >= 0:
            raise ValueError("delta_db must be >= 0")
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise ValueError("n_t must be a positive integer")
        if not self.noise_n0 >= 0:
            raise ValueError("noise_n0 must be >= 0")
        if self.tx_power != 1.0:
            raise ValueError("transmit power is normalized to 1")
        if not self.window_half > 0:
            raise ValueError("window_half must be > 0")
        if not self.min_segment >= 0:
            raise ValueError("min_segment must be >= 0")

    @classmethod
    def isotropic(cls, lambda_s: float = 0.01, **kwargs) -> "NetworkConfig":
        return cls(lambda_s_h=lambda_s, lambda_s_v=lambda_s, **kwargs)

    @property
    def lambda_s(self) -> float:
        if self.lambda_s_h != self.lambda_s_v:
            raise ValueError(
                f"anisotropic street intensity ({self.lambda_s_h} vs {self.lambda_s_v})")
        return self.lambda_s_h

    @property
    def corner_gain(self) -> float:
        """Linear corner factor c = 10**(-delta/10)."""
        return 10.0 ** (-self.delta_db / 10.0)

    def with_(self, **changes) -> "NetworkConfig":
        if "lambda_s" in changes:
            ls = changes.pop("lambda_s")
            changes.setdefault("lambda_s_h", ls)
            changes.setdefault("lambda_s_v", ls)
        return replace(self, **changes)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StreetLayout:
    """Realized street intercepts.

    ``extent`` is ``(x_lo, x_hi, y_lo, y_hi)``; it defaults to the square
    ``[-window_half, window_half]**2``.
    """

    horizontal_intercepts: np.ndarray
    vertical_intercepts: np.ndarray
    window_half: float
    source: LayoutSource
    extent: tuple = None

    def __post_init__(self):
        h = np.unique(np.asarray(self.horizontal_intercepts, dtype=float))
        v = np.unique(np.asarray(self.vertical_intercepts, dtype=float))
        ext = self.extent
        if ext is None:
            L = float(self.window_half)
            ext = (-L, L, -L, L)
        ext = tuple(float(e) for e in ext)
        if 0.0 not in h:
            raise ValueError("layout must contain the receiver street y = 0")
        if h.size and (h[0] < ext[2] or h[-1] > ext[3]):
            raise ValueError("horizontal intercept outside the window")
        if v.size and (v[0] < ext[0] or v[-1] > ext[1]):
            raise ValueError("vertical intercept outside the window")
        object.__setattr__(self, "horizontal_intercepts", _frozen(h))
        object.__setattr__(self, "vertical_intercepts", _frozen(v))
        object.__setattr__(self, "extent", ext)
        object.__setattr__(self, "source", LayoutSource(self.source))

    @property
    def width(self) -> float:
        return self.extent[1] - self.extent[0]

    @property
    def height(self) -> float:
        return self.extent[3] - self.extent[2]


@dataclass(frozen=True)
class BaseStation:
    orientation: Orientation
    intercept: float
    offset: float
    category: Category
    beam_mark: BeamMark
    fading_seedable_id: int

    @property
    def position(self) -> tuple:
        if self.orientation == Orientation.HORIZONTAL:
            return (self.offset, self.intercept)
        return (self.intercept, self.offset)


@dataclass(frozen=True)
class BaseStationSet:
    """Column-oriented set of base stations.

    Iterating yields :class:`BaseStation` records; the arrays are what the
    Monte Carlo code works with.
    """

    orientation: np.ndarray
    intercept: np.ndarray
    offset: np.ndarray
    category: np.ndarray
    main_lobe: np.ndarray

    def __len__(self):
        return int(self.offset.size)

    def __iter__(self) -> Iterator[BaseStation]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i) -> BaseStation:
        return BaseStation(
            orientation=Orientation(int(self.orientation[i])),
            intercept=float(self.intercept[i]),
            offset=float(self.offset[i]),
            category=Category(int(self.category[i])),
            beam_mark=BeamMark.MAIN_LOBE if self.main_lobe[i] else BeamMark.SIDE_LOBE,
            fading_seedable_id=int(i),
        )

    @classmethod
    def from_stations(cls, stations) -> "BaseStationSet":
        stations = list(stations)
        return cls(
            orientation=np.array([int(s.orientation) for s in stations], dtype=np.int8),
            intercept=np.array([s.intercept for s in stations], dtype=float),
            offset=np.array([s.offset for s in stations], dtype=float),
            category=np.array([int(s.category) for s in stations], dtype=np.int8),
            main_lobe=np.array([s.beam_mark == BeamMark.MAIN_LOBE for s in stations], dtype=bool),
        )


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _child_rngs(seed, n):
    if isinstance(seed, np.random.Generator):
        return seed.spawn(n)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def sample_mplp(config: NetworkConfig, seed, extent=None) -> StreetLayout:
    """Manhattan Poisson line process plus the receiver street y = 0.

    The window is ``[-L, L]**2`` unless a rectangular ``extent`` is given.
    """
    rng = _rng(seed)
    L = float(config.window_half)
    x_lo, x_hi, y_lo, y_hi = (-L, L, -L, L) if extent is None else map(float, extent)
    n_h = rng.poisson((y_hi - y_lo) * config.lambda_s_h)
    n_v = rng.poisson((x_hi - x_lo) * config.lambda_s_v)
    h = rng.uniform(y_lo, y_hi, size=n_h)
    v = rng.uniform(x_lo, x_hi, size=n_v)
    return StreetLayout(np.append(h, 0.0), v, L, LayoutSource.MPLP,
                        extent=None if extent is None else (x_lo, x_hi, y_lo, y_hi))


def _lattice(spacing: float, offset: float, lo: float, hi: float) -> np.ndarray:
    k0 = math.ceil((lo - offset) / spacing - 1e-12)
    k1 = math.floor((hi - offset) / spacing + 1e-12)
    pts = offset + spacing * np.arange(k0, k1 + 1)
    return pts[(pts >= lo) & (pts <= hi)]


def fixed_grid(spacing_h: float, spacing_v: float, offset_h: float = 0.0,
               offset_v: float = 0.0, window_half: float = DEFAULT_WINDOW_HALF,
               extent=None) -> StreetLayout:
    """Regular street lattice.

    ``spacing_h`` separates adjacent horizontal streets (a spacing along y);
    ``spacing_v`` separates adjacent vertical streets. The horizontal grid
    line nearest the receiver is replaced by the receiver street y = 0.
    """
    if not (spacing_h > 0 and spacing_v > 0):
        raise ValueError("grid spacings must be > 0")
    L = float(window_half)
    ext = (-L, L, -L, L) if extent is None else tuple(float(e) for e in extent)
    h = _lattice(spacing_h, offset_h, ext[2], ext[3])
    if h.size:
        h = np.delete(h, np.argmin(np.abs(h)))
    v = _lattice(spacing_v, offset_v, ext[0], ext[1])
    return StreetLayout(np.append(h, 0.0), v, L, LayoutSource.FIXED_GRID, extent=ext)


class StreetMapError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class StreetMap:
    """Parsed street-map file, in file coordinates."""

    width: float
    height: float
    horizontal: np.ndarray
    vertical: np.ndarray
    duplicates: int = 0

    @property
    def lambda_s_h(self) -> float:
        """Horizontal streets per meter along the y extent."""
        return self.horizontal.size / self.height

    @property
    def lambda_s_v(self) -> float:
        return self.vertical.size / self.width


def parse_street_map(path) -> StreetMap:
    """Read a ``bbox``/``H``/``V`` street-map file (see README for the format)."""
    bbox = None
    hs, vs = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            key = parts[0]
            if bbox is None:
                if key.lower() != "bbox" or len(parts) != 3:
                    raise StreetMapError("expected 'bbox <width_m> <height_m>'", lineno)
                try:
                    bbox = (float(parts[1]), float(parts[2]))
                except ValueError:
                    raise StreetMapError("bbox extents must be numbers", lineno) from None
                if not (bbox[0] > 0 and bbox[1] > 0):
                    raise StreetMapError("bbox extents must be positive", lineno)
                continue
            if key not in ("H", "V") or len(parts) != 2:
                raise StreetMapError(f"expected 'H <y>' or 'V <x>', got {line!r}", lineno)
            try:
                coord = float(parts[1])
            except ValueError:
                raise StreetMapError(f"bad coordinate {parts[1]!r}", lineno) from None
            limit = bbox[1] if key == "H" else bbox[0]
            if not 0.0 <= coord <= limit:
                raise StreetMapError(f"street {key} {coord} outside bbox [0, {limit}]", lineno)
            (hs if key == "H" else vs).append(coord)
    if bbox is None:
        raise StreetMapError("missing bbox header")
    if not hs and not vs:
        raise StreetMapError("street list is empty")
    if not hs:
        raise StreetMapError("map needs at least one horizontal street for the receiver")
    h, v = np.unique(hs), np.unique(vs)
    dups = len(hs) + len(vs) - h.size - v.size
    return StreetMap(bbox[0], bbox[1], h, v, dups)


def load_street_map(path) -> StreetLayout:
    """Load a street-map file as a layout centred on the receiver.

    The receiver street is the horizontal street nearest the bbox centroid;
    the receiver sits at the centroid's x coordinate.
    """
    smap = parse_street_map(path)
    if smap.duplicates:
        warnings.warn(f"{path}: dropped {smap.duplicates} duplicate street line(s)",
                      stacklevel=2)
    cx, cy = smap.width / 2.0, smap.height / 2.0
    y_rx = smap.horizontal[np.argmin(np.abs(smap.horizontal - cy))]
    ext = (-cx, smap.width - cx, -y_rx, smap.height - y_rx)
    return StreetLayout(smap.horizontal - y_rx, smap.vertical - cx,
                        max(abs(e) for e in ext), LayoutSource.LOADED_MAP, extent=ext)


def place_base_stations(layout: StreetLayout, config: NetworkConfig, p_t: float,
                        seed) -> BaseStationSet:
    """Independent 1-D PPPs of intensity ``lambda_b`` on every street.

    Each station is independently marked main-lobe with probability ``p_t``.
    Counts, offsets and marks come from separate child streams so that the
    mark draw never perturbs positions.
    """
    if not 0.0 <= p_t <= 1.0:
        raise ValueError("p_t must lie in [0, 1]")
    pos_rng, mark_rng = _child_rngs(seed, 2)
    x_lo, x_hi, y_lo, y_hi = layout.extent
    h, v = layout.horizontal_intercepts, layout.vertical_intercepts
    lam = config.lambda_b
    n_h = pos_rng.poisson(lam * (x_hi - x_lo), size=h.size)
    n_v = pos_rng.poisson(lam * (y_hi - y_lo), size=v.size)
    tot_h, tot_v = int(n_h.sum()), int(n_v.sum())
    off_h = pos_rng.uniform(x_lo, x_hi, size=tot_h)
    off_v = pos_rng.uniform(y_lo, y_hi, size=tot_v)
    icpt_h = np.repeat(h, n_h)
    icpt_v = np.repeat(v, n_v)
    cat_h = np.where(icpt_h == 0.0, Category.TYPICAL, Category.PARALLEL).astype(np.int8)
    orientation = np.concatenate([np.zeros(tot_h, np.int8), np.ones(tot_v, np.int8)])
    category = np.concatenate([cat_h, np.full(tot_v, Category.CROSS, np.int8)])
    main = mark_rng.random(tot_h + tot_v) < p_t
    return BaseStationSet(orientation, np.concatenate([icpt_h, icpt_v]),
                          np.concatenate([off_h, off_v]), category, main)
