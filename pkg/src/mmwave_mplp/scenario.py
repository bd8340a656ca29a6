"""Flat ``key=value`` experiment descriptions.

Keys carry a section prefix, e.g. ``network.lambda_b=0.01``. Blank lines and
``#`` comments are ignored. Serialization writes every key, so
``parse(serialize(s)) == s``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import NetworkConfig

SWEEP_PARAMETERS = ("lambda_s", "lambda_b", "alpha_N", "delta_db", "n_t")

# scenario key -> NetworkConfig field
_NETWORK_KEYS = {
    "network.lambda_s_h": "lambda_s_h",
    "network.lambda_s_v": "lambda_s_v",
    "network.lambda_b": "lambda_b",
    "network.alpha_L": "alpha_L",
    "network.alpha_N": "alpha_N",
    "network.delta_db": "delta_db",
    "network.n0": "noise_n0",
    "network.window_half": "window_half",
    "network.min_segment": "min_segment",
    "antenna.n_t": "n_t",
}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdGrid:
    start: float = -10.0
    stop: float = 30.0
    step: float = 1.0

    def __post_init__(self):
        if not self.step > 0:
            raise ScenarioError("thresholds.step must be > 0")
        if self.stop < self.start:
            raise ScenarioError("thresholds.stop must be >= thresholds.start")

    def values(self) -> np.ndarray:
        n = int(round((self.stop - self.start) / self.step)) + 1
        return self.start + self.step * np.arange(n)


@dataclass(frozen=True)
class MonteCarloSpec:
    n_layouts: int = 2000
    n_fading: int = 10
    seed: int = 2024

    def __post_init__(self):
        if self.n_layouts < 1 or self.n_fading < 0:
            raise ScenarioError("mc.n_layouts must be >= 1 and mc.n_fading >= 0")
        if self.seed < 0:
            raise ScenarioError("mc.seed must be >= 0")


@dataclass(frozen=True)
class Sweep:
    parameter: str
    values: tuple

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ScenarioError(f"sweep.parameter must be one of {SWEEP_PARAMETERS}, "
                                f"got {self.parameter!r}")
        if not self.values:
            raise ScenarioError("sweep.values is empty")

    def configs(self, base: NetworkConfig):
        for v in self.values:
            if self.parameter == "n_t":
                yield v, base.with_(n_t=int(v))
            else:
                yield v, base.with_(**{self.parameter: float(v)})


@dataclass(frozen=True)
class Scenario:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    thresholds: ThresholdGrid = field(default_factory=ThresholdGrid)
    mc: MonteCarloSpec = field(default_factory=MonteCarloSpec)
    sweep: Sweep = None
    outputs: str = "out"
    map_path: str = None

    @property
    def antenna_n_t(self) -> int:
        return self.network.n_t

    def with_network(self, **changes) -> "Scenario":
        return replace(self, network=self.network.with_(**changes))


def _num(key, text):
    try:
        return float(text)
    except ValueError:
        raise ScenarioError(f"{key}: expected a number, got {text!r}") from None


def _int(key, text):
    v = _num(key, text)
    if v != int(v):
        raise ScenarioError(f"{key}: expected an integer, got {text!r}")
    return int(v)


def parse_scenario(text: str) -> Scenario:
    net, thr, mc = {}, {}, {}
    sweep_param, sweep_vals = None, None
    outputs, map_path = "out", None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected key=value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "network.lambda_s":
            v = _num(key, val)
            net["lambda_s_h"] = net["lambda_s_v"] = v
        elif key in _NETWORK_KEYS:
            name = _NETWORK_KEYS[key]
            net[name] = _int(key, val) if name == "n_t" else _num(key, val)
        elif key in ("thresholds.start", "thresholds.stop", "thresholds.step"):
            thr[key.split(".")[1]] = _num(key, val)
        elif key in ("mc.n_layouts", "mc.n_fading", "mc.seed"):
            mc[key.split(".")[1]] = _int(key, val)
        elif key == "sweep.parameter":
            sweep_param = val
        elif key == "sweep.values":
            sweep_vals = tuple(_num(key, v) for v in val.split(",") if v.strip())
        elif key == "outputs.dir":
            outputs = val
        elif key == "map.path":
            map_path = val or None
        else:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
    if (sweep_param is None) != (sweep_vals is None):
        raise ScenarioError("sweep.parameter and sweep.values must be given together")
    try:
        network = NetworkConfig(**net)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    return Scenario(network, ThresholdGrid(**thr), MonteCarloSpec(**mc),
                    Sweep(sweep_param, sweep_vals) if sweep_param else None, outputs, map_path)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def serialize_scenario(s: Scenario) -> str:
    lines = []
    for key, name in _NETWORK_KEYS.items():
        lines.append(f"{key}={getattr(s.network, name)!r}")
    lines += [f"thresholds.start={s.thresholds.start!r}",
              f"thresholds.stop={s.thresholds.stop!r}",
              f"thresholds.step={s.thresholds.step!r}",
              f"mc.n_layouts={s.mc.n_layouts}",
              f"mc.n_fading={s.mc.n_fading}",
              f"mc.seed={s.mc.seed}"]
    if s.sweep is not None:
        lines.append(f"sweep.parameter={s.sweep.parameter}")
        lines.append("sweep.values=" + ",".join(repr(float(v)) for v in s.sweep.values))
    lines.append(f"outputs.dir={s.outputs}")
    if s.map_path:
        lines.append(f"map.path={s.map_path}")
    return "\n".join(lines) + "\n"
