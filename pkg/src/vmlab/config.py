"""Experiment configuration: file parsing, defaults, initial points."""

from __future__ import annotations

import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .objectives import OBJECTIVE_FAMILIES, QuadraticSpec
from .schedules import Schedule

COMPARISONS = ("vs_cn", "vs_lm", "to_opt", "bounds", "lg", "classify")
X0_MODES = ("signs", "explicit")

DEFAULT_GAMMA = 0.1
DEFAULT_BETA = 1.0
DEFAULT_DIMENSION = 100
DEFAULT_HORIZON = 50.0

_KNOWN_KEYS = {
    "objective", "spectrum", "matrix", "eps", "alpha", "gamma", "beta",
    "dimension", "horizon", "x0_mode", "x0", "v0", "seed", "output_dir",
    "comparisons",
}


@dataclass(frozen=True)
class ExperimentConfig:
    objective: str
    spec: QuadraticSpec
    eps_schedules: tuple
    alpha_schedules: tuple
    gamma: float = DEFAULT_GAMMA
    beta: float = DEFAULT_BETA
    dimension: int = DEFAULT_DIMENSION
    horizon: float = DEFAULT_HORIZON
    x0_mode: str = "signs"
    x0: tuple = None
    v0: tuple = None
    seed: int = 0
    output_dir: str = "runs"
    comparisons: tuple = ("vs_cn", "vs_lm", "to_opt")

    def as_dict(self) -> dict:
        d = {
            "objective": self.objective,
            "gamma": self.gamma, "beta": self.beta,
            "dimension": self.dimension, "horizon": self.horizon,
            "x0_mode": self.x0_mode, "seed": self.seed,
            "output_dir": self.output_dir,
            "comparisons": list(self.comparisons),
            "eps": [_schedule_dict(s) for s in self.eps_schedules],
            "alpha": [_schedule_dict(s) for s in self.alpha_schedules],
        }
        if self.spec.spectrum is not None:
            d["spectrum"] = list(self.spec.spectrum)
        else:
            d["matrix"] = [list(r) for r in self.spec.matrix]
        if self.x0 is not None:
            d["x0"] = list(self.x0)
        if self.v0 is not None:
            d["v0"] = list(self.v0)
        return d


def _schedule_dict(s: Schedule) -> dict:
    d = {"family": s.family}
    if s.family in ("power", "constant"):
        d["c0"] = s.c0
    if s.family == "power":
        d["exponent"] = s.exponent
    if s.family == "table":
        d["times"] = list(s.table[0])
        d["values"] = list(s.table[1])
    return d


def schedule_from_dict(d: dict, context: str) -> Schedule:
    if not isinstance(d, dict) or "family" not in d:
        raise ConfigError("schedule needs a 'family' key", context=context)
    fam = d["family"]
    try:
        if fam == "power":
            return Schedule.power(d.get("c0", 1.0), d.get("exponent", 1.0))
        if fam == "constant":
            return Schedule.constant(d.get("c0", 1.0))
        if fam == "zero":
            return Schedule.zero()
        if fam == "table":
            return Schedule.from_table(d["times"], d["values"])
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc), context=context) from exc
    raise ConfigError(f"unknown schedule family {fam!r}", context=context)


def parse_config(path) -> ExperimentConfig:
    """Load a JSON or TOML config file, validate, and fill defaults."""
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", context=str(path))
    try:
        if path.suffix == ".toml":
            raw = tomllib.loads(text.decode())
        else:
            raw = json.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError,
            UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}", context=str(path))
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping", context=str(path))

    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}",
                          context=str(path))
    if "objective" not in raw:
        raise ConfigError("missing required key 'objective'",
                          context=str(path))
    objective = raw["objective"]
    if objective not in OBJECTIVE_FAMILIES:
        raise ConfigError(f"unknown objective family {objective!r}",
                          context=str(path))

    gamma = float(raw.get("gamma", DEFAULT_GAMMA))
    beta = float(raw.get("beta", DEFAULT_BETA))
    horizon = float(raw.get("horizon", DEFAULT_HORIZON))
    dimension = int(raw.get("dimension", DEFAULT_DIMENSION))
    for name, v in (("gamma", gamma), ("beta", beta), ("horizon", horizon)):
        if v <= 0:
            raise ConfigError(f"{name} must be positive, got {v}",
                              context=str(path))
    if dimension < 1:
        raise ConfigError("dimension must be at least 1", context=str(path))

    if "matrix" in raw and "spectrum" in raw:
        raise ConfigError("give either 'matrix' or 'spectrum', not both",
                          context=str(path))
    from .errors import InvalidSpecError
    try:
        if "matrix" in raw:
            spec = QuadraticSpec.from_matrix(raw["matrix"])
        elif "spectrum" in raw:
            spec = QuadraticSpec.from_spectrum(raw["spectrum"])
        else:
            # default: unit spectrum at the configured dimension
            spec = QuadraticSpec.from_spectrum([1.0] * dimension)
    except InvalidSpecError as exc:
        raise ConfigError(str(exc), context=str(path)) from exc
    if spec.dimension != dimension and ("matrix" in raw or "spectrum" in raw):
        dimension = spec.dimension

    eps_raw = raw.get("eps", [{"family": "power", "c0": 1.0, "exponent": 1.0}])
    alpha_raw = raw.get("alpha", [{"family": "zero"}])
    if isinstance(eps_raw, dict):
        eps_raw = [eps_raw]
    if isinstance(alpha_raw, dict):
        alpha_raw = [alpha_raw]
    eps_schedules = tuple(schedule_from_dict(d, f"{path}:eps[{i}]")
                          for i, d in enumerate(eps_raw))
    alpha_schedules = tuple(schedule_from_dict(d, f"{path}:alpha[{i}]")
                            for i, d in enumerate(alpha_raw))

    x0_mode = raw.get("x0_mode", "signs")
    if x0_mode not in X0_MODES:
        raise ConfigError(f"x0_mode must be one of {X0_MODES}",
                          context=str(path))
    x0 = raw.get("x0")
    if x0_mode == "explicit":
        if x0 is None:
            raise ConfigError("explicit x0_mode needs an 'x0' vector",
                              context=str(path))
        if len(x0) != dimension:
            raise ConfigError("x0 length does not match dimension",
                              context=str(path))
        x0 = tuple(float(v) for v in x0)
    v0 = raw.get("v0")
    if v0 is not None:
        if len(v0) != dimension:
            raise ConfigError("v0 length does not match dimension",
                              context=str(path))
        v0 = tuple(float(v) for v in v0)

    comparisons = tuple(raw.get("comparisons", ["vs_cn", "vs_lm", "to_opt"]))
    for c in comparisons:
        if c not in COMPARISONS:
            raise ConfigError(f"unknown comparison {c!r}", context=str(path))

    return ExperimentConfig(
        objective=objective, spec=spec, eps_schedules=eps_schedules,
        alpha_schedules=alpha_schedules, gamma=gamma, beta=beta,
        dimension=dimension, horizon=horizon, x0_mode=x0_mode, x0=x0,
        v0=v0, seed=int(raw.get("seed", 0)),
        output_dir=str(raw.get("output_dir", "runs")),
        comparisons=comparisons)


def make_x0(mode: str, n: int, seed: int, explicit=None) -> np.ndarray:
    """Initial point: seeded +-1 coordinates (norm exactly sqrt(n)) or an
    explicit vector."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if mode == "explicit":
        if explicit is None:
            raise ValueError("explicit mode needs a vector")
        return np.asarray(explicit, dtype=float)
    if mode != "signs":
        raise ValueError(f"unknown x0 mode {mode!r}")
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=n).astype(float) * 2.0 - 1.0
