"""Experiment configuration: YAML in, validated dataclass out."""
import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np
import yaml

PRESETS = ("fig1a", "fig1b", "fig2a", "fig2b", "fig345")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class FitConfig:
    l0: int = 5
    noise_floor: float = 1e-3
    saturation_cap: float = 0.2
    decay_tol: float = 0.03


@dataclass
class HusimiConfig:
    t: int = 112
    n_theta: int = 256
    n_phi: int = 256
    zero_threshold: float = 1e-10
    refine: bool = True
    levels: int = 3


@dataclass
class ExperimentConfig:
    system: str = "top"
    j: float = 80
    hbar: float = 1.0
    k: list = field(default_factory=lambda: [3.0])
    eps: float = 1e-4
    initial_conditions: object = field(default_factory=lambda: [[0.89, 0.63]])
    T: int = 200
    stride: int = 1
    fit: FitConfig = field(default_factory=FitConfig)
    husimi: HusimiConfig = field(default_factory=HusimiConfig)
    output_dir: str = "out"
    seed: int = 0
    threads: object = None
    name: str = "custom"

    def to_dict(self):
        return asdict(self)

    def dump(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def sampled(self):
        return isinstance(self.initial_conditions, dict)


_TOP_KEYS = {f for f in ExperimentConfig.__dataclass_fields__} | {"N"}


def _num(errors, name, v, lo=None, hi=None, integer=False, lo_open=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errors.append(f"{name}: expected a number, got {v!r}")
        return
    if integer and int(v) != v:
        errors.append(f"{name}: expected an integer, got {v!r}")
    if lo is not None and (v <= lo if lo_open else v < lo):
        errors.append(f"{name}: must be {'>' if lo_open else '>='} {lo}, got {v!r}")
    if hi is not None and v > hi:
        errors.append(f"{name}: must be <= {hi}, got {v!r}")


def from_dict(data):
    """Build and validate a config; raises ConfigError listing all problems."""
    if not isinstance(data, dict):
        raise ConfigError(["config must be a mapping"])
    data = copy.deepcopy(data)
    errors = [f"unknown key {key!r}" for key in data if key not in _TOP_KEYS]
    if "N" in data:
        n = data.pop("N")
        _num(errors, "N", n, lo=1, integer=True)
        if not errors:
            data["hbar"] = 2 * np.pi / n
    fit = data.pop("fit", {}) or {}
    hus = data.pop("husimi", {}) or {}
    for name, sub, cls in (("fit", fit, FitConfig), ("husimi", hus, HusimiConfig)):
        if not isinstance(sub, dict):
            errors.append(f"{name}: expected a mapping")
        else:
            errors += [f"unknown key {name}.{k!r}" for k in sub if k not in cls.__dataclass_fields__]
    data = {k: v for k, v in data.items() if k in _TOP_KEYS}
    try:
        fitc = FitConfig(**{k: v for k, v in fit.items() if k in FitConfig.__dataclass_fields__})
        husc = HusimiConfig(**{k: v for k, v in hus.items() if k in HusimiConfig.__dataclass_fields__})
    except TypeError as exc:
        errors.append(str(exc))
        raise ConfigError(errors)
    if isinstance(data.get("k"), (int, float)):
        data["k"] = [data["k"]]
    cfg = ExperimentConfig(**data, fit=fitc, husimi=husc)
    errors += validate(cfg)
    if errors:
        raise ConfigError(errors)
    cfg.k = [float(x) for x in cfg.k]
    return cfg


def validate(cfg):
    """Return the list of every validation error (empty when valid)."""
    e = []
    if cfg.system not in ("top", "rotor"):
        e.append(f"system: must be 'top' or 'rotor', got {cfg.system!r}")
    _num(e, "hbar", cfg.hbar, lo=0, lo_open=True)
    if cfg.system == "top":
        _num(e, "j", cfg.j, lo=0.5)
        if isinstance(cfg.j, (int, float)) and abs(2 * cfg.j - round(2 * cfg.j)) > 1e-12:
            e.append(f"j: must be an integer or half-integer, got {cfg.j!r}")
    elif cfg.system == "rotor" and isinstance(cfg.hbar, (int, float)) and cfg.hbar > 0:
        ratio = 2 * np.pi / cfg.hbar
        if abs(ratio - round(ratio)) > 1e-9:
            e.append(f"hbar: 2*pi/hbar = {ratio:.12g} is not an integer")
    if not isinstance(cfg.k, list) or not cfg.k:
        e.append("k: expected a non-empty list of kick strengths")
    else:
        for i, kv in enumerate(cfg.k):
            _num(e, f"k[{i}]", kv, lo=0)
    _num(e, "eps", cfg.eps, lo=0)
    _num(e, "T", cfg.T, lo=1, integer=True)
    _num(e, "stride", cfg.stride, lo=1, integer=True)
    _num(e, "seed", cfg.seed, lo=0, integer=True)
    if cfg.threads is not None:
        _num(e, "threads", cfg.threads, lo=1, integer=True)
    e += _validate_ics(cfg)
    f = cfg.fit
    _num(e, "fit.l0", f.l0, lo=1, integer=True)
    _num(e, "fit.noise_floor", f.noise_floor, lo=0, hi=1, lo_open=True)
    _num(e, "fit.saturation_cap", f.saturation_cap, lo=0, hi=1, lo_open=True)
    _num(e, "fit.decay_tol", f.decay_tol, lo=0, hi=1, lo_open=True)
    h = cfg.husimi
    _num(e, "husimi.t", h.t, lo=0, integer=True)
    _num(e, "husimi.n_theta", h.n_theta, lo=8, integer=True)
    _num(e, "husimi.n_phi", h.n_phi, lo=8, integer=True)
    _num(e, "husimi.zero_threshold", h.zero_threshold, lo=0, hi=1, lo_open=True)
    _num(e, "husimi.levels", h.levels, lo=0, integer=True)
    if not isinstance(h.refine, bool):
        e.append("husimi.refine: expected true/false")
    if not isinstance(cfg.output_dir, str) or not cfg.output_dir:
        e.append("output_dir: expected a path")
    return e


def _validate_ics(cfg):
    e = []
    ics = cfg.initial_conditions
    if isinstance(ics, dict):
        extra = set(ics) - {"sample", "seed"}
        if extra:
            e.append(f"initial_conditions: unknown keys {sorted(extra)}")
        _num(e, "initial_conditions.sample", ics.get("sample"), lo=1, integer=True)
        if "seed" in ics:
            _num(e, "initial_conditions.seed", ics["seed"], lo=0, integer=True)
        return e
    if not isinstance(ics, list) or not ics:
        return ["initial_conditions: expected a non-empty list or {sample: n}"]
    for i, ic in enumerate(ics):
        name = f"initial_conditions[{i}]"
        if not isinstance(ic, (list, tuple)):
            e.append(f"{name}: expected a list")
            continue
        if cfg.system == "top":
            if len(ic) != 2:
                e.append(f"{name}: top IC is [theta, phi]")
                continue
            _num(e, f"{name}.theta", ic[0], lo=0, hi=np.pi)
            _num(e, f"{name}.phi", ic[1])
        else:
            if len(ic) not in (2, 3):
                e.append(f"{name}: rotor IC is [theta0, I0] or [theta0, I0, sigma]")
                continue
            _num(e, f"{name}.theta0", ic[0])
            _num(e, f"{name}.I0", ic[1])
            if len(ic) == 3:
                _num(e, f"{name}.sigma", ic[2], lo=0, lo_open=True)
            if isinstance(ic[1], (int, float)) and isinstance(cfg.hbar, (int, float)) and cfg.hbar > 0:
                n0 = ic[1] / cfg.hbar
                if abs(n0 - round(n0)) > 1e-9:
                    e.append(f"{name}.I0: {ic[1]!r} is not on the momentum grid")
    return e


def load(path):
    with open(path) as fh:
        return from_dict(yaml.safe_load(fh) or {})


def load_preset(name):
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; choose from {', '.join(PRESETS)}"])
    text = resources.files("kickent").joinpath("presets", f"{name}.yaml").read_text()
    return from_dict(yaml.safe_load(text))


def roundtrip(cfg):
    """Serialize and parse back (used to check lossless round trips)."""
    data = yaml.safe_load(cfg.dump())
    return from_dict(data)
