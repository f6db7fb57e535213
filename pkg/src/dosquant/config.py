"""Run configuration: schema validation, normalization, presets, and assembly.

Configs are plain JSON dicts with explicit row-major matrices.  ``normalize``
validates the schema and fills defaults (reporting errors with a full field
path); ``assemble`` turns a normalized config into ready-to-run objects.
The canonical hash of the normalized config is embedded in every artifact a
command writes, so identical configs are traceable to identical outputs.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attack import (
    DoSBudget,
    GreedyAttackParams,
    GreedyAttacker,
    clear_trace,
    load_trace,
    periodic_trace,
    random_trace,
)
from .coder import (
    VARIANTS,
    CodingScheme,
    SchemeFamily,
    estimate_family,
    origin_family,
)
from .model import ObserverGains, SystemModel, closed_loop_blocks
from .numerics import kalman_predictor_gain, lqr_gain, zoh_discretize
from .transform import Transform, scaled_jordan_transform
from .zoomout import ZoomOutParams

__all__ = [
    "ConfigError",
    "normalize",
    "load_config",
    "config_hash",
    "assemble",
    "RunSetup",
    "PRESETS",
    "preset_config",
]

TRANSFORM_POLICIES = ("diagonalize-A-LC", "diagonalize-A", "diagonalize-Acl")
ATTACK_TYPES = ("none", "greedy", "periodic", "random", "scripted")


class ConfigError(ValueError):
    """Schema violation, reported with the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


def _matrix(value, path: str, rows: int | None = None, cols: int | None = None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, "expected a numeric matrix (list of rows)")
    _require(arr.ndim == 2, path, f"expected a 2-D matrix, got ndim={arr.ndim}")
    _require(np.all(np.isfinite(arr)), path, "matrix has non-finite entries")
    if rows is not None:
        _require(arr.shape[0] == rows, path, f"expected {rows} rows, got {arr.shape[0]}")
    if cols is not None:
        _require(arr.shape[1] == cols, path, f"expected {cols} cols, got {arr.shape[1]}")
    return arr


def _weight(value, path: str, size: int) -> np.ndarray:
    """Weight matrices may be given as a scalar (times identity) or a matrix."""
    if isinstance(value, (int, float)):
        _require(value >= 0 or True, path, "")
        return float(value) * np.eye(size)
    return _matrix(value, path, size, size)


def _number(value, path: str, lo=None, hi=None) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), path, "expected a number")
    v = float(value)
    if lo is not None:
        _require(v >= lo, path, f"must be >= {lo}")
    if hi is not None:
        _require(v <= hi, path, f"must be <= {hi}")
    return v


def _integer(value, path: str, lo=None) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool), path, "expected an integer")
    if lo is not None:
        _require(value >= lo, path, f"must be >= {lo}")
    return value


def _check_keys(section: dict, path: str, allowed: set[str], required: set[str] = frozenset()):
    _require(isinstance(section, dict), path, "expected an object")
    for key in section:
        _require(key in allowed, f"{path}.{key}", "unknown field")
    for key in required:
        _require(key in section, f"{path}.{key}", "required field is missing")


def normalize(raw: dict) -> dict:
    """Validate a config dict and return a copy with defaults filled in."""
    cfg = copy.deepcopy(raw)
    _check_keys(
        cfg,
        "config",
        {"plant", "gains", "scheme", "attack", "zoomout", "initial_bound", "x0", "horizon", "seed", "sweep"},
        {"plant", "gains", "scheme"},
    )

    plant = cfg["plant"]
    _check_keys(plant, "plant", {"continuous", "discrete"})
    _require(
        ("continuous" in plant) != ("discrete" in plant),
        "plant",
        "exactly one of 'continuous' or 'discrete' must be given",
    )
    if "continuous" in plant:
        section = plant["continuous"]
        _check_keys(section, "plant.continuous", {"A", "B", "C", "sampling_period"}, {"A", "B", "C", "sampling_period"})
        a = _matrix(section["A"], "plant.continuous.A")
        n = a.shape[1]
        _matrix(section["A"], "plant.continuous.A", n, n)
        b = _matrix(section["B"], "plant.continuous.B", n)
        _matrix(section["C"], "plant.continuous.C", None, n)
        _number(section["sampling_period"], "plant.continuous.sampling_period", lo=1e-12)
    else:
        section = plant["discrete"]
        _check_keys(section, "plant.discrete", {"A", "B", "C"}, {"A", "B", "C"})
        a = _matrix(section["A"], "plant.discrete.A")
        n = a.shape[1]
        _matrix(section["A"], "plant.discrete.A", n, n)
        b = _matrix(section["B"], "plant.discrete.B", n)
        _matrix(section["C"], "plant.discrete.C", None, n)

    gains = cfg["gains"]
    _check_keys(gains, "gains", {"design", "explicit"})
    _require(
        ("design" in gains) != ("explicit" in gains),
        "gains",
        "exactly one of 'design' or 'explicit' must be given",
    )
    if "design" in gains:
        d = gains["design"]
        _check_keys(d, "gains.design", {"lqr_Q", "lqr_R", "kalman_W", "kalman_V"})
        d.setdefault("lqr_Q", 1.0)
        d.setdefault("lqr_R", 1.0)
        d.setdefault("kalman_W", 1.0)
        d.setdefault("kalman_V", 0.1)
    else:
        e = gains["explicit"]
        _check_keys(e, "gains.explicit", {"K", "L"}, {"K", "L"})
        _matrix(e["K"], "gains.explicit.K")
        _matrix(e["L"], "gains.explicit.L")

    scheme = cfg["scheme"]
    _check_keys(scheme, "scheme", {"variant", "N", "transform"}, {"variant", "N"})
    _require(scheme["variant"] in VARIANTS, "scheme.variant", f"must be one of {VARIANTS}")
    _integer(scheme["N"], "scheme.N", lo=3)
    _require(scheme["N"] % 2 == 1, "scheme.N", "quantization level must be odd")
    origin = scheme["variant"].startswith("origin-")
    default_policy = "diagonalize-Acl" if origin else (
        "diagonalize-A" if scheme["variant"] == "estimate-full" else "diagonalize-A-LC"
    )
    scheme.setdefault("transform", default_policy)
    t = scheme["transform"]
    if isinstance(t, str):
        _require(t in TRANSFORM_POLICIES, "scheme.transform", f"must be one of {TRANSFORM_POLICIES}")
        if origin:
            _require(t == "diagonalize-Acl", "scheme.transform", "origin-centered schemes transform the stacked state: use 'diagonalize-Acl'")
        else:
            _require(t != "diagonalize-Acl", "scheme.transform", "estimate-centered schemes transform the error state: use 'diagonalize-A' or 'diagonalize-A-LC'")
    else:
        _check_keys(t, "scheme.transform", {"real", "imag"}, {"real"})
        r = _matrix(t["real"], "scheme.transform.real")
        _require(r.shape[0] == r.shape[1], "scheme.transform.real", "must be square")
        if "imag" in t:
            _matrix(t["imag"], "scheme.transform.imag", r.shape[0], r.shape[1])

    cfg.setdefault("attack", {"type": "none"})
    attack = cfg["attack"]
    _check_keys(
        attack,
        "attack",
        {"type", "budget", "alpha1", "alpha2", "period", "offset", "file"},
    )
    attack.setdefault("type", "none")
    _require(attack["type"] in ATTACK_TYPES, "attack.type", f"must be one of {ATTACK_TYPES}")
    if attack["type"] != "none":
        _check_keys(attack, "attack", {"type", "budget", "alpha1", "alpha2", "period", "offset", "file"}, {"budget"})
        b = attack["budget"]
        _check_keys(b, "attack.budget", {"Pi_d", "nu_d", "Pi_f", "nu_f"}, {"Pi_d", "nu_d"})
        _number(b["Pi_d"], "attack.budget.Pi_d", lo=0)
        _number(b["nu_d"], "attack.budget.nu_d", lo=0, hi=1)
        b.setdefault("Pi_f", 1.0)
        b.setdefault("nu_f", 0.5)
        _number(b["Pi_f"], "attack.budget.Pi_f", lo=0)
        _number(b["nu_f"], "attack.budget.nu_f", lo=0, hi=0.5)
    if attack["type"] == "greedy":
        attack.setdefault("alpha1", 1.0)
        attack.setdefault("alpha2", 0.5)
        _number(attack["alpha1"], "attack.alpha1", lo=0)
        a2 = _number(attack["alpha2"], "attack.alpha2", lo=0)
        _require(a2 < 1.0, "attack.alpha2", "must be < 1")
    if attack["type"] == "periodic":
        _require("period" in attack, "attack.period", "required for periodic attacks")
        _integer(attack["period"], "attack.period", lo=1)
        attack.setdefault("offset", 0)
        _integer(attack["offset"], "attack.offset", lo=0)
    if attack["type"] == "scripted":
        _require("file" in attack, "attack.file", "required for scripted attacks")
        _require(isinstance(attack["file"], str), "attack.file", "expected a path string")

    has_zoomout = "zoomout" in cfg
    has_bound = "initial_bound" in cfg
    _require(has_zoomout != has_bound, "config", "exactly one of 'zoomout' or 'initial_bound' must be given")
    if has_zoomout:
        z = cfg["zoomout"]
        _check_keys(z, "zoomout", {"E0x", "kappa"}, {"E0x", "kappa"})
        _number(z["E0x"], "zoomout.E0x", lo=1e-300)
        _number(z["kappa"], "zoomout.kappa", lo=1e-300)
    else:
        _number(cfg["initial_bound"], "initial_bound", lo=0)

    _require("x0" in cfg, "x0", "required field is missing")
    x0 = np.asarray(cfg["x0"], dtype=float)
    _require(x0.ndim == 1 and x0.size == n, "x0", f"expected a flat vector of length {n}")

    cfg.setdefault("horizon", 400)
    _integer(cfg["horizon"], "horizon", lo=1)
    cfg.setdefault("seed", 0)
    _integer(cfg["seed"], "seed", lo=0)

    if "sweep" in cfg:
        s = cfg["sweep"]
        _check_keys(s, "sweep", {"nu_d", "nu_f", "parity"}, {"nu_d"})
        for axis in ("nu_d", "nu_f"):
            if axis in s:
                grid = s[axis]
                _require(isinstance(grid, list) and len(grid) >= 0, f"sweep.{axis}", "expected a list of values")
                for i, v in enumerate(grid):
                    _number(v, f"sweep.{axis}[{i}]", lo=0)
        s.setdefault("nu_f", [0.0])
        s.setdefault("parity", "any")
        _require(s["parity"] in ("any", "odd"), "sweep.parity", "must be 'any' or 'odd'")
    return cfg


def load_config(path) -> dict:
    """Read, parse, and normalize a JSON config file."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}")
    return normalize(raw)


def config_hash(cfg: dict) -> str:
    """Canonical sha256 of a normalized config."""
    payload = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(eq=False)
class RunSetup:
    """Everything a command needs, assembled from one config."""

    config: dict
    hash: str
    model: SystemModel
    gains: ObserverGains
    family: SchemeFamily
    scheme: CodingScheme
    x0: np.ndarray
    zoomout: ZoomOutParams | None
    initial_bound: float | None
    horizon: int
    seed: int
    budget: DoSBudget | None

    def attack_source(self, seed: int | None = None, horizon: int | None = None):
        """Fresh attack source for one run (greedy attackers are single-use)."""
        attack = self.config["attack"]
        horizon = self.horizon if horizon is None else horizon
        seed = self.seed if seed is None else seed
        kind = attack["type"]
        if kind == "none":
            return clear_trace(horizon)
        budget = self.budget
        if kind == "greedy":
            return GreedyAttacker(budget, GreedyAttackParams(attack["alpha1"], attack["alpha2"]))
        if kind == "periodic":
            return periodic_trace(attack["period"], attack["offset"], horizon, budget)
        if kind == "random":
            return random_trace(budget, seed, horizon)
        if kind == "scripted":
            trace = load_trace(attack["file"])
            if len(trace) < horizon:
                raise ConfigError("attack.file", f"trace shorter than horizon {horizon}")
            return trace
        raise ConfigError("attack.type", f"unhandled type {kind!r}")


def _build_transform(cfg_scheme: dict, model: SystemModel, gains: ObserverGains) -> Transform:
    t = cfg_scheme["transform"]
    if isinstance(t, dict):
        r = np.asarray(t["real"], dtype=float)
        if "imag" in t:
            r = r + 1j * np.asarray(t["imag"], dtype=float)
        origin = cfg_scheme["variant"].startswith("origin-")
        if origin:
            target, _, _, _ = closed_loop_blocks(model, gains)
            label = "A_cl"
        else:
            target = model.A - gains.L @ model.C
            label = "A-LC"
        expected = 2 * model.n_x if origin else model.n_x
        if r.shape != (expected, expected):
            raise ConfigError("scheme.transform.real", f"expected a {expected}x{expected} matrix")
        return Transform.from_matrix(r, target, label)
    if t == "diagonalize-A-LC":
        return scaled_jordan_transform(model.A - gains.L @ model.C, target="A-LC")
    if t == "diagonalize-A":
        return scaled_jordan_transform(model.A, target="A")
    a_cl, _, _, _ = closed_loop_blocks(model, gains)
    return scaled_jordan_transform(a_cl, target="A_cl")


def assemble(cfg: dict) -> RunSetup:
    """Build the model, gains, transform, and scheme from a normalized config."""
    cfg = normalize(cfg)
    plant = cfg["plant"]
    if "continuous" in plant:
        p = plant["continuous"]
        a, b = zoh_discretize(np.asarray(p["A"], dtype=float), np.asarray(p["B"], dtype=float), p["sampling_period"])
        model = SystemModel(A=a, B=b, C=np.asarray(p["C"], dtype=float))
    else:
        p = plant["discrete"]
        model = SystemModel(A=p["A"], B=p["B"], C=p["C"])

    if "design" in cfg["gains"]:
        d = cfg["gains"]["design"]
        k, _ = lqr_gain(model.A, model.B, _weight(d["lqr_Q"], "gains.design.lqr_Q", model.n_x), _weight(d["lqr_R"], "gains.design.lqr_R", model.n_u))
        l, _ = kalman_predictor_gain(model.A, model.C, _weight(d["kalman_W"], "gains.design.kalman_W", model.n_x), _weight(d["kalman_V"], "gains.design.kalman_V", model.n_y))
        gains = ObserverGains(K=k, L=l)
    else:
        e = cfg["gains"]["explicit"]
        gains = ObserverGains(K=e["K"], L=e["L"])
    try:
        gains.validate(model)
    except ValueError as exc:
        raise ConfigError("gains", str(exc))

    variant = cfg["scheme"]["variant"]
    transform = _build_transform(cfg["scheme"], model, gains)
    if variant.startswith("origin-"):
        family = origin_family(model, gains, transform, simple=variant.endswith("-simple"))
    else:
        family = estimate_family(model, gains, transform, simple=variant.endswith("-simple"))
    scheme = CodingScheme.build(family, model, cfg["scheme"]["N"])

    budget = None
    if cfg["attack"]["type"] != "none":
        b = cfg["attack"]["budget"]
        budget = DoSBudget(b["Pi_d"], b["nu_d"], b["Pi_f"], b["nu_f"])

    return RunSetup(
        config=cfg,
        hash=config_hash(cfg),
        model=model,
        gains=gains,
        family=family,
        scheme=scheme,
        x0=np.asarray(cfg["x0"], dtype=float),
        zoomout=ZoomOutParams(cfg["zoomout"]["E0x"], cfg["zoomout"]["kappa"]) if "zoomout" in cfg else None,
        initial_bound=cfg.get("initial_bound"),
        horizon=cfg["horizon"],
        seed=cfg["seed"],
        budget=budget,
    )


def _reactor_plant() -> dict:
    from .benchmark import SAMPLING_PERIOD, batch_reactor_continuous

    a_c, b_c, c = batch_reactor_continuous()
    return {
        "continuous": {
            "A": a_c.tolist(),
            "B": b_c.tolist(),
            "C": c.tolist(),
            "sampling_period": SAMPLING_PERIOD,
        }
    }


def _reactor_preset(variant, transform, budget, horizon, attack_type="greedy", period=None) -> dict:
    attack: dict = {"type": attack_type, "budget": budget}
    if attack_type == "greedy":
        attack["alpha1"] = 1.0
        attack["alpha2"] = 0.5
    if attack_type == "periodic":
        attack["period"] = period
        attack["offset"] = 0
    return {
        "plant": _reactor_plant(),
        "gains": {"design": {"lqr_Q": 1.0, "lqr_R": 1.0, "kalman_W": 1.0, "kalman_V": 0.1}},
        "scheme": {"variant": variant, "N": 71, "transform": transform},
        "attack": attack,
        "zoomout": {"E0x": 0.01, "kappa": 0.01},
        "x0": [0.0, 0.5, 0.5, 1.0],
        "horizon": horizon,
        "seed": 0,
    }


def _sweep_preset(variant, transform, nu_d_grid, nu_f_grid=(0.0,)) -> dict:
    cfg = _reactor_preset(variant, transform, {"Pi_d": 0.0, "nu_d": 0.0}, 400, attack_type="none")
    del cfg["attack"]
    cfg["sweep"] = {"nu_d": list(nu_d_grid), "nu_f": list(nu_f_grid), "parity": "any"}
    return cfg


def _grid(stop: float, count: int) -> list[float]:
    return [round(stop * i / (count - 1), 10) for i in range(count)]


PRESETS: dict[str, dict] = {
    "batch-reactor-fig5": _reactor_preset(
        "estimate-simple", "diagonalize-A-LC", {"Pi_d": 2.0, "nu_d": 0.10}, 1500
    ),
    "batch-reactor-fig6": _reactor_preset(
        "estimate-simple", "diagonalize-A-LC", {"Pi_d": 2.0, "nu_d": 0.11}, 1500
    ),
    "batch-reactor-fig7": _reactor_preset(
        "estimate-full",
        "diagonalize-A",
        {"Pi_d": 2.0, "nu_d": 0.15, "Pi_f": 1.0, "nu_f": 0.035},
        2000,
    ),
    "batch-reactor-fig8": _reactor_preset(
        "estimate-full",
        "diagonalize-A",
        {"Pi_d": 2.0, "nu_d": 0.15, "Pi_f": 1.0, "nu_f": 0.045},
        2000,
    ),
    "batch-reactor-lyapunov": _reactor_preset(
        "estimate-simple",
        "diagonalize-A-LC",
        {"Pi_d": 2.0, "nu_d": 0.10},
        600,
        attack_type="periodic",
        period=10,
    ),
    "batch-reactor-sweep-simple": _sweep_preset(
        "estimate-simple", "diagonalize-A-LC", _grid(0.138, 24)
    ),
    "batch-reactor-sweep-full": _sweep_preset(
        "estimate-full", "diagonalize-A", _grid(0.30, 31), _grid(0.15, 16)
    ),
    "batch-reactor-sweep-origin": _sweep_preset(
        "origin-simple", "diagonalize-Acl", _grid(0.072, 19)
    ),
}


def preset_config(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return normalize(PRESETS[name])
