"""JSON scenario configuration.

An empty document reproduces the reference pendulum run.  Unknown keys are
rejected so typos surface as config errors rather than silent defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import StepScheme
from .errors import ConfigError, RodmechError
from .models import Bond, BinderModel, PendulumModel, Wall, build_torus, pendulum_state
from .state import SystemState

PENDULUM_DEFAULTS = {"m": 1.0, "g": 1.0, "J": 1.0, "alpha0": None, "omega0": None}
TORUS_DEFAULTS = {
    "Np": 80,
    "Dt": 3.0,
    "m": 1.0,
    "J": 1.0,
    "Km": 10.0,
    "Ka": 200.0,
    "Ks": 200.0,
    "Kpp": 2100.0,
    "Kpw": 2100.0,
    "v0": 1.0,
    "wall": True,
    "shear_mode": "invariant",
    "gap_fraction": 0.05,
}
RUN_DEFAULTS = {
    "pendulum": {"scheme": "vti2", "h": 1e-3, "t_end": 100.0},
    "torus": {"scheme": "vti2", "h": 1e-3, "t_end": 35.0},
    "custom": {"scheme": "vti2", "h": 1e-3, "t_end": 1.0},
}
TOP_KEYS = {"scenario", "scheme", "h", "t_end", "sample_every", "seed", "pendulum", "torus", "custom"}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "pendulum"
    scheme: StepScheme = StepScheme.VTI2
    h: float = 1e-3
    t_end: float = 100.0
    sample_every: int = 10
    seed: int = 0
    params: dict = field(default_factory=dict)

    def make(self):
        """Fresh ``(state, model)`` for this configuration."""
        return build_scenario(self.scenario, self.params)


def _merge(defaults, given, where):
    given = given or {}
    if not isinstance(given, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(given) - set(defaults)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")
    out = dict(defaults)
    out.update(given)
    return out


def _real(d, key, positive=False, nonneg=False):
    try:
        val = float(d[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number") from None
    if not np.isfinite(val) or (positive and val <= 0) or (nonneg and val < 0):
        raise ConfigError(f"{key} out of range: {d[key]!r}")
    return val


def parse_config(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(doc) - TOP_KEYS
    if extra:
        raise ConfigError(f"unknown keys: {sorted(extra)}")
    scenario = doc.get("scenario", "pendulum")
    if scenario not in RUN_DEFAULTS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    run = dict(RUN_DEFAULTS[scenario])
    run.update({k: doc[k] for k in ("scheme", "h", "t_end") if k in doc})
    try:
        scheme = StepScheme(run["scheme"])
    except ValueError:
        raise ConfigError(f"unknown scheme {run['scheme']!r}") from None
    h = _real(run, "h", positive=True)
    t_end = _real(run, "t_end", nonneg=True)
    sample_every = doc.get("sample_every", 10)
    seed = doc.get("seed", 0)
    for name, val, lo in (("sample_every", sample_every, 1), ("seed", seed, 0)):
        if isinstance(val, bool) or not isinstance(val, int) or val < lo:
            raise ConfigError(f"{name} must be an integer >= {lo}")

    if scenario == "pendulum":
        params = _merge(PENDULUM_DEFAULTS, doc.get("pendulum"), "pendulum")
    elif scenario == "torus":
        params = _merge(TORUS_DEFAULTS, doc.get("torus"), "torus")
    else:
        params = doc.get("custom")
        if not isinstance(params, dict):
            raise ConfigError("custom scenario needs a 'custom' object")
    cfg = ScenarioConfig(scenario, scheme, h, t_end, sample_every, seed, params)
    try:
        cfg.make()
    except ConfigError:
        raise
    except (RodmechError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {scenario} parameters: {exc}") from exc
    return cfg


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(doc)


# ------------------------------------------------------------- scenarios


def _vec(v, name):
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ConfigError(f"{name} must be a 3-vector")
    return a


def build_pendulum(p):
    alpha0 = None if p["alpha0"] is None else _vec(p["alpha0"], "alpha0")
    omega0 = None if p["omega0"] is None else _vec(p["omega0"], "omega0")
    s = pendulum_state(alpha0, omega0, m=p["m"], J=p["J"])
    return s, PendulumModel(m=float(p["m"]), g=float(p["g"]))


def _wall(desc, Kpw=2100.0):
    if desc is None or desc is False:
        return None
    if desc is True:
        return Wall(Kpw=Kpw)
    desc = _merge({"n": (1.0, 0.0, 0.0), "offset": 0.0, "Kpw": Kpw}, desc, "wall")
    return Wall(tuple(_vec(desc["n"], "wall.n")), float(desc["offset"]), float(desc["Kpw"]))


def build_torus_scenario(p):
    p = dict(p)
    wall = _wall(p.pop("wall"), float(p.pop("Kpw")))
    if p["shear_mode"] not in ("paper", "invariant"):
        raise ConfigError(f"unknown shear_mode {p['shear_mode']!r}")
    return build_torus(Np=int(p.pop("Np")), wall=wall, **p)


def build_custom(p):
    """Explicit bodies plus a ``pendulum`` or ``binder`` model description."""
    p = _merge({"bodies": None, "model": None}, p, "custom")
    bodies = p["bodies"]
    if not bodies:
        raise ConfigError("custom scenario needs a non-empty 'bodies' list")
    keys = {"x": None, "v": (0, 0, 0), "alpha": (0, 0, 0), "Omega": (0, 0, 0), "m": 1.0, "J": 1.0, "D": 0.0}
    rows = [_merge(keys, b, f"bodies[{k}]") for k, b in enumerate(bodies)]
    if any(r["x"] is None for r in rows):
        raise ConfigError("every body needs a position 'x'")
    s = SystemState(
        t=0.0,
        **{f: np.array([_vec(r[f], f) for r in rows]) for f in ("x", "v", "alpha", "Omega")},
        **{f: np.array([float(r[f]) for r in rows]) for f in ("m", "J", "D")},
    )
    model = p["model"] or {"type": "binder"}
    kind = model.get("type")
    if kind == "pendulum":
        m = _merge({"type": None, "m": 1.0, "g": 1.0, "rho0": (0, 0, 1), "e3": (0, 0, 1)}, model, "model")
        return s, PendulumModel(float(m["m"]), float(m["g"]), tuple(_vec(m["rho0"], "rho0")), tuple(_vec(m["e3"], "e3")))
    if kind == "binder":
        m = _merge({"type": None, "bonds": [], "Kpp": 2100.0, "wall": None, "shear_mode": "invariant"}, model, "model")
        bonds = []
        for b in m["bonds"]:
            b = _merge({"i": None, "j": None, "d0": None, "Km": 10.0, "Ka": 200.0, "Ks": 200.0}, b, "bond")
            i, j = int(b["i"]), int(b["j"])
            if not (0 <= i < s.n and 0 <= j < s.n):
                raise ConfigError(f"bond ({i}, {j}) refers to a missing body")
            d0 = s.x[i] - s.x[j] if b["d0"] is None else _vec(b["d0"], "d0")
            bonds.append(Bond(i, j, tuple(d0), float(b["Km"]), float(b["Ka"]), float(b["Ks"])))
        return s, BinderModel(tuple(bonds), Kpp=float(m["Kpp"]), wall=_wall(m["wall"]), shear_mode=m["shear_mode"])
    raise ConfigError(f"unknown model type {kind!r}")


def build_scenario(scenario, params):
    if scenario == "pendulum":
        return build_pendulum(params)
    if scenario == "torus":
        return build_torus_scenario(params)
    return build_custom(params)
