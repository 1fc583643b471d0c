"""YAML scenario files: schema validation and conversion into model objects.

Schema (every section and key is optional unless stated)::

    radio:       pt_dbm, noise_figure_db, bandwidth_hz, freq_hz, eta, speed_of_light
    thresholds:  psi_db[6], delta_db[6][6], theta_db[6],
                 interference: all | intra_sf_only | none
    lorawan:     geometry: equal_width | explicit | planned
                 radius_m (equal_width), limits_m[6 or 7] (explicit)
                 n_nodes | densities[6] (nodes per m^2)
                 duty_cycle (scalar or [6]) | message_period_s
    external:    duty_cycle, radius_m, and n_nodes | alpha
    plan:        target, n_min | r_min_m, chi_m, epsilon
    sim:         grid ("min:max:step" or a list), trials, seed, gate,
                 fading: independent | shared

Unknown keys are rejected; every error names the offending field path.
"""
import copy
from dataclasses import dataclass
import math

import numpy as np
import yaml

from .errors import DomainError
from .model import (
    INTERFERENCE_MODES,
    N_RINGS,
    ExternalNetwork,
    NetworkGeometry,
    RadioParams,
    SpatialConfig,
    ThresholdSet,
    duty_from_period,
)
from .planner import PlanRequest
from .sim import FADING_MODES, TrialConfig

GEOMETRY_MODES = ("equal_width", "explicit", "planned")

SCHEMA = {
    "name": None,
    "description": None,
    "radio": {"pt_dbm", "noise_figure_db", "bandwidth_hz", "freq_hz", "eta", "speed_of_light"},
    "thresholds": {"psi_db", "delta_db", "theta_db", "interference"},
    "lorawan": {"geometry", "radius_m", "limits_m", "n_nodes", "densities",
                "duty_cycle", "message_period_s"},
    "external": {"n_nodes", "alpha", "duty_cycle", "radius_m"},
    "plan": {"target", "n_min", "r_min_m", "chi_m", "epsilon"},
    "sim": {"grid", "trials", "seed", "gate", "fading"},
}


class ConfigError(DomainError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _number(doc, section, key, default=None, positive=False, nonneg=False, integer=False):
    sect = doc.get(section) or {}
    if key not in sect:
        return default
    v = sect[key]
    path = f"{section}.{key}"
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if integer and (not float(v).is_integer()):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(path, f"must be finite, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(path, f"must be > 0, got {v!r}")
    if nonneg and not v >= 0:
        raise ConfigError(path, f"must be >= 0, got {v!r}")
    return int(v) if integer else float(v)


def _db_value(v, path):
    if isinstance(v, str) and v.strip().lower() in ("-inf", "-.inf", "off"):
        return -math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v) or v == math.inf:
        raise ConfigError(path, f"expected a dB value or '-inf', got {v!r}")
    return float(v)


def _vector(doc, section, key, n, db=False):
    sect = doc.get(section) or {}
    if key not in sect:
        return None
    v = sect[key]
    path = f"{section}.{key}"
    if not isinstance(v, list) or len(v) != n:
        raise ConfigError(path, f"expected a list of {n} values, got {v!r}")
    out = []
    for k, x in enumerate(v):
        if db:
            out.append(_db_value(x, f"{path}[{k}]"))
        elif isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(f"{path}[{k}]", f"expected a finite number, got {x!r}")
        else:
            out.append(float(x))
    return np.array(out)


def _choice(doc, section, key, options, default):
    v = (doc.get(section) or {}).get(key, default)
    if v not in options:
        raise ConfigError(f"{section}.{key}", f"expected one of {list(options)}, got {v!r}")
    return v


def parse_grid(spec, path="grid"):
    """``"min:max:step"`` (inclusive of max when it lands on the step) or a list."""
    if isinstance(spec, list):
        vals = []
        for k, x in enumerate(spec):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ConfigError(f"{path}[{k}]", f"expected a number, got {x!r}")
            vals.append(float(x))
        return np.array(vals)
    if not isinstance(spec, str):
        raise ConfigError(path, f"expected 'min:max:step' or a list, got {spec!r}")
    parts = spec.split(":")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(path, f"expected 'min:max:step', got {spec!r}") from None
    if not step > 0 or hi < lo:
        raise ConfigError(path, f"need step > 0 and max >= min, got {spec!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


@dataclass
class Scenario:
    raw: dict
    radio: RadioParams
    thresholds: ThresholdSet
    interference: str
    geometry_mode: str
    geometry: NetworkGeometry
    n_nodes: float
    densities: np.ndarray
    duty: np.ndarray
    message_period_s: float
    external: ExternalNetwork
    plan: dict
    sim: dict

    def spatial(self, geometry=None):
        geometry = geometry or self.geometry
        if self.densities is not None:
            return SpatialConfig(self.duty, self.densities)
        if self.n_nodes is None:
            raise ConfigError("lorawan", "give n_nodes or densities")
        return SpatialConfig.uniform(self.n_nodes, geometry, self.duty)

    def plan_request(self, algorithm=None):
        p = self.plan
        if p.get("target") is None:
            raise ConfigError("plan.target", "required for planning")
        if algorithm == "range" and p.get("n_min") is None:
            raise ConfigError("plan.n_min", "required for range maximisation")
        if algorithm == "nodes" and p.get("r_min_m") is None:
            raise ConfigError("plan.r_min_m", "required for node maximisation")
        if self.message_period_s is None and self.duty is None:
            raise ConfigError("lorawan", "give duty_cycle or message_period_s")
        kw = dict(target=p["target"], n_min=p.get("n_min"), r_min=p.get("r_min_m"),
                  alpha_z=self.external.alpha, external_duty=self.external.duty,
                  chi=p.get("chi_m", 1.0), epsilon=p.get("epsilon", 1e-9))
        if self.message_period_s is not None:
            kw["message_period_s"] = self.message_period_s
        else:
            kw["duty"] = tuple(self.duty)
        try:
            return PlanRequest(**kw)
        except DomainError as exc:
            raise ConfigError("plan", str(exc)) from None

    def default_algorithm(self):
        if self.plan.get("n_min") is not None:
            return "range"
        if self.plan.get("r_min_m") is not None:
            return "nodes"
        raise ConfigError("plan", "give n_min (range) or r_min_m (nodes)")

    def trial_config(self, distances, geometry=None, spatial=None, trials=None, seed=None):
        geometry = geometry or self.geometry
        spatial = spatial or self.spatial(geometry)
        return TrialConfig(geometry, spatial, self.external, self.radio, self.thresholds,
                           distances, trials=trials or self.sim["trials"],
                           seed=self.sim["seed"] if seed is None else seed,
                           fading=self.sim["fading"])


def _check_keys(doc):
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "scenario must be a mapping")
    for key, val in doc.items():
        if key not in SCHEMA:
            raise ConfigError(key, f"unknown section; expected one of {sorted(SCHEMA)}")
        allowed = SCHEMA[key]
        if allowed is None:
            continue
        if val is None:
            continue
        if not isinstance(val, dict):
            raise ConfigError(key, "section must be a mapping")
        for sub in val:
            if sub not in allowed:
                raise ConfigError(f"{key}.{sub}", f"unknown key; expected one of {sorted(allowed)}")


def _radio(doc):
    kw = {}
    for key in SCHEMA["radio"]:
        v = _number(doc, "radio", key, positive=key not in ("pt_dbm", "noise_figure_db"))
        if v is not None:
            kw[key] = v
    try:
        return RadioParams(**kw)
    except DomainError as exc:
        raise ConfigError("radio", str(exc)) from None


def _thresholds(doc):
    kw = {}
    psi = _vector(doc, "thresholds", "psi_db", N_RINGS)
    if psi is not None:
        kw["psi_db"] = psi
    theta = _vector(doc, "thresholds", "theta_db", N_RINGS, db=True)
    if theta is not None:
        kw["theta_db"] = theta
    rows = (doc.get("thresholds") or {}).get("delta_db")
    if rows is not None:
        if not isinstance(rows, list) or len(rows) != N_RINGS:
            raise ConfigError("thresholds.delta_db", f"expected {N_RINGS} rows")
        mat = []
        for k, row in enumerate(rows):
            path = f"thresholds.delta_db[{k}]"
            if not isinstance(row, list) or len(row) != N_RINGS:
                raise ConfigError(path, f"expected {N_RINGS} values")
            mat.append([_db_value(x, f"{path}[{m}]") for m, x in enumerate(row)])
        kw["delta_db"] = np.array(mat)
    mode = _choice(doc, "thresholds", "interference", INTERFERENCE_MODES, "all")
    return ThresholdSet(**kw).with_mode(mode), mode


def _lorawan(doc):
    sect = doc.get("lorawan") or {}
    mode = _choice(doc, "lorawan", "geometry", GEOMETRY_MODES, "equal_width")
    geometry = None
    if mode == "equal_width":
        r = _number(doc, "lorawan", "radius_m", positive=True)
        if r is not None:
            geometry = NetworkGeometry.equal_width(r)
    elif mode == "explicit":
        lim = sect.get("limits_m")
        if not isinstance(lim, list) or len(lim) not in (N_RINGS, N_RINGS + 1):
            raise ConfigError("lorawan.limits_m", f"explicit geometry needs {N_RINGS} or {N_RINGS + 1} limits")
        vals = _vector(doc, "lorawan", "limits_m", len(lim))
        try:
            geometry = NetworkGeometry(vals)
        except DomainError as exc:
            raise ConfigError("lorawan.limits_m", str(exc)) from None
    n_nodes = _number(doc, "lorawan", "n_nodes", nonneg=True)
    dens = _vector(doc, "lorawan", "densities", N_RINGS)
    if n_nodes is not None and dens is not None:
        raise ConfigError("lorawan", "give n_nodes or densities, not both")
    if dens is not None and (dens < 0).any():
        raise ConfigError("lorawan.densities", "must be nonnegative")
    period = _number(doc, "lorawan", "message_period_s", positive=True)
    duty = None
    if "duty_cycle" in sect:
        if period is not None:
            raise ConfigError("lorawan", "give duty_cycle or message_period_s, not both")
        v = sect["duty_cycle"]
        if isinstance(v, list):
            duty = _vector(doc, "lorawan", "duty_cycle", N_RINGS)
        else:
            duty = np.full(N_RINGS, _number(doc, "lorawan", "duty_cycle", positive=True))
        if ((duty <= 0) | (duty > 1)).any():
            raise ConfigError("lorawan.duty_cycle", "duty cycles must lie in (0, 1]")
    elif period is not None:
        try:
            duty = duty_from_period(period)
        except DomainError as exc:
            raise ConfigError("lorawan.message_period_s", str(exc)) from None
    return mode, geometry, n_nodes, dens, duty, period


def _external(doc):
    p = _number(doc, "external", "duty_cycle", default=1e-3, positive=True)
    if p > 1:
        raise ConfigError("external.duty_cycle", "must lie in (0, 1]")
    r = _number(doc, "external", "radius_m", default=4000.0, positive=True)
    n = _number(doc, "external", "n_nodes", nonneg=True)
    alpha = _number(doc, "external", "alpha", nonneg=True)
    if n is not None and alpha is not None:
        raise ConfigError("external", "give n_nodes or alpha, not both")
    if alpha is not None:
        return ExternalNetwork.from_intensity(alpha, r, p)
    if n is not None:
        return ExternalNetwork.from_count(n, p, r)
    return ExternalNetwork(p, r, 0.0)


def _plan(doc):
    out = {}
    t = _number(doc, "plan", "target")
    if t is not None and not 0 < t < 1:
        raise ConfigError("plan.target", f"must lie in (0, 1), got {t!r}")
    out["target"] = t
    out["n_min"] = _number(doc, "plan", "n_min", nonneg=True)
    out["r_min_m"] = _number(doc, "plan", "r_min_m", positive=True)
    out["chi_m"] = _number(doc, "plan", "chi_m", default=1.0, positive=True)
    out["epsilon"] = _number(doc, "plan", "epsilon", default=1e-9, positive=True)
    return out


def _sim(doc):
    sect = doc.get("sim") or {}
    out = {
        "trials": _number(doc, "sim", "trials", default=100_000, positive=True, integer=True),
        "seed": _number(doc, "sim", "seed", default=0, nonneg=True, integer=True),
        "gate": _number(doc, "sim", "gate", default=0.01, positive=True),
        "fading": _choice(doc, "sim", "fading", FADING_MODES, "independent"),
        "grid": parse_grid(sect["grid"], "sim.grid") if "grid" in sect else None,
    }
    return out


def from_dict(doc):
    """Validate a parsed scenario document and build a :class:`Scenario`."""
    doc = {} if doc is None else doc
    _check_keys(doc)
    radio = _radio(doc)
    thresholds, mode = _thresholds(doc)
    gmode, geometry, n_nodes, dens, duty, period = _lorawan(doc)
    return Scenario(copy.deepcopy(doc), radio, thresholds, mode, gmode, geometry, n_nodes, dens,
                    duty, period, _external(doc), _plan(doc), _sim(doc))


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read scenario: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"invalid YAML: {exc}") from None
    return from_dict(doc)


def with_field(doc, dotted, value):
    """Copy of ``doc`` with ``section.key`` set to ``value`` (key must be in the schema)."""
    parts = dotted.split(".")
    if len(parts) != 2 or parts[0] not in SCHEMA or SCHEMA[parts[0]] is None \
            or parts[1] not in SCHEMA[parts[0]]:
        raise ConfigError(dotted, "unknown sweep axis; use section.key from the scenario schema")
    out = copy.deepcopy(doc)
    section = out.get(parts[0]) or {}
    section[parts[1]] = value
    out[parts[0]] = section
    return out
