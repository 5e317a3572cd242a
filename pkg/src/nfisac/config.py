"""Scenario configuration: YAML in, validated dataclasses out.

Powers are written in dBm in the file and converted to watts on parse. The
normalized dump written by :func:`dump_config` re-parses to an identical
config; its ``derived`` block is informational and ignored on parse.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .metrics import dbm_to_watts

log = logging.getLogger(__name__)

SCHEMES = ("proposed", "nccs", "ffbf")
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ArraySpec:
    rows: int = 10
    cols: int = 10
    spacing_wavelengths: float = 0.5
    center: tuple = (0.0, 0.0, 0.0)
    normal: tuple = (0.0, 0.0, 1.0)
    in_plane_axis: tuple = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class UserSpec:
    position: tuple
    r_min: float | None = 17.0
    noise_dbm: float | None = None


@dataclass(frozen=True)
class TargetSpec:
    position: tuple
    rcs: complex = 1.0 + 0.0j


@dataclass(frozen=True)
class GridSpec:
    y_min: float = -0.5
    y_max: float = 0.7
    z_min: float = 0.05
    z_max: float = 0.7
    step: float = 0.01
    x: float = 0.0

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        ny = int(np.floor((self.y_max - self.y_min) / self.step + 1e-9)) + 1
        nz = int(np.floor((self.z_max - self.z_min) / self.step + 1e-9)) + 1
        return self.y_min + self.step * np.arange(ny), self.z_min + self.step * np.arange(nz)


@dataclass(frozen=True)
class FfbfSpec:
    r_min: float = 0.95
    removed_pairs: tuple = ((1, 2),)


@dataclass(frozen=True)
class ScenarioConfig:
    users: tuple
    targets: tuple
    carrier_frequency_hz: float = 30e9
    boresight_exponent: float = 2.0
    tx_power_dbm: float = 23.0
    noise_dbm: float = -80.0
    rx_noise_dbm: float | None = None
    block_length: int = 1000
    tx_array: ArraySpec = ArraySpec()
    rx_array: ArraySpec = ArraySpec(center=(0.0, 0.06, 0.0))
    aperture_override_m: float | None = None
    epsilon: float = 0.1
    weight_mode: str = "auto"
    explicit_target_weights: tuple | None = None
    explicit_pair_weights: tuple | None = None
    scheme: str = "proposed"
    ffbf: FfbfSpec = FfbfSpec()
    grid: GridSpec = GridSpec()
    seed: int = 2025
    solver_tolerance: float = 1e-9
    reduce: bool = True
    diagonal_loading: float = 0.0
    capon_transmit_weighting: str = "inverse"
    warnings: tuple = field(default=(), compare=False)

    @property
    def p_max_w(self) -> float:
        return dbm_to_watts(self.tx_power_dbm)

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def rx_noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm if self.rx_noise_dbm is None else self.rx_noise_dbm)

    def user_noise_w(self) -> np.ndarray:
        return np.array([dbm_to_watts(self.noise_dbm if u.noise_dbm is None else u.noise_dbm)
                         for u in self.users])

    def replace(self, **changes) -> "ScenarioConfig":
        from dataclasses import replace
        return replace(self, **changes)


# ---------------------------------------------------------------------- parsing

def _vec3(value, name):
    try:
        arr = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected 3 numbers, got {value!r}") from None
    if len(arr) != 3 or not all(np.isfinite(arr)):
        raise ConfigError(name, f"expected 3 finite numbers, got {value!r}")
    return tuple(arr)


def _num(d, key, name, default, *, positive=False, nonneg=False, integer=False, allow_none=False):
    value = d.get(key, default)
    if value is None and allow_none:
        return None
    try:
        out = int(value) if integer else float(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {value!r}") from None
    if integer and float(value) != out:
        raise ConfigError(name, f"expected an integer, got {value!r}")
    if not np.isfinite(out):
        raise ConfigError(name, "must be finite")
    if positive and not out > 0:
        raise ConfigError(name, f"must be positive, got {out}")
    if nonneg and out < 0:
        raise ConfigError(name, f"must be non-negative, got {out}")
    return out


def _check_keys(d, allowed, name):
    if not isinstance(d, dict):
        raise ConfigError(name, f"expected a mapping, got {type(d).__name__}")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(name, f"unknown keys {sorted(unknown)}")


def _complex(value, name):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(name, "complex values are written as [real, imag]")
        return complex(float(value[0]), float(value[1]))
    try:
        return complex(float(value), 0.0)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number or [real, imag], got {value!r}") from None


def _array(d, name, defaults: ArraySpec) -> ArraySpec:
    d = d or {}
    _check_keys(d, ArraySpec.__dataclass_fields__, name)
    return ArraySpec(
        rows=_num(d, "rows", f"{name}.rows", defaults.rows, positive=True, integer=True),
        cols=_num(d, "cols", f"{name}.cols", defaults.cols, positive=True, integer=True),
        spacing_wavelengths=_num(d, "spacing_wavelengths", f"{name}.spacing_wavelengths",
                                 defaults.spacing_wavelengths, positive=True),
        center=_vec3(d.get("center", defaults.center), f"{name}.center"),
        normal=_vec3(d.get("normal", defaults.normal), f"{name}.normal"),
        in_plane_axis=_vec3(d.get("in_plane_axis", defaults.in_plane_axis), f"{name}.in_plane_axis"),
    )


_TOP_KEYS = {"schema_version", "carrier_frequency_hz", "boresight_exponent", "tx_power_dbm", "noise_dbm",
             "rx_noise_dbm", "block_length", "tx_array", "rx_array", "aperture_override_m", "users",
             "targets", "epsilon", "weights", "scheme", "ffbf", "grid", "seed", "solver", "capon",
             "derived"}


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Validate a raw mapping; raises :class:`ConfigError` naming the offending field."""
    _check_keys(raw, _TOP_KEYS, "<root>")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version}")

    users_raw = raw.get("users", [])
    if not isinstance(users_raw, list):
        raise ConfigError("users", "expected a list")
    users = []
    for i, u in enumerate(users_raw):
        _check_keys(u, {"position", "r_min", "noise_dbm"}, f"users[{i}]")
        if "position" not in u:
            raise ConfigError(f"users[{i}].position", "required")
        r_min = _num(u, "r_min", f"users[{i}].r_min", 17.0, nonneg=True, allow_none=True)
        users.append(UserSpec(position=_vec3(u["position"], f"users[{i}].position"),
                              r_min=r_min,
                              noise_dbm=_num(u, "noise_dbm", f"users[{i}].noise_dbm", None, allow_none=True)))

    targets_raw = raw.get("targets")
    if not isinstance(targets_raw, list) or not targets_raw:
        raise ConfigError("targets", "at least one target is required")
    targets = []
    for i, t in enumerate(targets_raw):
        _check_keys(t, {"position", "rcs"}, f"targets[{i}]")
        if "position" not in t:
            raise ConfigError(f"targets[{i}].position", "required")
        targets.append(TargetSpec(position=_vec3(t["position"], f"targets[{i}].position"),
                                  rcs=_complex(t.get("rcs", 1.0), f"targets[{i}].rcs")))

    weights = raw.get("weights", {}) or {}
    _check_keys(weights, {"mode", "target", "pair"}, "weights")
    mode = weights.get("mode", "auto")
    if mode not in ("auto", "explicit"):
        raise ConfigError("weights.mode", f"must be 'auto' or 'explicit', got {mode!r}")
    tw = pw = None
    if mode == "explicit":
        try:
            tw = tuple(float(x) for x in weights["target"])
            pw = tuple(tuple(float(x) for x in row) for row in weights["pair"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("weights", "explicit mode needs numeric 'target' list and 'pair' matrix") from None
        L = len(targets)
        if len(tw) != L or len(pw) != L or any(len(r) != L for r in pw):
            raise ConfigError("weights", f"explicit weights must match {L} targets")

    scheme = raw.get("scheme", "proposed")
    if scheme not in SCHEMES:
        raise ConfigError("scheme", f"must be one of {SCHEMES}, got {scheme!r}")

    ffbf_raw = raw.get("ffbf", {}) or {}
    _check_keys(ffbf_raw, {"r_min", "removed_pairs"}, "ffbf")
    pairs = ffbf_raw.get("removed_pairs", [[1, 2]] if len(targets) >= 2 else [])
    try:
        pairs = tuple(tuple(int(x) for x in p) for p in pairs)
    except (TypeError, ValueError):
        raise ConfigError("ffbf.removed_pairs", "expected a list of [l, l'] pairs (1-based)") from None
    for p in pairs:
        if len(p) != 2 or not all(1 <= x <= len(targets) for x in p) or p[0] == p[1]:
            raise ConfigError("ffbf.removed_pairs", f"invalid pair {list(p)}")
    ffbf = FfbfSpec(r_min=_num(ffbf_raw, "r_min", "ffbf.r_min", 0.95, positive=True), removed_pairs=pairs)

    g = raw.get("grid", {}) or {}
    _check_keys(g, GridSpec.__dataclass_fields__, "grid")
    d = GridSpec()
    grid = GridSpec(*(_num(g, k, f"grid.{k}", getattr(d, k)) for k in ("y_min", "y_max", "z_min", "z_max")),
                    step=_num(g, "step", "grid.step", d.step, positive=True),
                    x=_num(g, "x", "grid.x", d.x))
    if grid.y_max < grid.y_min or grid.z_max < grid.z_min:
        raise ConfigError("grid", "axis maxima must not be below minima")

    solver = raw.get("solver", {}) or {}
    _check_keys(solver, {"tolerance", "reduce"}, "solver")
    capon = raw.get("capon", {}) or {}
    _check_keys(capon, {"diagonal_loading", "transmit_weighting"}, "capon")
    weighting = capon.get("transmit_weighting", "inverse")
    if weighting not in ("inverse", "direct"):
        raise ConfigError("capon.transmit_weighting", "must be 'inverse' or 'direct'")

    seed = raw.get("seed", 2025)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed", f"expected an unsigned 64-bit integer, got {seed!r}")

    cfg = ScenarioConfig(
        users=tuple(users),
        targets=tuple(targets),
        carrier_frequency_hz=_num(raw, "carrier_frequency_hz", "carrier_frequency_hz", 30e9, positive=True),
        boresight_exponent=_num(raw, "boresight_exponent", "boresight_exponent", 2.0, nonneg=True),
        tx_power_dbm=_num(raw, "tx_power_dbm", "tx_power_dbm", 23.0),
        noise_dbm=_num(raw, "noise_dbm", "noise_dbm", -80.0),
        rx_noise_dbm=_num(raw, "rx_noise_dbm", "rx_noise_dbm", None, allow_none=True),
        block_length=_num(raw, "block_length", "block_length", 1000, positive=True, integer=True),
        tx_array=_array(raw.get("tx_array"), "tx_array", ArraySpec()),
        rx_array=_array(raw.get("rx_array"), "rx_array", ArraySpec(center=(0.0, 0.06, 0.0))),
        aperture_override_m=_num(raw, "aperture_override_m", "aperture_override_m", None,
                                 positive=True, allow_none=True),
        epsilon=_num(raw, "epsilon", "epsilon", 0.1, positive=True),
        weight_mode=mode,
        explicit_target_weights=tw,
        explicit_pair_weights=pw,
        scheme=scheme,
        ffbf=ffbf,
        grid=grid,
        seed=seed,
        solver_tolerance=_num(solver, "tolerance", "solver.tolerance", 1e-9, positive=True),
        reduce=bool(solver.get("reduce", True)),
        diagonal_loading=_num(capon, "diagonal_loading", "capon.diagonal_loading", 0.0, nonneg=True),
        capon_transmit_weighting=weighting,
    )
    return cfg.replace(warnings=tuple(_near_field_warnings(cfg)))


def _near_field_warnings(cfg: ScenarioConfig) -> list[str]:
    # deferred import: scenario depends on this module
    from .scenario import tx_geometry, rayleigh_limit
    out = []
    limit = rayleigh_limit(cfg)
    center = np.asarray(tx_geometry(cfg).center)
    for kind, items in (("user", cfg.users), ("target", cfg.targets)):
        for i, it in enumerate(items):
            r = float(np.linalg.norm(np.asarray(it.position) - center))
            if r > limit:
                msg = f"{kind} {i + 1} at range {r:.3f} m lies outside the Rayleigh distance {limit:.3f} m"
                log.warning(msg)
                out.append(msg)
    return out


def resolve_config_path(path: str | Path) -> Path:
    """Accept a file path or the name of a shipped config (e.g. ``paper_scenario``)."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix else p.name + ".yaml"
    shipped = resources.files("nfisac") / "configs" / name
    if shipped.is_file():
        return Path(str(shipped))
    raise ConfigError("config", f"file not found: {path}")


def parse_config(path: str | Path) -> ScenarioConfig:
    p = resolve_config_path(path)
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"invalid YAML: {exc}") from None
    if raw is None:
        raw = {}
    return config_from_dict(raw)


def load_shipped(name: str = "paper_scenario") -> ScenarioConfig:
    return parse_config(name)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    def arr(a: ArraySpec):
        d = asdict(a)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    out = {
        "schema_version": SCHEMA_VERSION,
        "carrier_frequency_hz": cfg.carrier_frequency_hz,
        "boresight_exponent": cfg.boresight_exponent,
        "tx_power_dbm": cfg.tx_power_dbm,
        "noise_dbm": cfg.noise_dbm,
        "rx_noise_dbm": cfg.rx_noise_dbm,
        "block_length": cfg.block_length,
        "tx_array": arr(cfg.tx_array),
        "rx_array": arr(cfg.rx_array),
        "aperture_override_m": cfg.aperture_override_m,
        "users": [{"position": list(u.position), "r_min": u.r_min, "noise_dbm": u.noise_dbm}
                  for u in cfg.users],
        "targets": [{"position": list(t.position), "rcs": [t.rcs.real, t.rcs.imag]} for t in cfg.targets],
        "epsilon": cfg.epsilon,
        "weights": {"mode": cfg.weight_mode} if cfg.weight_mode == "auto" else {
            "mode": "explicit", "target": list(cfg.explicit_target_weights),
            "pair": [list(r) for r in cfg.explicit_pair_weights]},
        "scheme": cfg.scheme,
        "ffbf": {"r_min": cfg.ffbf.r_min, "removed_pairs": [list(p) for p in cfg.ffbf.removed_pairs]},
        "grid": asdict(cfg.grid),
        "seed": cfg.seed,
        "solver": {"tolerance": cfg.solver_tolerance, "reduce": cfg.reduce},
        "capon": {"diagonal_loading": cfg.diagonal_loading,
                  "transmit_weighting": cfg.capon_transmit_weighting},
    }
    return out


def dump_config(cfg: ScenarioConfig, derived: bool = True) -> str:
    data = config_to_dict(cfg)
    if derived:
        from .scenario import rayleigh_limit, tx_geometry
        data["derived"] = {
            "p_max_w": cfg.p_max_w,
            "user_noise_w": cfg.user_noise_w().tolist(),
            "rx_noise_w": cfg.rx_noise_w,
            "wavelength_m": 299_792_458.0 / cfg.carrier_frequency_hz,
            "tx_aperture_geometry_m": tx_geometry(cfg).aperture,
            "rayleigh_distance_m": rayleigh_limit(cfg),
            "warnings": list(cfg.warnings),
        }
    return yaml.safe_dump(data, sort_keys=False)
