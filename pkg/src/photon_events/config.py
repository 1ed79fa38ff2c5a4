"""INI-style experiment files with units carried in the key names.

Lengths are written ``<name>_<unit>`` with unit one of ``nm``, ``um``,
``mm``, ``m`` or ``lambda`` (multiples of the wavelength); angles are
``<name>_deg`` or ``<name>_rad``.  Example::

    [source]
    kind = double_slit
    lambda_nm = 670
    a_lambda = 1
    d_lambda = 5

    [geometry]
    kind = circular
    X_mm = 0.05

Unknown keys, duplicate quantities and missing required keys raise
:class:`ConfigurationError` naming the key.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .core import ConfigurationError, InvalidArgument
from .detectors import ClickVariant, DetectorModel, DlmVariant
from .experiments import DetectorLayout, ExperimentConfig, SweepSpec
from .optics import GeometrySpec
from .sources import SourceSpec

SEED_ENV = "PHOTON_EVENTS_SEED"

LENGTH_UNITS = {"nm": 1e-9, "um": 1e-6, "mm": 1e-3, "m": 1.0}
ANGLE_UNITS = {"deg": math.pi / 180.0, "rad": 1.0}

# section -> key -> kind; "length"/"angle" keys take a unit suffix,
# "position" is a length on flat screens and an angle on angular ones
SCHEMA = {
    "source": {
        "kind": "str", "lambda": "length", "a": "length", "d": "length",
        "sigma": "length", "beta_min": "angle", "beta_max": "angle",
    },
    "geometry": {
        "kind": "str", "X": "length", "Xprime": "length", "alpha": "angle",
        "n_refr": "float", "strip": "angle",
    },
    "detector": {"count": "int", "low": "position", "high": "position"},
    "model": {
        "dlm": "str", "click": "str", "gamma": "float", "kappa": "float",
        "w0": "float", "nu": "float", "z0": "float", "p0_x": "float", "p0_y": "float",
    },
    "run": {
        "seed": "int", "emitted": "int", "received_per_detector": "float",
        "trace": "int", "event_cap": "int", "oracle_samples": "int",
        "screens": "int", "events": "int", "streams": "list", "variants": "list",
    },
    "sweep": {
        "delta": "angle", "n_total": "int", "n_sweeps": "intlist",
        "path_low": "angle", "path_high": "angle",
    },
}

REQUIRED = {
    "source": ("kind", "lambda"),
    "geometry": ("kind", "X"),
    "detector": ("count", "low", "high"),
    "sweep": ("delta", "n_total", "n_sweeps"),
}


def _parse_number(raw: str, key: str, kind: str):
    try:
        if kind == "int":
            return int(raw, 0) if raw.lower().startswith("0x") else int(raw)
        if kind == "intlist":
            return [int(tok) for tok in raw.replace(",", " ").split()]
        if kind == "list":
            return raw.replace(",", " ").split()
        if kind == "str":
            return raw.strip()
        return float(raw)
    except ValueError:
        raise ConfigurationError(f"cannot parse {key} = {raw!r} as {kind}", key) from None


def _split_key(section: str, key: str) -> tuple[str, str | None]:
    table = SCHEMA[section]
    if key in table:
        if table[key] in ("length", "angle", "position"):
            raise ConfigurationError(f"[{section}] {key} needs a unit suffix", key)
        return key, None
    base, _, unit = key.rpartition("_")
    if base in table and table[base] in ("length", "angle", "position"):
        allowed = {
            "length": set(LENGTH_UNITS) | {"lambda"},
            "angle": set(ANGLE_UNITS),
            "position": set(LENGTH_UNITS) | {"lambda"} | set(ANGLE_UNITS),
        }[table[base]]
        if unit in allowed:
            return base, unit
    raise ConfigurationError(f"unknown key [{section}] {key}", key)


@dataclass
class ParsedConfig:
    """Section values in SI units (meters, radians) keyed by base name."""

    values: dict[str, dict[str, object]] = field(default_factory=dict)
    keys: dict[str, dict[str, str]] = field(default_factory=dict)
    path: str = ""

    def has(self, section: str) -> bool:
        return section in self.values

    def get(self, section: str, name: str, default=None):
        return self.values.get(section, {}).get(name, default)

    def require(self, section: str, name: str):
        if section not in self.values or name not in self.values[section]:
            key = name
            if SCHEMA.get(section, {}).get(name) in ("length", "angle", "position"):
                key = f"{name}_<unit>"
            raise ConfigurationError(f"missing required key [{section}] {key}", key)
        return self.values[section][name]

    def resolved(self) -> dict:
        """Plain-data view in SI units, for the JSON sidecar."""
        return {
            s: {k: v for k, v in sorted(vals.items()) if k != "_units"}
            for s, vals in sorted(self.values.items())
        }


def parse_text(text: str, path: str = "<string>") -> ParsedConfig:
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text, source=path)
    except configparser.DuplicateOptionError as exc:
        raise ConfigurationError(f"duplicate key [{exc.section}] {exc.option}", exc.option) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigurationError(f"duplicate section [{exc.section}]", exc.section) from None
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from None

    cfg = ParsedConfig(path=path)
    raw_units: dict[str, dict[str, tuple[float, str]]] = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown section [{section}]", section)
        cfg.values[section] = {}
        cfg.keys[section] = {}
        raw_units[section] = {}
        for key, raw in cp.items(section):
            base, unit = _split_key(section, key)
            if base in cfg.keys[section]:
                raise ConfigurationError(
                    f"[{section}] {key} repeats {cfg.keys[section][base]}", key
                )
            cfg.keys[section][base] = key
            if unit is None:
                cfg.values[section][base] = _parse_number(raw, key, SCHEMA[section][base])
            else:
                raw_units[section][base] = (_parse_number(raw, key, "float"), unit)

    for section in ("source",):
        if section in raw_units and "lambda" in raw_units[section]:
            val, unit = raw_units[section]["lambda"]
            if unit == "lambda":
                raise ConfigurationError("the wavelength cannot be given in wavelengths", "lambda_lambda")
            cfg.values[section]["lambda"] = val * LENGTH_UNITS[unit]
    wavelength = cfg.get("source", "lambda")
    for section, entries in raw_units.items():
        for base, (val, unit) in entries.items():
            if section == "source" and base == "lambda":
                continue
            key = cfg.keys[section][base]
            if unit == "lambda":
                if wavelength is None:
                    raise ConfigurationError(f"{key} needs [source] lambda_<unit>", "lambda_<unit>")
                cfg.values[section][base] = val * wavelength
            elif unit in LENGTH_UNITS:
                cfg.values[section][base] = val * LENGTH_UNITS[unit]
            else:
                cfg.values[section][base] = val * ANGLE_UNITS[unit]
            cfg.values[section].setdefault("_units", {})[base] = unit

    for section, names in REQUIRED.items():
        if section in cfg.values:
            for name in names:
                cfg.require(section, name)
    return cfg


def preset_path(name: str) -> Path:
    """Location of a shipped preset, e.g. ``fig6a.cfg``."""
    ref = resources.files("photon_events") / "presets" / name
    return Path(str(ref))


def resolve_path(path: str | os.PathLike) -> Path:
    """Use ``path`` as given, falling back to the shipped presets for ``presets/<name>``."""
    p = Path(path)
    if p.exists():
        return p
    if p.parent.name == "presets" or len(p.parts) == 1:
        candidate = preset_path(p.name)
        if candidate.exists():
            return candidate
    raise ConfigurationError(f"config file not found: {path}", str(path))


def load(path: str | os.PathLike) -> ParsedConfig:
    p = resolve_path(path)
    return parse_text(p.read_text(encoding="utf-8"), str(path))


def seed_from(cfg: ParsedConfig, override: int | None = None) -> int:
    """CLI override, then the config file, then ``PHOTON_EVENTS_SEED``, then 0."""
    if override is not None:
        return int(override)
    seed = cfg.get("run", "seed")
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise ConfigurationError(f"{SEED_ENV}={env!r} is not an integer", SEED_ENV) from None
    return 0


def _wrap(section: str, build):
    try:
        return build()
    except InvalidArgument as exc:
        raise ConfigurationError(f"[{section}] {exc}", section) from None
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"[{section}] {exc}", "kind") from None


def build_model(cfg: ParsedConfig) -> DetectorModel:
    g = cfg.get
    dlm = _wrap("model", lambda: DlmVariant(
        kind=cfg.require("model", "dlm"),
        gamma=g("model", "gamma", 0.999),
        kappa=g("model", "kappa", 0.9),
        w0=g("model", "w0", 0.9),
        p0=(g("model", "p0_x", 0.0), g("model", "p0_y", 0.0)),
    ))
    click = _wrap("model", lambda: ClickVariant(
        kind=cfg.require("model", "click"),
        nu=g("model", "nu", 0.99),
        z0=g("model", "z0", 0.0),
    ))
    return DetectorModel(dlm, click)


def build_experiment(cfg: ParsedConfig, seed: int | None = None) -> list[ExperimentConfig]:
    """One config per requested sweep rate (a single one without ``[sweep]``)."""
    for section in ("source", "geometry", "detector", "model"):
        if not cfg.has(section):
            raise ConfigurationError(f"missing section [{section}]", section)
    g = cfg.get
    lo_b, hi_b = g("source", "beta_min"), g("source", "beta_max")
    if (lo_b is None) != (hi_b is None):
        raise ConfigurationError("give both beta_min and beta_max", "beta_max_deg" if hi_b is None else "beta_min_deg")
    source = _wrap("source", lambda: SourceSpec(
        kind=cfg.require("source", "kind"),
        a=g("source", "a", 0.0),
        d=g("source", "d", 0.0),
        sigma=g("source", "sigma", 0.0),
        beta_range=None if lo_b is None else (lo_b, hi_b),
    ))
    geo_kwargs = dict(
        kind=cfg.require("geometry", "kind"),
        X=cfg.require("geometry", "X"),
        Xprime=g("geometry", "Xprime", 0.0),
        alpha=g("geometry", "alpha", 0.0),
        n_refr=g("geometry", "n_refr", 1.0),
    )
    if g("geometry", "strip") is not None:
        geo_kwargs["strip"] = g("geometry", "strip")
    geometry = _wrap("geometry", lambda: GeometrySpec(**geo_kwargs))

    units = cfg.values["detector"].get("_units", {})
    for name in ("low", "high"):
        unit = units.get(name)
        is_angle = unit in ANGLE_UNITS
        if is_angle != geometry.kind.angular:
            want = "an angle (_deg/_rad)" if geometry.kind.angular else "a length"
            raise ConfigurationError(f"[detector] {cfg.keys['detector'][name]} must be {want}", cfg.keys["detector"][name])
    layout = DetectorLayout(
        int(cfg.require("detector", "count")),
        float(cfg.require("detector", "low")),
        float(cfg.require("detector", "high")),
    )
    base = ExperimentConfig(
        source=source,
        geometry=geometry,
        model=build_model(cfg),
        layout=layout,
        wavelength=cfg.require("source", "lambda"),
        seed=seed_from(cfg, seed),
        emitted=g("run", "emitted"),
        received_per_detector=g("run", "received_per_detector"),
        trace=g("run", "trace", 0),
        event_cap=g("run", "event_cap", 10 ** 8),
        oracle_samples=g("run", "oracle_samples", 10 ** 7),
        name=Path(cfg.path).stem,
    )
    if not cfg.has("sweep"):
        base.validate()
        return [base]
    path = (g("sweep", "path_low", -0.5 * math.pi), g("sweep", "path_high", 0.5 * math.pi))
    out = []
    for n_sweeps in cfg.require("sweep", "n_sweeps"):
        spec = SweepSpec(cfg.require("sweep", "delta"), cfg.require("sweep", "n_total"), n_sweeps, path)
        run = replace(base, sweep=spec)
        run.validate()
        out.append(run)
    return out
