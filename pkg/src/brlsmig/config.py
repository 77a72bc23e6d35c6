"""Run configuration files: UTF-8 ``key = value`` lines, ``#`` comments.

Keys mirror :class:`brlsmig.synth.ExperimentSpec` plus output options.
Unknown keys are rejected (typo safety) and a handful of keys carry no
default and must be present.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dataclass_fields
from pathlib import Path

from .synth import ExperimentSpec

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Malformed configuration: bad syntax, unknown or missing keys."""


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_tuple(s: str) -> tuple:
    s = s.strip()
    return tuple(int(p) for p in s.split(",")) if s else ()


def _parse_float_tuple(s: str) -> tuple:
    s = s.strip()
    return tuple(float(p) for p in s.split(",")) if s else ()


# config key -> (ExperimentSpec field or None, parser)
_SPEC_KEYS = {
    "model_kind": ("model_kind", str),
    "nz": ("nz", int),
    "nx": ("nx", int),
    "dz": ("dz", float),
    "dx": ("dx", float),
    "v0": ("v0", float),
    "layer_interfaces": ("layer_interfaces", _parse_int_tuple),
    "layer_velocities": ("layer_velocities", _parse_float_tuple),
    "lens_amplitude": ("lens_amplitude", float),
    "lens_center_z": ("lens_center_z", int),
    "lens_center_x": ("lens_center_x", int),
    "lens_radius": ("lens_radius", float),
    "velocity_file": ("velocity_file", str),
    "n_shots": ("n_shots", int),
    "shot_start": ("shot_start", int),
    "shot_interval": ("shot_interval", int),
    "receivers_per_shot": ("receivers_per_shot", int),
    "receiver_spacing": ("receiver_spacing", int),
    "receiver_near_offset": ("receiver_near_offset", int),
    "receiver_side": ("receiver_side", str),
    "f_dom": ("f_dom", float),
    "dt": ("dt", float),
    "n_t": ("n_t", int),
    "delay": ("delay", float),
    "f_min": ("f_min", float),
    "f_max": ("f_max", float),
    "noise_level": ("noise_level", float),
    "q": ("q", int),
    "k": ("k", int),
    "lambda": ("lam", float),
    "cg_tolerance": ("cg_tolerance", float),
    "cg_max_iterations": ("cg_max_iterations", int),
    "lsm_iterations": ("lsm_iterations", int),
    "seed": ("seed", int),
}

_EXTRA_KEYS = {
    "out_dir": str,
    "corrupt_adjoint": _parse_bool,  # dottest verification hook
    "identity_smoke": _parse_bool,  # dottest smoke mode: identity operators
}

REQUIRED_KEYS = ("model_kind", "nz", "nx", "dz", "dx", "n_shots", "n_t", "dt")


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: the experiment spec plus output options."""

    spec: ExperimentSpec
    out_dir: str = "."
    corrupt_adjoint: bool = False
    identity_smoke: bool = False


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    for key in raw:
        if key not in _SPEC_KEYS and key not in _EXTRA_KEYS:
            raise ConfigError(f"{source}: unknown key {key!r}")
    for key in REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"{source}: missing required key {key!r}")

    spec_kwargs = {}
    for key, value in raw.items():
        if key in _SPEC_KEYS:
            field_name, parser = _SPEC_KEYS[key]
            try:
                spec_kwargs[field_name] = parser(value)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key!r}: {exc}") from exc

    try:
        spec = ExperimentSpec(**spec_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    out_dir = raw.get("out_dir", ".")
    flags = {}
    for key in ("corrupt_adjoint", "identity_smoke"):
        if key in raw:
            try:
                flags[key] = _parse_bool(raw[key])
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key!r}: {exc}") from exc
    return RunConfig(spec=spec, out_dir=out_dir, **flags)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"), source=str(p))


def spec_field_names() -> tuple:
    return tuple(f.name for f in dataclass_fields(ExperimentSpec))
