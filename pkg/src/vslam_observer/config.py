"""INI-style scenario configuration.

Four sections, all optional; omitted keys take the defaults of
:class:`~vslam_observer.simulator.ScenarioConfig`::

    [scenario]
    points = [[4.0, 4.0, 0.0], [-4.0, 4.0, 0.0]]   # JSON arrays for vectors
    bearings = [[0.0, 0.0, -1.0]]
    initial_position = [3.0, 0.0, 3.0]
    initial_rotation = [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
    angular_velocity = [0.0, 0.0, -0.5]
    linear_velocity = [1.5, 0.0, 0.0]
    epsilon_bound = 0.1
    seed = 0
    reference_mode = kind_matched       # or: literal
    camera_matrix = none                # or a JSON 3x3 array

    [gains]
    k_G = 2.0
    k_H = 0.5
    k = 1.0
    sigma0_scale = 25.0

    [integration]
    dt = 0.02
    duration = 40.0
    pe_window = 2.0

    [output]
    csv =                               # empty: no CSV unless --out is given
    summary = false

Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidState, ParseError, ValidationError
from .observer import GainConfig
from .simulator import REFERENCE_MODES, ScenarioConfig


@dataclass(frozen=True)
class OutputConfig:
    csv: str = ""
    summary: bool = False


def _vector(shape):
    def parse(text):
        arr = np.array(json.loads(text), dtype=float)
        if shape == "rows3":
            if arr.size == 0:
                return np.zeros((0, 3))
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise ValueError("expected a list of 3-vectors")
            return arr
        if arr.shape != shape:
            raise ValueError(f"expected shape {shape}, got {arr.shape}")
        return arr

    return parse


def _optional_matrix(text):
    if text.strip().lower() in ("", "none"):
        return None
    return _vector((3, 3))(text)


def _reference_mode(text):
    text = text.strip()
    if text not in REFERENCE_MODES:
        raise ValueError(f"must be one of {REFERENCE_MODES}")
    return text


def _boolean(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


SCHEMA = {
    "scenario": {
        "points": _vector("rows3"),
        "bearings": _vector("rows3"),
        "initial_position": _vector((3,)),
        "initial_rotation": _vector((3, 3)),
        "angular_velocity": _vector((3,)),
        "linear_velocity": _vector((3,)),
        "epsilon_bound": float,
        "seed": int,
        "reference_mode": _reference_mode,
        "camera_matrix": _optional_matrix,
    },
    "gains": {"k_G": float, "k_H": float, "k": float, "sigma0_scale": float},
    "integration": {"dt": float, "duration": float, "pe_window": float},
    "output": {"csv": str, "summary": _boolean},
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict[tuple[str, str], int]:
    where: dict[tuple[str, str], int] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            where[(section, "")] = lineno
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            where.setdefault((section, m.group(1)), lineno)
    return where


def parse_config_text(text: str, source: str = "<config>") -> tuple[ScenarioConfig, OutputConfig]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParseError(f"{source}: {exc}") from exc
    lines = _line_index(text)

    values: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ParseError(
                f"{source}:{lines.get((section, ''), '?')}: unknown section [{section}]"
            )
        values[section] = {}
        for key, raw in parser.items(section):
            where = f"{source}:{lines.get((section, key), '?')}"
            if key not in SCHEMA[section]:
                raise ParseError(f"{where}: unknown key '{key}' in [{section}]")
            try:
                values[section][key] = SCHEMA[section][key](raw)
            except (ValueError, TypeError) as exc:
                raise ParseError(f"{where}: bad value for [{section}] {key}: {exc}") from exc

    try:
        gains = GainConfig(**values.get("gains", {}))
    except InvalidState as exc:
        raise ValidationError(f"[gains]: {exc}") from exc
    kwargs = dict(values.get("scenario", {}))
    kwargs.update(values.get("integration", {}))
    scenario = ScenarioConfig(gains=gains, **kwargs)
    return scenario, OutputConfig(**values.get("output", {}))


def load_config(path) -> tuple[ScenarioConfig, OutputConfig]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_config_text(text, source=str(path))


def parse_config(path) -> ScenarioConfig:
    return load_config(path)[0]


def scenario_to_dict(cfg: ScenarioConfig, output: OutputConfig | None = None) -> dict:
    """Plain nested dict in the config-file layout (vectors as lists)."""
    output = output or OutputConfig()
    return {
        "scenario": {
            "points": cfg.points.tolist(),
            "bearings": cfg.bearings.tolist(),
            "initial_position": cfg.initial_position.tolist(),
            "initial_rotation": cfg.initial_rotation.tolist(),
            "angular_velocity": cfg.angular_velocity.tolist(),
            "linear_velocity": cfg.linear_velocity.tolist(),
            "epsilon_bound": cfg.epsilon_bound,
            "seed": cfg.seed,
            "reference_mode": cfg.reference_mode,
            "camera_matrix": None if cfg.camera_matrix is None else cfg.camera_matrix.tolist(),
        },
        "gains": {
            "k_G": cfg.gains.k_G,
            "k_H": cfg.gains.k_H,
            "k": cfg.gains.k,
            "sigma0_scale": cfg.gains.sigma0_scale,
        },
        "integration": {"dt": cfg.dt, "duration": cfg.duration, "pe_window": cfg.pe_window},
        "output": {"csv": output.csv, "summary": output.summary},
    }


def emit_config(cfg: ScenarioConfig | None = None, output: OutputConfig | None = None) -> str:
    """Serialise a configuration so that :func:`parse_config_text` reproduces it."""
    d = scenario_to_dict(cfg or ScenarioConfig(), output)
    out = []
    for section, items in d.items():
        out.append(f"[{section}]")
        for key, value in items.items():
            if value is None:
                text = "none"
            elif isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, list):
                text = json.dumps(value)
            else:
                text = repr(value) if isinstance(value, float) else str(value)
            out.append(f"{key} = {text}")
        out.append("")
    return "\n".join(out)
