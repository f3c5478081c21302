"""Key-value configuration files for the CLI and service.

Format: one ``key = value`` per line, '#' comments, blank lines ignored.
Keys use the dataclass field names of RigConfig (rig.*), SourceParams
(source.*) or bare names that apply to both lookups.  Values are parsed
as int, float, tuple of floats (comma separated) or string, in that
order of preference.
"""

from __future__ import annotations

import dataclasses
import os

from .errors import InvalidConfigError
from .photons import DetectorModel, SourceParams
from .rig import RigConfig

ENV_CONFIG_PATH = "PIGTAILSIM_CONFIG"


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(float(p) for p in text.split(",") if p.strip())
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def read_config_file(path) -> dict:
    values: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidConfigError(f"malformed config line: {raw!r}")
            key, rhs = (p.strip() for p in line.split("=", 1))
            values[key] = _parse_value(rhs)
    return values


def default_config_values() -> dict:
    """Values from the file named by PIGTAILSIM_CONFIG, if set."""
    path = os.environ.get(ENV_CONFIG_PATH)
    if path and os.path.exists(path):
        return read_config_file(path)
    return {}


def _pick(values: dict, prefix: str, cls) -> dict:
    fields = {f.name for f in dataclasses.fields(cls)}
    out = {}
    for key, val in values.items():
        name = key[len(prefix):] if key.startswith(prefix) else key
        if name in fields:
            out[name] = val
    return out


def rig_config_from(values: dict) -> RigConfig:
    return RigConfig(**_pick(values, "rig.", RigConfig))


def source_params_from(values: dict) -> SourceParams:
    kwargs = _pick(values, "source.", SourceParams)
    kwargs.pop("efficiency_chain", None)
    kwargs.pop("detector", None)
    det_kwargs = _pick(values, "detector.", DetectorModel)
    if det_kwargs:
        kwargs["detector"] = DetectorModel(**det_kwargs)
    return SourceParams(**kwargs)
