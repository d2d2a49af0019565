"""JSON run configuration for ``evpipe build`` / ``evpipe bench``.

Example::

    {
      "manifest": "manifest.json",
      "geometry": {"width": 346, "height": 260},
      "encoder": {"kind": "frequency", "fps": 25},
      "sampler": {"window_seconds": 3, "clip_len": 16, "seed": 7},
      "augment": [{"op": "gamma", "gamma": 0.5}, {"op": "gaussian_blur", "sigma": 1.0}],
      "output_dir": "build"
    }

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .augment import AugmentSpec
from .dataset import SamplerConfig
from .encoders import EncodingParams
from .events import ParameterError, SensorGeometry


class ConfigError(ValueError):
    def __init__(self, problems: List[str]):
        self.problems = problems
        super().__init__("invalid run config:\n  " + "\n  ".join(problems))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometryModel(_Strict):
    width: int = Field(346, ge=1)
    height: int = Field(260, ge=1)


class EncoderModel(_Strict):
    kind: Literal["frequency", "sae"] = "frequency"
    fps: int = Field(25, ge=1)
    polarity: Optional[Literal[1, -1]] = None


class SamplerModel(_Strict):
    seed: int = Field(ge=0, lt=2**64)
    window_seconds: float = Field(3, gt=0)
    clip_len: int = Field(16, ge=1)
    stride_seconds: Optional[float] = Field(None, gt=0)


class RunConfigModel(_Strict):
    manifest: str
    output_dir: str
    sampler: SamplerModel
    geometry: GeometryModel = GeometryModel()
    encoder: EncoderModel = EncoderModel()
    augment: List[Dict[str, Any]] = []

    @field_validator("geometry", mode="before")
    @classmethod
    def _geometry_string(cls, v):
        if isinstance(v, str):
            try:
                w, h = v.lower().split("x")
                return {"width": int(w), "height": int(h)}
            except ValueError:
                raise ValueError("geometry string must look like 'WxH'") from None
        return v


@dataclass(frozen=True)
class RunConfig:
    manifest: Path
    output_dir: Path
    geometry: SensorGeometry
    encoder: EncodingParams
    sampler: SamplerConfig
    augment: tuple


def parse_run_config(raw: Any, base_dir: Path = Path(".")) -> RunConfig:
    try:
        m = RunConfigModel.model_validate(raw)
    except ValidationError as exc:
        problems = [f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}" for e in exc.errors()]
        raise ConfigError(problems) from None

    problems = []
    augments = []
    for i, obj in enumerate(m.augment):
        try:
            augments.append(AugmentSpec.from_json(obj))
        except (ParameterError, KeyError, TypeError) as exc:
            problems.append(f"augment.{i}: {exc}")
    geometry = SensorGeometry(m.geometry.width, m.geometry.height)
    try:
        encoder = EncodingParams(m.encoder.kind, m.encoder.fps, geometry, m.encoder.polarity)
        sampler = SamplerConfig(fps=m.encoder.fps, window_seconds=m.sampler.window_seconds,
                                clip_len=m.sampler.clip_len, seed=m.sampler.seed,
                                stride_seconds=m.sampler.stride_seconds)
    except ParameterError as exc:
        problems.append(f"sampler: {exc}")
    manifest = Path(base_dir) / m.manifest
    if not manifest.is_file():
        problems.append(f"manifest: file not found: {manifest}")
    if problems:
        raise ConfigError(problems)
    return RunConfig(manifest, Path(base_dir) / m.output_dir, geometry, encoder, sampler, tuple(augments))


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: not valid JSON ({exc})"]) from None
    return parse_run_config(raw, path.parent)
