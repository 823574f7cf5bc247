from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Any, Dict, List, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, StringConstraints, ValidationError, model_validator

from latticemaps.errors import ConfigError, LatticeMapsError
from latticemaps.exact import parse_rat
from latticemaps.models import Command, ModeKind, OutputFormat, QuadId, StripConfig
from latticemaps.strip import validate_config

RatText = Annotated[str, StringConstraints(pattern=r"^-?\d+(/\d+)?$")]

DEFAULT_SAMPLES = 100
DEFAULT_STEPS = 10


def _optional_int(name: str) -> Optional[int]:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else None


@dataclass
class EngineSettings:
    """Process-wide defaults taken from the environment."""

    rng_seed: Optional[int] = field(default_factory=lambda: _optional_int("LATTICEMAPS_RNG_SEED"))
    samples: int = field(default_factory=lambda: int(os.getenv("LATTICEMAPS_SAMPLES", str(DEFAULT_SAMPLES))))
    log_level: str = field(default_factory=lambda: os.getenv("LATTICEMAPS_LOG_LEVEL", "WARNING"))
    output_dir: Path = field(default_factory=lambda: Path(os.getenv("LATTICEMAPS_OUTPUT_DIR", "reports")))
    workers: int = field(default_factory=lambda: _optional_int("LATTICEMAPS_WORKERS") or os.cpu_count() or 1)

    @classmethod
    def from_env(cls) -> "EngineSettings":
        return cls()

    def ensure_dirs(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def resolve_output(self, out: str) -> Path:
        """Relative report paths live under ``output_dir``."""
        path = Path(out)
        if path.is_absolute():
            return path
        self.ensure_dirs()
        return self.output_dir / path


class ModeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    autonomous: Optional[RatText] = None
    general: Optional[List[RatText]] = None

    @model_validator(mode="after")
    def _exactly_one(self) -> "ModeModel":
        if (self.autonomous is None) == (self.general is None):
            raise ValueError("mode needs exactly one of 'autonomous' or 'general'")
        return self


class RunConfigModel(BaseModel):
    """Schema of the single JSON document every verb is driven by."""

    model_config = ConfigDict(extra="forbid")

    command: Command
    equation: Optional[QuadId] = None
    mu: Optional[RatText] = None
    mode: Optional[ModeModel] = None
    n: Optional[int] = Field(default=None, ge=2)
    boundary_minus: Optional[str] = None
    boundary_plus: Optional[str] = None
    initial: Optional[List[RatText]] = None
    steps: int = Field(default=DEFAULT_STEPS, ge=0)
    samples: Optional[int] = Field(default=None, ge=1)
    rng_seed: Optional[int] = None
    format: OutputFormat = OutputFormat.JSON
    out: Optional[str] = None
    gallery_id: Optional[str] = None
    gallery_parameters: Dict[str, RatText] = Field(default_factory=dict)
    reseed: bool = False
    workers: Optional[int] = Field(default=None, ge=1)
    only: Optional[str] = None


@dataclass
class RunConfig:
    command: Command
    strip: Optional[StripConfig] = None
    initial: Optional[Tuple[Fraction, ...]] = None
    steps: int = DEFAULT_STEPS
    samples: int = DEFAULT_SAMPLES
    rng_seed: Optional[int] = None
    format: OutputFormat = OutputFormat.JSON
    out: Optional[Path] = None
    gallery_id: Optional[str] = None
    gallery_parameters: Dict[str, Fraction] = field(default_factory=dict)
    reseed: bool = False
    only: Optional[str] = None
    workers: int = 1


STRIP_FIELDS = ("equation", "mu", "mode", "n", "boundary_minus", "boundary_plus", "initial")


def _pointer(loc: Tuple[Any, ...]) -> str:
    return "/" + "/".join(str(part) for part in loc)


def _rat(pointer: str, text: str) -> Fraction:
    try:
        return parse_rat(text)
    except LatticeMapsError as exc:
        raise ConfigError(pointer, str(exc)) from exc


def _strip_config(model: RunConfigModel) -> StripConfig:
    for name in STRIP_FIELDS:
        if getattr(model, name) is None:
            raise ConfigError(f"/{name}", f"required for {model.command.value}")
    mode = model.mode
    if mode.autonomous is not None:
        kind = ModeKind.AUTONOMOUS
        alphas: Tuple[Fraction, ...] = (_rat("/mode/autonomous", mode.autonomous),)
    else:
        kind = ModeKind.GENERAL
        alphas = tuple(_rat(f"/mode/general/{i}", a) for i, a in enumerate(mode.general))
    config = StripConfig(
        quad_id=model.equation,
        boundary_minus=model.boundary_minus,
        boundary_plus=model.boundary_plus,
        n=model.n,
        mu=_rat("/mu", model.mu),
        mode=kind,
        alphas=alphas,
    )
    validate_config(config)
    if len(model.initial) != model.n:
        raise ConfigError("/initial", f"expected {model.n} values, got {len(model.initial)}")
    return config


def parse_run_config(payload: Mapping[str, Any], settings: Optional[EngineSettings] = None) -> RunConfig:
    """Validate a decoded config document and turn it into a :class:`RunConfig`."""
    settings = settings or EngineSettings.from_env()
    try:
        model = RunConfigModel.model_validate(payload)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(_pointer(first["loc"]), first["msg"]) from exc

    config = RunConfig(
        command=model.command,
        steps=model.steps,
        samples=model.samples or settings.samples,
        rng_seed=settings.rng_seed if settings.rng_seed is not None else model.rng_seed,
        format=model.format,
        out=settings.resolve_output(model.out) if model.out else None,
        gallery_id=model.gallery_id,
        gallery_parameters={
            name: _rat(f"/gallery_parameters/{name}", value) for name, value in model.gallery_parameters.items()
        },
        reseed=model.reseed,
        only=model.only,
        workers=model.workers or settings.workers,
    )
    if model.command in (Command.ORBIT, Command.INVARIANTS):
        config.strip = _strip_config(model)
        config.initial = tuple(_rat(f"/initial/{i}", x) for i, x in enumerate(model.initial))
    return config


def read_config_document(path: Path) -> Dict[str, Any]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError("/", f"config file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("/", f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("/", "config must be a JSON object")
    return payload


def load_run_config(path: Path, settings: Optional[EngineSettings] = None) -> RunConfig:
    return parse_run_config(read_config_document(path), settings)
