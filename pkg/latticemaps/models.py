from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from latticemaps.exact import format_rat, parse_rat


class QuadId(str, Enum):
    H1 = "h1"
    Q1_ADD = "q1_add"
    Q1_MULT = "q1_mult"


class InvolutionKind(str, Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


class ModeKind(str, Enum):
    AUTONOMOUS = "autonomous"
    GENERAL = "general"


class Direction(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


class Command(str, Enum):
    VERIFY = "verify"
    ORBIT = "orbit"
    INVARIANTS = "invariants"
    GALLERY = "gallery"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


@dataclass(frozen=True)
class StripConfig:
    """Shape of a strip reduction: equation, boundaries, size and lattice parameters.

    ``alphas`` holds the single α in autonomous mode and α₁…α_{n−1} in general mode.
    """

    quad_id: QuadId
    boundary_minus: str
    boundary_plus: str
    n: int
    mu: Fraction
    mode: ModeKind
    alphas: Tuple[Fraction, ...]

    def to_dict(self) -> Dict[str, Any]:
        if self.mode is ModeKind.AUTONOMOUS:
            mode: Dict[str, Any] = {"autonomous": format_rat(self.alphas[0])}
        else:
            mode = {"general": [format_rat(a) for a in self.alphas]}
        return {
            "equation": self.quad_id.value,
            "boundary_minus": self.boundary_minus,
            "boundary_plus": self.boundary_plus,
            "n": self.n,
            "mu": format_rat(self.mu),
            "mode": mode,
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "StripConfig":
        mode_payload = payload["mode"]
        if "autonomous" in mode_payload:
            mode = ModeKind.AUTONOMOUS
            alphas: Tuple[Fraction, ...] = (parse_rat(mode_payload["autonomous"]),)
        else:
            mode = ModeKind.GENERAL
            alphas = tuple(parse_rat(a) for a in mode_payload["general"])
        return cls(
            quad_id=QuadId(payload["equation"]),
            boundary_minus=payload["boundary_minus"],
            boundary_plus=payload["boundary_plus"],
            n=int(payload["n"]),
            mu=parse_rat(payload["mu"]),
            mode=mode,
            alphas=alphas,
        )

    def with_general(self, alphas: Sequence[Fraction]) -> "StripConfig":
        return replace(self, mode=ModeKind.GENERAL, alphas=tuple(alphas))


@dataclass(frozen=True)
class StripState:
    fields: Tuple[Fraction, ...]
    params: Tuple[Fraction, ...]
    step: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "step": self.step,
            "fields": [format_rat(x) for x in self.fields],
            "params": [format_rat(a) for a in self.params],
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "StripState":
        return cls(
            fields=tuple(parse_rat(x) for x in payload["fields"]),
            params=tuple(parse_rat(a) for a in payload["params"]),
            step=int(payload.get("step", 0)),
        )


@dataclass
class OrbitRecord:
    states: List[StripState] = field(default_factory=list)
    singular_at: Optional[Tuple[int, str]] = None
    restarts: List[int] = field(default_factory=list)

    @property
    def last(self) -> StripState:
        return self.states[-1]

    def to_dict(self) -> Dict[str, Any]:
        singular = None
        if self.singular_at is not None:
            singular = {"step": self.singular_at[0], "face": self.singular_at[1]}
        return {
            "states": [state.to_dict() for state in self.states],
            "singular_at": singular,
            "restarts": list(self.restarts),
        }
