from __future__ import annotations

from typing import Optional


class LatticeMapsError(Exception):
    """Base class for every failure raised by the package.

    ``code`` is a stable kebab-case identifier that callers and reports match on.
    """

    def __init__(self, code: str, detail: str = "") -> None:
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


class ExactArithmeticError(LatticeMapsError):
    """Raised when an exact operation has no defined result."""


class DegenerateError(LatticeMapsError):
    """Raised when a solve hits a vanishing affine coefficient."""

    def __init__(self, code: str, detail: str = "", face: Optional[str] = None) -> None:
        super().__init__(code, f"{detail} [{face}]" if face else detail)
        self.face = face


class SingularOrbitError(LatticeMapsError):
    """Raised when a strip step cannot be completed at the current point."""

    def __init__(self, step: int, face: str, cause: Optional[LatticeMapsError] = None) -> None:
        super().__init__("singular-orbit", f"step {step}, {face}")
        self.step = step
        self.face = face
        self.cause = cause


class SamplingError(LatticeMapsError):
    """Raised when random sampling cannot find an admissible point."""


class ConfigError(LatticeMapsError):
    """Raised when a run configuration fails validation."""

    def __init__(self, pointer: str, detail: str) -> None:
        super().__init__("invalid-config", f"{pointer}: {detail}")
        self.pointer = pointer
