from fractions import Fraction
from pathlib import Path

import pytest

from latticemaps.models import ModeKind, QuadId, StripConfig
from latticemaps.sampling import RationalSampler


@pytest.fixture()
def sampler() -> RationalSampler:
    return RationalSampler(seed=20240601)


@pytest.fixture()
def report_dir(tmp_path: Path) -> Path:
    directory = tmp_path / "reports"
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _h1_strip(n: int, alpha: int = 2, mu: int = 3) -> StripConfig:
    return StripConfig(QuadId.H1, "h1_xz", "h1_yzx", n, Fraction(mu), ModeKind.AUTONOMOUS, (Fraction(alpha),))


@pytest.fixture()
def h1_n3() -> StripConfig:
    return _h1_strip(3)


@pytest.fixture()
def h1_n3_general() -> StripConfig:
    return StripConfig(QuadId.H1, "h1_xz", "h1_yzx", 3, Fraction(3), ModeKind.GENERAL, (Fraction(1), Fraction(2)))


@pytest.fixture()
def q1mult_n2() -> StripConfig:
    return StripConfig(QuadId.Q1_MULT, "q1mult_row1", "q1mult_row3", 2, Fraction(2), ModeKind.GENERAL, (Fraction(1),))


@pytest.fixture()
def q1mult_n3() -> StripConfig:
    return StripConfig(
        QuadId.Q1_MULT, "q1mult_row1", "q1mult_row3", 3, Fraction(1), ModeKind.GENERAL, (Fraction(2), Fraction(3))
    )


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in (
        "LATTICEMAPS_RNG_SEED",
        "LATTICEMAPS_SAMPLES",
        "LATTICEMAPS_LOG_LEVEL",
        "LATTICEMAPS_OUTPUT_DIR",
        "LATTICEMAPS_WORKERS",
    ):
        monkeypatch.delenv(name, raising=False)
