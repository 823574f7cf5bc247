"""Closed-form maps and invariants of small strip reductions.

Each :class:`GalleryMap` is an independent oracle: a printed map, its
invariants and how each invariant transforms under one step. Where a strip
realization exists, :func:`gallery_crosscheck` runs the strip engine next to
the closed form and compares them pointwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from latticemaps.errors import ExactArithmeticError, LatticeMapsError
from latticemaps.exact import format_rat
from latticemaps.models import ModeKind, QuadId, StripConfig, StripState
from latticemaps.strip import initial_state, iterate

logger = logging.getLogger(__name__)

Point = Tuple[Fraction, ...]
Params = Dict[str, Fraction]


class InvariantLaw(str, Enum):
    CONSERVED = "conserved"
    ALTERNATING = "alternating"


@dataclass(frozen=True)
class GalleryMap:
    gallery_id: str
    arity: int
    defaults: Mapping[str, Fraction]
    step: Callable[[Point, Params], Tuple[Point, Params]]
    invariants: Callable[[Point, Params], List[Fraction]]
    laws: Tuple[InvariantLaw, ...]
    description: str = ""

    @property
    def parameters(self) -> Tuple[str, ...]:
        return tuple(self.defaults)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.gallery_id,
            "arity": self.arity,
            "parameters": {name: format_rat(value) for name, value in self.defaults.items()},
            "laws": [law.value for law in self.laws],
            "description": self.description,
        }


def _fixed(step: Callable[[Point, Params], Point]) -> Callable[[Point, Params], Tuple[Point, Params]]:
    return lambda point, params: (step(point, params), dict(params))


def _h1_2d(p: Point, k: Params) -> Point:
    x1, x2 = p
    return (-x1, x2 + k["c"] / (2 * x1))


def _h1_3d(p: Point, k: Params) -> Point:
    x1, x2, x3 = p
    c = k["c"]
    return (-x1, x2 + 2 * c * x2 / (2 * x1 * x2 + 2 * x2 * x3 - c), x3 - c / (2 * x2))


def _h1_3d_invariants(p: Point, k: Params) -> List[Fraction]:
    x1, x2, x3 = p
    return [x1 * x1, (x1 + x3) * (2 * x2 * (x1 - x3) + k["c"])]


def _h1_3d_y(p: Point, k: Params) -> Point:
    y1, y2, y3 = p
    return (y2, y2 - (y1 - y2) * (y2 + y3) / (2 * y1 + y3 - y2), -y3)


def _h1_3d_y_invariants(p: Point, k: Params) -> List[Fraction]:
    y1, y2, y3 = p
    return [(y2 - y3) * (y1 + y3) / (y1 - y2)]


def _h1_4d(p: Point, k: Params) -> Point:
    x1, x2, x3, x4 = p
    c = k["c"]
    return (
        -x1,
        x2 + c * (x2 - x4) / ((x2 - x4) * (x1 + x3) - c),
        x3 + c / (x4 - x2),
        x4 + c * (x2 - x4) / (2 * x3 * (x4 - x2) + 2 * c),
    )


def _h1_4d_invariants(p: Point, k: Params) -> List[Fraction]:
    x1, x2, x3, x4 = p
    c = k["c"]
    return [x1 * x1, (x1 + x3) * (2 * x3 * (x4 - x2) + c) * ((x2 - x4) * (x1 - x3) + c)]


def _h1_3d_na(p: Point, k: Params) -> Tuple[Point, Params]:
    x1, x2, x3 = p
    a1, a2, mu = k["alpha1"], k["alpha2"], k["mu"]
    image = (-x1, x2 + x2 * (a2 - a1) / (x2 * (x1 + x3) + mu - a2), x3 + (mu - a2) / x2)
    return image, {"alpha1": 2 * mu - a2, "alpha2": 2 * mu - a1, "mu": mu}


def _na_numerator(x1: Fraction, x2: Fraction, x3: Fraction, k: Params) -> Fraction:
    return x2 * (x1 * x1 - x3 * x3) + k["mu"] * (x1 - x3) - k["alpha1"] * x1 + k["alpha2"] * x3


def _h1_3d_na_invariants(p: Point, k: Params) -> List[Fraction]:
    x1, x2, x3 = p
    numerator = _na_numerator(x1, x2, x3, k)
    return [x1 * x1, numerator / x1, numerator]


def _h1_3d_na_square(p: Point, k: Params) -> Point:
    x2, x3 = p
    x1, a1, a2, mu = k["x1"], k["alpha1"], k["alpha2"], k["mu"]
    top = (x1 * x2 + x2 * x3 + mu - a1) * (
        x1 * x1 * x2 * x2
        - x2 * x2 * x3 * x3
        + mu * x1 * x2
        - mu * x2 * x3
        - a1 * x1 * x2
        + a1 * x2 * x3
        + mu * a1
        - mu * a2
        - a1 * a2
        + a2 * a2
    )
    bottom = (x1 * x1 * x2 - x2 * x3 * x3 + mu * x1 - mu * x3 - 2 * a1 * x1 + a2 * x1 + a2 * x3) * (
        x1 * x2 + x2 * x3 + mu - a2
    )
    return (top / bottom, x3 + (x1 + x3) * (a1 - a2) / (x1 * x2 + x2 * x3 + mu - a1))


def _h1_3d_na_square_invariants(p: Point, k: Params) -> List[Fraction]:
    x2, x3 = p
    return [_na_numerator(k["x1"], x2, x3, k)]


def _h1_delta(p: Point, k: Params) -> Point:
    y1, y2 = p
    s = k["x1"] * k["x1"]
    return (y2, -(s * y1 - 2 * s * y2 + y1 * y2 * y2) / (s - 2 * y1 * y2 + y2 * y2))


def _h1_delta_invariants(p: Point, k: Params) -> List[Fraction]:
    y1, y2 = p
    return [(k["x1"] * k["x1"] - y1 * y2) / (y1 - y2)]


def _q1_growth(x1: Fraction, x2: Fraction, c: Fraction) -> Fraction:
    return (x1 + (c * c - 1) * x2) / (c * c * x1)


def _q1_2d(p: Point, k: Params) -> Point:
    x1, x2 = p
    c = k["c"]
    return ((x1 + (c * c - 1) * x2) / (c * c), x2 * (x1 + (c * c - 1) * x2) / (c * c * x1))


def _q1_2d_invariants(p: Point, k: Params) -> List[Fraction]:
    return [p[0] / p[1]]


def q1_2d_power(point: Sequence[Fraction], c: Fraction, steps: int) -> Point:
    """The ``steps``-fold iterate of the two-dimensional Q1 map in closed form."""
    x1, x2 = point
    growth = _q1_growth(x1, x2, Fraction(c)) ** steps
    return (x1 * growth, x2 * growth)


def _flip_c(k: Params) -> Params:
    return {**k, "c1": 1 / k["c2"], "c2": 1 / k["c1"]}


def _q1_3d(p: Point, k: Params) -> Tuple[Point, Params]:
    x1, x2, x3 = p
    s1, s2 = k["c1"] ** 2, k["c2"] ** 2
    shared = x2 * x2 + x1 * x3 - 2 * x2 * x3
    image = (
        s1 * (x1 - x2) + x2,
        x2 * (shared + s1 * (x1 - x2) * (x2 - x3)) / (shared + s2 * (x1 - x2) * (x2 - x3)),
        x2 * x3 / (s2 * (x2 - x3) + x3),
    )
    return image, _flip_c(k)


def _q1_3d_invariants(p: Point, k: Params) -> List[Fraction]:
    x1, x2, x3 = p
    c1, c2 = k["c1"], k["c2"]
    top = c2**2 * x1 * (x2 - x3) ** 2 + c1**2 * (x1 - x2) * (c2**2 * (x1 - x3) * (x2 - x3) + (x1 - x2) * x3)
    return [top / (c1 * c2 * (x1 - x2) * (x2 - x3) * x3)]


def _q1_reduced(p: Point, k: Params) -> Tuple[Point, Params]:
    z1, z2 = p
    s1, s2 = k["c1"] ** 2, k["c2"] ** 2
    shared = s2 * z2 * (1 + z2) + s1 * (z1 + s2 * z1 * z2)
    bottom = z1 + z2 + s2 * z1 * z2 + z2 * z2
    image = (z1 * (1 + s2 * z2) * shared / ((1 + z2) * bottom), z2 * shared / bottom)
    return image, _flip_c(k)


def _q1_reduced_invariants(p: Point, k: Params) -> List[Fraction]:
    z1, z2 = p
    s1, s2 = k["c1"] ** 2, k["c2"] ** 2
    return [(s2 * z2 * z2 * (1 + z1 + z2) + s1 * z1 * (z1 + s2 * z1 * z2 + s2 * z2 * z2)) / (s2 * z1 * z2)]


def _gamma(p: Point, k: Params) -> Point:
    x, y = p
    a, b = k["alpha"], k["beta"]
    scale = (x + y) * (a * x + b * (a * x + y + 1) * y) ** 2 / (
        b
        * (x + (x * b + y + 1) * y)
        * ((a * a + b) * x * y * y + a * (b * x * x + y * y) * y + a * (x + y) ** 2)
    )
    first = x * (a * x + (a * b * x + b * y + a) * y) / (a * (x + (a * x + y + 1) * y))
    return (scale * first, scale * y)


def _gamma_invariants(p: Point, k: Params) -> List[Fraction]:
    x, y = p
    a, b = k["alpha"], k["beta"]
    return [(y * y * (1 + x + y) + a * x * (x / b + x * y + y * y)) / (x * y)]


def pencil_cubics(point: Sequence[Fraction], alpha: Fraction, beta: Fraction) -> Tuple[Fraction, Fraction]:
    """(N₁, N₂) at a homogeneous point; the pencil is N₁ = C·N₂."""
    x, y, z = point
    n1 = y * y * z + x * y * y + y**3 + alpha / beta * x * x * z + alpha * x * x * y + alpha * x * y * y
    return n1, x * y * z


def pencil_base_points(alpha: Fraction) -> List[Point]:
    one, zero = Fraction(1), Fraction(0)
    return [
        (zero, zero, one),
        (zero, -one, one),
        (one, zero, zero),
        (one, -one, zero),
        (one, -Fraction(alpha), zero),
    ]


GALLERY: Dict[str, GalleryMap] = {
    entry.gallery_id: entry
    for entry in (
        GalleryMap(
            "h1_2d", 2, {"c": Fraction(2)}, _fixed(_h1_2d),
            lambda p, k: [p[0] * p[0]], (InvariantLaw.CONSERVED,),
            "H1 with x+z and y(z-x)+alpha-mu, n=2; an involution",
        ),
        GalleryMap(
            "h1_3d", 3, {"c": Fraction(2)}, _fixed(_h1_3d),
            _h1_3d_invariants, (InvariantLaw.CONSERVED, InvariantLaw.CONSERVED),
            "H1 with x+z and y(z-x)+alpha-mu, n=3",
        ),
        GalleryMap(
            "h1_3d_y", 3, {"c": Fraction(2)}, _fixed(_h1_3d_y),
            _h1_3d_y_invariants, (InvariantLaw.CONSERVED,),
            "h1_3d in the variables (x3, x3-c/(2x2), x1)",
        ),
        GalleryMap(
            "h1_4d", 4, {"c": Fraction(2)}, _fixed(_h1_4d),
            _h1_4d_invariants, (InvariantLaw.CONSERVED, InvariantLaw.CONSERVED),
            "H1 with x+z and y(z-x)+alpha-mu, n=4",
        ),
        GalleryMap(
            "h1_3d_na", 3, {"alpha1": Fraction(1), "alpha2": Fraction(2), "mu": Fraction(3)}, _h1_3d_na,
            _h1_3d_na_invariants, (InvariantLaw.CONSERVED, InvariantLaw.ALTERNATING, InvariantLaw.CONSERVED),
            "non-autonomous H1, n=3, parameters (alpha1, alpha2) -> (sigma(alpha2), sigma(alpha1))",
        ),
        GalleryMap(
            "h1_3d_na_square", 2,
            {"x1": Fraction(1), "alpha1": Fraction(1), "alpha2": Fraction(2), "mu": Fraction(3)},
            _fixed(_h1_3d_na_square), _h1_3d_na_square_invariants, (InvariantLaw.CONSERVED,),
            "square of h1_3d_na acting on (x2, x3)",
        ),
        GalleryMap(
            "h1_delta", 2, {"x1": Fraction(1)}, _fixed(_h1_delta),
            _h1_delta_invariants, (InvariantLaw.CONSERVED,),
            "h1_3d_na_square in the variables (x3, x3'')",
        ),
        GalleryMap(
            "q1_2d", 2, {"c": Fraction(2)}, _fixed(_q1_2d),
            _q1_2d_invariants, (InvariantLaw.CONSERVED,),
            "multiplicative Q1 with rows 1 and 3, n=2, c = mu/alpha",
        ),
        GalleryMap(
            "q1_3d", 3, {"c1": Fraction(2), "c2": Fraction(3)}, _q1_3d,
            _q1_3d_invariants, (InvariantLaw.CONSERVED,),
            "multiplicative Q1 with rows 1 and 3, n=3, c_j = alpha_j/mu",
        ),
        GalleryMap(
            "q1_reduced", 2, {"c1": Fraction(2), "c2": Fraction(3)}, _q1_reduced,
            _q1_reduced_invariants, (InvariantLaw.CONSERVED,),
            "q1_3d in z1=(x1-x2)/x3, z2=x2/x3-1",
        ),
        GalleryMap(
            "gamma", 2, {"alpha": Fraction(4), "beta": Fraction(1)}, _fixed(_gamma),
            _gamma_invariants, (InvariantLaw.CONSERVED,),
            "square of q1_reduced with alpha=c1^2, beta=c2^2; preserves a genus 0 pencil",
        ),
    )
}


def get_gallery(gallery_id: str) -> GalleryMap:
    try:
        return GALLERY[gallery_id]
    except KeyError as exc:
        raise KeyError(f"unknown gallery map {gallery_id!r}") from exc


def list_gallery() -> List[Dict[str, Any]]:
    return [entry.to_dict() for entry in GALLERY.values()]


def _params(entry: GalleryMap, params: Optional[Mapping[str, Fraction]]) -> Params:
    merged = dict(entry.defaults)
    merged.update({name: Fraction(value) for name, value in (params or {}).items()})
    return merged


def gallery_step(
    gallery_id: str, point: Sequence[Fraction], params: Optional[Mapping[str, Fraction]] = None
) -> Tuple[Point, Params]:
    entry = get_gallery(gallery_id)
    try:
        image, updated = entry.step(tuple(Fraction(v) for v in point), _params(entry, params))
    except ZeroDivisionError as exc:
        raise ExactArithmeticError("singular-point", f"{gallery_id} at {tuple(point)}") from exc
    return tuple(image), updated


def gallery_invariants(
    gallery_id: str, point: Sequence[Fraction], params: Optional[Mapping[str, Fraction]] = None
) -> List[Fraction]:
    entry = get_gallery(gallery_id)
    try:
        return entry.invariants(tuple(Fraction(v) for v in point), _params(entry, params))
    except ZeroDivisionError as exc:
        raise ExactArithmeticError("singular-point", f"{gallery_id} invariants at {tuple(point)}") from exc


def gallery_orbit(
    gallery_id: str, point: Sequence[Fraction], params: Optional[Mapping[str, Fraction]], steps: int
) -> List[Tuple[Point, Params]]:
    entry = get_gallery(gallery_id)
    orbit = [(tuple(Fraction(v) for v in point), _params(entry, params))]
    for _ in range(steps):
        orbit.append(gallery_step(gallery_id, *orbit[-1]))
    return orbit


def invariant_drift(gallery_id: str, orbit: Sequence[Tuple[Point, Params]]) -> List[List[Fraction]]:
    """Per invariant and step: value minus the value the declared law predicts."""
    entry = get_gallery(gallery_id)
    values = [gallery_invariants(gallery_id, point, params) for point, params in orbit]
    drift = []
    for index, law in enumerate(entry.laws):
        start = values[0][index]
        sign = -1 if law is InvariantLaw.ALTERNATING else 1
        drift.append([row[index] - sign**step * start for step, row in enumerate(values)])
    return drift


# Strip realizations: how to build the strip, how many strip steps make one
# gallery step, and how to read a gallery point off the strip orbit.
StateView = Callable[[Sequence[StripState], int, Params], Tuple[Point, Params]]


@dataclass(frozen=True)
class Realization:
    build: Callable[[Params], StripConfig]
    seed: Point
    stride: int
    lookahead: int
    view: StateView


def _h1_strip(n: int) -> Callable[[Params], StripConfig]:
    def build(k: Params) -> StripConfig:
        mu = k.get("mu", Fraction(3))
        return StripConfig(QuadId.H1, "h1_xz", "h1_yzx", n, mu, ModeKind.AUTONOMOUS, (mu - k["c"] / 2,))

    return build


def _h1_general(k: Params) -> StripConfig:
    alphas = (k.get("alpha1", Fraction(1)), k.get("alpha2", Fraction(2)))
    return StripConfig(QuadId.H1, "h1_xz", "h1_yzx", 3, k.get("mu", Fraction(3)), ModeKind.GENERAL, alphas)


def _q1_strip(n: int) -> Callable[[Params], StripConfig]:
    def build(k: Params) -> StripConfig:
        if n == 2:
            mu = Fraction(2)
            alphas: Tuple[Fraction, ...] = (mu / k["c"],)
        else:
            mu = Fraction(1)
            alphas = (k["c1"] * mu, k["c2"] * mu)
        return StripConfig(QuadId.Q1_MULT, "q1mult_row1", "q1mult_row3", n, mu, ModeKind.GENERAL, alphas)

    return build


def _rational_sqrt(value: Fraction) -> Fraction:
    top, bottom = math.isqrt(value.numerator), math.isqrt(value.denominator)
    if value < 0 or top * top != value.numerator or bottom * bottom != value.denominator:
        raise ExactArithmeticError("singular-point", f"{value} is not a rational square")
    return Fraction(top, bottom)


def _gamma_strip(k: Params) -> StripConfig:
    c1, c2 = _rational_sqrt(k["alpha"]), _rational_sqrt(k["beta"])
    return _q1_strip(3)({"c1": c1, "c2": c2})


def _fields(states: Sequence[StripState], t: int, k: Params) -> Tuple[Point, Params]:
    return states[t].fields, k


def _na_view(states: Sequence[StripState], t: int, k: Params) -> Tuple[Point, Params]:
    a1, a2 = states[t].params
    return states[t].fields, {"alpha1": a1, "alpha2": a2, "mu": k["mu"]}


def _y_view(states: Sequence[StripState], t: int, k: Params) -> Tuple[Point, Params]:
    x1, x2, x3 = states[t].fields
    return (x3, x3 - k["c"] / (2 * x2), x1), k


def _square_view(states: Sequence[StripState], t: int, k: Params) -> Tuple[Point, Params]:
    x1, x2, x3 = states[2 * t].fields
    a1, a2 = states[2 * t].params
    return (x2, x3), {"x1": x1, "alpha1": a1, "alpha2": a2, "mu": k["mu"]}


def _delta_view(states: Sequence[StripState], t: int, k: Params) -> Tuple[Point, Params]:
    return (states[2 * t].fields[2], states[2 * t + 2].fields[2]), {**k, "x1": states[0].fields[0]}


def _c_params(state: StripState, mu: Fraction) -> Params:
    return {"c1": state.params[0] / mu, "c2": state.params[1] / mu}


def _q1_3d_view(states: Sequence[StripState], t: int, k: Params) -> Tuple[Point, Params]:
    return states[t].fields, _c_params(states[t], Fraction(1))


def _reduce(fields: Sequence[Fraction]) -> Point:
    x1, x2, x3 = fields
    return ((x1 - x2) / x3, x2 / x3 - 1)


def _reduced_view(states: Sequence[StripState], t: int, k: Params) -> Tuple[Point, Params]:
    return _reduce(states[t].fields), _c_params(states[t], Fraction(1))


def _gamma_view(states: Sequence[StripState], t: int, k: Params) -> Tuple[Point, Params]:
    return _reduce(states[2 * t].fields), k


REALIZATIONS: Dict[str, Realization] = {
    "h1_2d": Realization(_h1_strip(2), (Fraction(1), Fraction(1)), 1, 0, _fields),
    "h1_3d": Realization(_h1_strip(3), (Fraction(1),) * 3, 1, 0, _fields),
    "h1_3d_y": Realization(_h1_strip(3), (Fraction(1), Fraction(2), Fraction(3)), 1, 0, _y_view),
    "h1_4d": Realization(_h1_strip(4), tuple(Fraction(v) for v in (1, 2, 3, 4)), 1, 0, _fields),
    "h1_3d_na": Realization(_h1_general, (Fraction(1), Fraction(1), Fraction(2)), 1, 0, _na_view),
    "h1_3d_na_square": Realization(_h1_general, (Fraction(1), Fraction(1), Fraction(2)), 2, 0, _square_view),
    "h1_delta": Realization(_h1_general, (Fraction(1), Fraction(1), Fraction(2)), 2, 1, _delta_view),
    "q1_2d": Realization(_q1_strip(2), (Fraction(2), Fraction(1)), 1, 0, _fields),
    "q1_3d": Realization(_q1_strip(3), (Fraction(3), Fraction(2), Fraction(1)), 1, 0, _q1_3d_view),
    "q1_reduced": Realization(_q1_strip(3), (Fraction(3), Fraction(2), Fraction(1)), 1, 0, _reduced_view),
    "gamma": Realization(_gamma_strip, (Fraction(3), Fraction(2), Fraction(1)), 2, 0, _gamma_view),
}


def strip_config_for(gallery_id: str, params: Optional[Mapping[str, Fraction]] = None) -> StripConfig:
    entry = get_gallery(gallery_id)
    return REALIZATIONS[gallery_id].build(_params(entry, params))


@dataclass
class CrosscheckReport:
    gallery_id: str
    steps: int
    mismatches: List[Dict[str, Any]] = field(default_factory=list)
    drift: List[List[Fraction]] = field(default_factory=list)
    singular_at: Optional[Tuple[int, str]] = None

    @property
    def passed(self) -> bool:
        return (
            not self.mismatches
            and self.singular_at is None
            and all(value == 0 for row in self.drift for value in row)
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.gallery_id,
            "steps": self.steps,
            "passed": self.passed,
            "mismatches": self.mismatches,
            "drift": [[format_rat(v) for v in row] for row in self.drift],
            "singular_at": None
            if self.singular_at is None
            else {"step": self.singular_at[0], "face": self.singular_at[1]},
        }


def gallery_crosscheck(
    gallery_id: str,
    steps: int = 10,
    params: Optional[Mapping[str, Fraction]] = None,
    seed: Optional[Sequence[Fraction]] = None,
    strip_config: Optional[StripConfig] = None,
) -> CrosscheckReport:
    """Run the strip engine and the closed form side by side for ``steps`` gallery steps."""
    entry = get_gallery(gallery_id)
    realization = REALIZATIONS[gallery_id]
    merged = _params(entry, params)
    config = strip_config or realization.build(merged)
    start = initial_state(config, seed or realization.seed)
    report = CrosscheckReport(gallery_id, steps)

    strip_steps = realization.stride * (steps + realization.lookahead)
    record = iterate(config, start, strip_steps)
    if record.singular_at is not None:
        report.singular_at = record.singular_at
        steps = max(0, (len(record.states) - 1) // realization.stride - realization.lookahead)
        logger.warning("%s: strip orbit singular, comparing %s steps", gallery_id, steps)

    try:
        orbit = gallery_orbit(gallery_id, *realization.view(record.states, 0, merged), steps)
    except LatticeMapsError as exc:
        report.mismatches.append({"step": None, "error": str(exc)})
        return report
    for t, (point, point_params) in enumerate(orbit):
        expected, expected_params = realization.view(record.states, t, merged)
        params_differ = any(point_params[name] != value for name, value in expected_params.items())
        if tuple(point) != tuple(expected) or params_differ:
            report.mismatches.append(
                {
                    "step": t,
                    "closed_form": [format_rat(v) for v in point],
                    "strip": [format_rat(v) for v in expected],
                }
            )
    report.drift = invariant_drift(gallery_id, orbit)
    logger.info("crosscheck %s over %s steps: %s", gallery_id, steps, "ok" if report.passed else "mismatch")
    return report
