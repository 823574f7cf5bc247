"""Monodromy matrices of the strip and the invariants read off their traces."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from sympy import Matrix, Rational

from latticemaps.boundarymodel import boundary_matrix
from latticemaps.errors import ExactArithmeticError, SingularOrbitError
from latticemaps.exact import (
    Poly,
    RadicalMonomial,
    RatFun,
    clear_known_denominator,
    dual_jacobian,
    factor_multiplicity,
    format_rat,
    interpolate,
    lam,
    linear_factor,
    poly_evaluate,
)
from latticemaps.models import Direction, QuadId, StripConfig, StripState
from latticemaps.quadmodel import ScaledMatrix, ell, lax_matrix
from latticemaps.sampling import RationalSampler
from latticemaps.strip import StripModel, iterate, step_up

logger = logging.getLogger(__name__)

SEED_COUNT = 5


def single_row_T(
    config: StripConfig,
    state: StripState,
    direction: Direction = Direction.FORWARD,
    spectral: Any = None,
    model: Optional[StripModel] = None,
) -> ScaledMatrix:
    """Ordered product of the Lax matrices along the staircase.

    Forward is L(xₙ, xₙ₋₁)⋯L(x₂, x₁); reverse is L(x₁, x₂)⋯L(xₙ₋₁, xₙ).
    """
    model = model or StripModel(config)
    x, a = state.fields, state.params
    product = ScaledMatrix.identity()
    for j in range(config.n - 1):
        if direction is Direction.FORWARD:
            product = lax_matrix(model.quad, x[j + 1], x[j], a[j], config.mu, spectral) @ product
        else:
            product = product @ lax_matrix(model.quad, x[j], x[j + 1], a[j], config.mu, spectral)
    return product


@dataclass
class DoubleRow:
    matrix: ScaledMatrix
    config: StripConfig
    state: StripState
    conjugator: Optional[ScaledMatrix] = None


def double_row(
    config: StripConfig, state: StripState, spectral: Any = None, model: Optional[StripModel] = None
) -> DoubleRow:
    """𝒯(λ) = K₋(x₁; σλ) · Ť(σλ) · K₊(xₙ; λ) · T(λ)."""
    model = model or StripModel(config)
    spectral = lam() if spectral is None else spectral
    flipped = model.sigma(spectral)
    x = state.fields
    matrix = (
        boundary_matrix(model.minus, x[0], config.mu, flipped)
        @ single_row_T(config, state, Direction.REVERSE, flipped, model)
        @ boundary_matrix(model.plus, x[-1], config.mu, spectral)
        @ single_row_T(config, state, Direction.FORWARD, spectral, model)
    )
    return DoubleRow(matrix, config, state)


def trace_t(dr: DoubleRow) -> Tuple[RadicalMonomial, Any]:
    return dr.matrix.radical, dr.matrix.trace()


def aligned_trace(dr: DoubleRow, reference: RadicalMonomial) -> Any:
    """Trace of ``dr`` written over the radical monomial ``reference``."""
    radical, value = trace_t(dr)
    return value * radical.ratio(reference)


def epsilon_product(config: StripConfig) -> int:
    model = StripModel(config)
    return model.minus.epsilon * model.plus.epsilon


def plus_parameter(model: StripModel, params: Sequence[Any]) -> Any:
    """Parameter of the right boundary triangle."""
    if model.n % 2 == 1:
        return params[-1]
    return model.behind(params, model.n)


def ell_ratio(config: StripConfig, state: StripState) -> Any:
    """ℓ(σα₁,λ)ℓ(σP,σλ) / (ℓ(α₁,σλ)ℓ(P,λ)) with P the right boundary parameter."""
    model = StripModel(config)
    quad, mu = model.quad, config.mu
    spectral = lam()
    flipped = model.sigma(spectral)
    first = state.params[0]
    last = plus_parameter(model, state.params)
    top = ell(quad, model.sigma(first), mu, spectral) * ell(quad, model.sigma(last), mu, flipped)
    bottom = ell(quad, first, mu, flipped) * ell(quad, last, mu, spectral)
    return top / bottom


def conjugator(config: StripConfig, state: StripState, after: StripState) -> ScaledMatrix:
    """E = L(x₁′, x₂; σα₁, λ) · L(x₂, x₁; α₁, λ)."""
    model = StripModel(config)
    x, a = state.fields, state.params
    return lax_matrix(model.quad, after.fields[0], x[1], model.sigma(a[0]), config.mu) @ lax_matrix(
        model.quad, x[1], x[0], a[0], config.mu
    )


def check_conjugation(config: StripConfig, state: StripState, after: Optional[StripState] = None) -> bool:
    """𝒯′(λ)E = ε₋ε₊ · ratio · E𝒯(λ) for the state one step up."""
    after = after if after is not None else step_up(config, state)
    e = conjugator(config, state, after)
    before_dr = double_row(config, state)
    before_dr.conjugator = e
    after_dr = double_row(config, after)
    factor = epsilon_product(config) * ell_ratio(config, state)
    lhs = after_dr.matrix @ e
    rhs = (e @ before_dr.matrix).scale(factor)
    return lhs.equals(rhs)


def check_trace_ratio(config: StripConfig, state: StripState, steps: int) -> bool:
    """𝔱 after ``steps`` steps equals (ε₋ε₊)^steps times 𝔱 before."""
    if steps == 0:
        return True
    record = iterate(config, state, steps)
    if record.singular_at is not None:
        raise SingularOrbitError(*record.singular_at)
    radical, before = trace_t(double_row(config, state))
    after = aligned_trace(double_row(config, record.last), radical)
    return after == epsilon_product(config) ** steps * before


def structural_factors(config: StripConfig) -> List[Poly]:
    """Monic λ-factors allowed in the denominator of 𝔱."""
    mu = config.mu
    if config.quad_id is QuadId.H1:
        candidates = [linear_factor(mu)]
    elif config.quad_id is QuadId.Q1_ADD:
        candidates = [linear_factor(0), linear_factor(mu), linear_factor(-mu), linear_factor(2 * mu)]
    else:
        candidates = [linear_factor(0), linear_factor(mu), linear_factor(-mu)]
    factors: List[Poly] = []
    for candidate in candidates:
        if candidate not in factors:
            factors.append(candidate)
    return factors


def discover_multiplicities(traces: Sequence[RatFun], factors: Sequence[Poly]) -> List[Tuple[Poly, int]]:
    multiplicities = []
    for factor in factors:
        highest = max((factor_multiplicity(t.den, factor) for t in traces), default=0)
        multiplicities.append((factor, highest))
    logger.debug("structural multiplicities %s", [(str(f), m) for f, m in multiplicities])
    return multiplicities


def cleared_coefficients(trace: RatFun, multiplicities: Sequence[Tuple[Poly, int]], length: int) -> List[Fraction]:
    coefficients = clear_known_denominator(trace, multiplicities)
    if len(coefficients) > length:
        raise ExactArithmeticError("denominator-mismatch", f"numerator degree exceeds {length - 1}")
    return coefficients + [Fraction(0)] * (length - len(coefficients))


def numeric_cleared_coefficients(
    config: StripConfig,
    fields: Sequence[Any],
    params: Sequence[Fraction],
    multiplicities: Sequence[Tuple[Poly, int]],
    length: int,
) -> List[Any]:
    """Cleared numerator coefficients of 𝔱 through interpolation at rational λ nodes.

    ``fields`` may be DualRat, which makes the coefficients differentiable.
    """
    model = StripModel(config)
    state = StripState(tuple(fields), tuple(params))
    base = 3 * abs(config.mu) + 5
    nodes = [Fraction(base + k) for k in range(length)]
    values = []
    for node in nodes:
        dr = double_row(config, state, node, model)
        clearing = Fraction(1)
        for factor, multiplicity in multiplicities:
            clearing *= poly_evaluate(factor, node) ** multiplicity
        values.append(dr.matrix.trace() * clearing)
    return interpolate(nodes, values)


@dataclass
class InvariantReport:
    values: List[Fraction]
    survivors: List[int]
    discarded: List[int]
    k_class: List[int]
    jacobian_rank: int
    boundary_squares: List[Fraction] = field(default_factory=list)
    epsilon_product: int = 1
    ratio: str = "1"
    multiplicities: Dict[str, int] = field(default_factory=dict)

    @property
    def invariants(self) -> List[Fraction]:
        return [self.values[i] for i in self.survivors]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "values": [format_rat(v) for v in self.values],
            "survivors": list(self.survivors),
            "discarded": list(self.discarded),
            "k_class": list(self.k_class),
            "jacobian_rank": self.jacobian_rank,
            "boundary_squares": [format_rat(v) for v in self.boundary_squares],
            "epsilon_product": self.epsilon_product,
            "ratio": self.ratio,
            "multiplicities": dict(self.multiplicities),
        }


def _random_fields(
    config: StripConfig, state: StripState, reference: RadicalMonomial, draw: RationalSampler
) -> Tuple[StripState, RatFun]:
    fields = draw.rats(config.n, nonzero=True, distinct=True)
    seeded = StripState(tuple(fields), state.params)
    return seeded, aligned_trace(double_row(config, seeded), reference)


def _k_class(sequence: Sequence[Fraction], bound: int) -> int:
    length = len(sequence) - 1
    for k in range(1, bound + 1):
        if bound % k or k > length:
            continue
        if all(sequence[t + k] == sequence[t] for t in range(length - k + 1)):
            return k
    return 0


def _rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows:
        return 0
    return Matrix([[Rational(v.numerator, v.denominator) for v in row] for row in rows]).rank()


def boundary_squares(config: StripConfig, fields: Sequence[Any]) -> List[Any]:
    """x₁² and xₙ² for reflecting boundaries."""
    model = StripModel(config)
    squares = []
    if model.minus.reflecting:
        squares.append(fields[0] * fields[0])
    if model.plus.reflecting:
        squares.append(fields[-1] * fields[-1])
    return squares


def extract_invariants(
    dr: DoubleRow, sampler: Optional[RationalSampler] = None, seeds: int = SEED_COUNT
) -> InvariantReport:
    config, state = dr.config, dr.state
    sampler = sampler or RationalSampler(0)
    bound = 2 * (config.n - 1)
    radical, trace = trace_t(dr)

    seeded = [sampler.attempt(lambda draw: _random_fields(config, state, radical, draw)) for _ in range(seeds)]
    window = iterate(config, state, bound)
    if window.singular_at is not None:
        steps = len(window.states) - 1
        logger.warning("window orbit singular at %s; k-classes use %s steps", window.singular_at, steps)
    window_traces = [trace] + [aligned_trace(double_row(config, s), radical) for s in window.states[1:]]

    multiplicities = discover_multiplicities(
        window_traces + [t for _, t in seeded], structural_factors(config)
    )
    raw = [clear_known_denominator(t, multiplicities) for t in window_traces + [t for _, t in seeded]]
    length = max(len(c) for c in raw)
    values = cleared_coefficients(trace, multiplicities, length)
    seed_values = [cleared_coefficients(t, multiplicities, length) for _, t in seeded]

    survivors = [i for i in range(length) if len({row[i] for row in seed_values} | {values[i]}) > 1]
    discarded = [i for i in range(length) if i not in survivors]

    window_values = [cleared_coefficients(t, multiplicities, length) for t in window_traces]
    k_class = []
    for i in survivors:
        k = _k_class([row[i] for row in window_values], bound)
        if k == 0:
            logger.warning("no k within %s for coefficient %s", bound, i)
        k_class.append(k)

    def invariant_map(dual_fields: List[Any]) -> List[Any]:
        coefficients = numeric_cleared_coefficients(config, dual_fields, state.params, multiplicities, length)
        return [coefficients[i] for i in survivors] + boundary_squares(config, dual_fields)

    rank = _rank(dual_jacobian(invariant_map, state.fields))
    return InvariantReport(
        values=values,
        survivors=survivors,
        discarded=discarded,
        k_class=k_class,
        jacobian_rank=rank,
        boundary_squares=boundary_squares(config, state.fields),
        epsilon_product=epsilon_product(config),
        ratio=str(ell_ratio(config, state)),
        multiplicities={str(f): m for f, m in multiplicities},
    )


def coefficient_orbit(
    config: StripConfig, state: StripState, steps: int
) -> Tuple[List[StripState], List[List[Fraction]], int]:
    """States along the orbit with the cleared coefficients of their traces.

    When the ℓ-ratio is not 1 the trace only comes back with the parameters, so
    states are taken every n − 1 steps; the stride is returned alongside.
    """
    record = iterate(config, state, steps)
    stride = 1 if ell_ratio(config, state) == 1 else config.n - 1
    states = record.states[::stride]
    radical = double_row(config, states[0]).matrix.radical
    traces = [aligned_trace(double_row(config, s), radical) for s in states]
    multiplicities = discover_multiplicities(traces, structural_factors(config))
    length = max(len(clear_known_denominator(t, multiplicities)) for t in traces)
    return states, [cleared_coefficients(t, multiplicities, length) for t in traces], stride


def invariant_drift(config: StripConfig, state: StripState, steps: int) -> List[List[Fraction]]:
    """Cleared coefficients minus (ε₋ε₊)^step times the initial ones, per sampled state."""
    _, rows, stride = coefficient_orbit(config, state, steps)
    sign = epsilon_product(config)
    return [
        [value - sign ** (index * stride) * first for value, first in zip(row, rows[0])]
        for index, row in enumerate(rows)
    ]
