"""Open boundary reductions of a quad equation on a strip of width n.

Fields x₁…xₙ sit on a staircase between the two boundaries, edge j joins
xⱼ and xⱼ₊₁ and carries the lattice parameter αⱼ. One upward step solves the
boundary triangles at both ends and the quadrilaterals in between, odd
positions from the old staircase and even positions from the new one.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from fractions import Fraction
from typing import Any, Callable, List, Sequence, Tuple

from latticemaps.boundarymodel import (
    BoundaryEquationSpec,
    InvolutionSpec,
    boundary_eval,
    boundary_solve,
    get_boundary,
)
from latticemaps.errors import ConfigError, LatticeMapsError, SingularOrbitError
from latticemaps.models import ModeKind, OrbitRecord, StripConfig, StripState
from latticemaps.quadmodel import QuadEquation, corner_solve, get_quad, quad_eval, solve_affine

logger = logging.getLogger(__name__)

MAX_RESEEDS = 100


class StripModel:
    """Resolved registry records for one :class:`StripConfig`."""

    def __init__(self, config: StripConfig) -> None:
        validate_config(config)
        self.config = config
        self.n = config.n
        self.quad: QuadEquation = get_quad(config.quad_id)
        self.minus: BoundaryEquationSpec = get_boundary(config.boundary_minus)
        self.plus: BoundaryEquationSpec = get_boundary(config.boundary_plus)
        self.involution: InvolutionSpec = self.minus.involution(config.mu)
        self.mu = config.mu

    def sigma(self, value: Any) -> Any:
        return self.involution.apply(value)

    # Parameters of the slanted edges met by the even positions of the new staircase.
    def ahead(self, params: Sequence[Any], j: int) -> Any:
        """Parameter of the edge from xⱼ to x′ⱼ₊₁ (j even)."""
        if j + 1 < self.n:
            return params[j]
        return self.sigma(params[self.n - 2])

    def behind(self, params: Sequence[Any], j: int) -> Any:
        """Parameter of the edge from xⱼ to x′ⱼ₋₁ (j even)."""
        if j > 2:
            return params[j - 3]
        return self.sigma(params[0])


def validate_config(config: StripConfig) -> None:
    if config.n < 2:
        raise ConfigError("/n", "strip width must be at least 2")
    for pointer, boundary_id in (("/boundary_minus", config.boundary_minus), ("/boundary_plus", config.boundary_plus)):
        try:
            boundary = get_boundary(boundary_id)
        except KeyError as exc:
            raise ConfigError(pointer, f"unknown boundary equation {boundary_id!r}") from exc
        if boundary.quad_id is not config.quad_id:
            raise ConfigError(pointer, f"{boundary_id} belongs to {boundary.quad_id.value}")
    if get_boundary(config.boundary_minus).kind is not get_boundary(config.boundary_plus).kind:
        raise ConfigError("/boundary_plus", "boundaries use different involutions")
    expected = 1 if config.mode is ModeKind.AUTONOMOUS else config.n - 1
    if len(config.alphas) != expected:
        raise ConfigError("/mode", f"expected {expected} lattice parameter(s), got {len(config.alphas)}")


def expand_params(config: StripConfig) -> Tuple[Fraction, ...]:
    """α₁…α_{n−1}; autonomous mode alternates α and σ(α)."""
    if config.mode is ModeKind.GENERAL:
        return tuple(config.alphas)
    alpha = config.alphas[0]
    flipped = get_boundary(config.boundary_minus).involution(config.mu).apply(alpha)
    return tuple(alpha if j % 2 == 1 else flipped for j in range(1, config.n))


def initial_state(config: StripConfig, fields: Sequence[Fraction]) -> StripState:
    if len(fields) != config.n:
        raise ConfigError("/initial", f"expected {config.n} initial values, got {len(fields)}")
    return StripState(tuple(Fraction(x) for x in fields), expand_params(config), 0)


def _updated_params(model: StripModel, params: Sequence[Any]) -> Tuple[Any, ...]:
    n = model.n
    updated: List[Any] = []
    for j in range(1, n):
        even = j if j % 2 == 0 else j + 1
        if even == n:
            updated.append(model.sigma(model.behind(params, n)))
        elif even == j + 1:
            updated.append(model.ahead(params, even))
        else:
            updated.append(model.behind(params, even))
    return tuple(updated)


def update_params(config: StripConfig, params: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    """Lattice parameters of the staircase after one upward step."""
    return _updated_params(StripModel(config), params)


def restore_params(config: StripConfig, params: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    """Inverse of :func:`update_params`; the update has period n − 1."""
    model = StripModel(config)
    restored = tuple(params)
    for _ in range(config.n - 2):
        restored = _updated_params(model, restored)
    return restored


def _guarded(step: int, face: str, solve: Callable[[], Any]) -> Any:
    try:
        return solve()
    except LatticeMapsError as exc:
        raise SingularOrbitError(step, face, exc) from exc
    except ZeroDivisionError as exc:
        raise SingularOrbitError(step, face) from exc


def _step_up(model: StripModel, state: StripState) -> StripState:
    n = model.n
    x = (None,) + state.fields
    a = state.params
    new: List[Any] = [None] * (n + 1)
    step = state.step

    new[1] = _guarded(step, "boundary-minus", lambda: boundary_solve(model.minus, x[1], x[2], a[0], model.mu))
    for j in range(3, n, 2):
        new[j] = _guarded(
            step, f"quad-{j}", lambda j=j: corner_solve(model.quad, x[j], x[j + 1], x[j - 1], a[j - 1], a[j - 2])
        )
    if n % 2 == 1:
        new[n] = _guarded(
            step, "boundary-plus", lambda: boundary_solve(model.plus, x[n], x[n - 1], a[n - 2], model.mu)
        )
    for j in range(2, n, 2):
        new[j] = _guarded(
            step,
            f"quad-{j}",
            lambda j=j: corner_solve(
                model.quad, x[j], new[j + 1], new[j - 1], model.ahead(a, j), model.behind(a, j)
            ),
        )
    if n % 2 == 0:
        new[n] = _guarded(
            step,
            "boundary-plus",
            lambda: boundary_solve(model.plus, x[n], new[n - 1], model.behind(a, n), model.mu),
        )
    params = _guarded(step, "involution", lambda: _updated_params(model, a))
    return StripState(tuple(new[1:]), params, step + 1)


def step_up(config: StripConfig, state: StripState) -> StripState:
    return _step_up(StripModel(config), state)


def _step_down(model: StripModel, state: StripState) -> StripState:
    n = model.n
    new = (None,) + state.fields
    restored = state.params
    for _ in range(n - 2):
        restored = _updated_params(model, restored)
    a = restored
    x: List[Any] = [None] * (n + 1)
    step = state.step
    quad = model.quad

    def bulk(u_new: Any, ut: Any, uh: Any, alpha: Any, beta: Any) -> Any:
        return solve_affine(lambda u, b, c, d: quad.evaluate(u, b, c, d, alpha, beta), (None, ut, uh, u_new), 0)

    def edge(spec: BoundaryEquationSpec, y: Any, z: Any, alpha: Any) -> Any:
        return solve_affine(
            lambda u, b, c: spec.evaluator(u, b, c, alpha, model.mu), (None, y, z), 0, code="degenerate-boundary"
        )

    for j in range(2, n, 2):
        x[j] = _guarded(
            step, f"quad-{j}", lambda j=j: bulk(new[j], new[j + 1], new[j - 1], model.ahead(a, j), model.behind(a, j))
        )
    if n % 2 == 0:
        x[n] = _guarded(step, "boundary-plus", lambda: edge(model.plus, new[n - 1], new[n], model.behind(a, n)))
    for j in range(3, n, 2):
        x[j] = _guarded(step, f"quad-{j}", lambda j=j: bulk(new[j], x[j + 1], x[j - 1], a[j - 1], a[j - 2]))
    x[1] = _guarded(step, "boundary-minus", lambda: edge(model.minus, x[2], new[1], a[0]))
    if n % 2 == 1:
        x[n] = _guarded(step, "boundary-plus", lambda: edge(model.plus, x[n - 1], new[n], a[n - 2]))
    return StripState(tuple(x[1:]), tuple(a), step - 1)


def step_down(config: StripConfig, state: StripState) -> StripState:
    """Undo one upward step by solving the same equations for the old corners."""
    return _step_down(StripModel(config), state)


def staircase_residuals(config: StripConfig, before: StripState, after: StripState) -> List[Tuple[str, Fraction]]:
    """Every equation used by the step, re-evaluated on the two staircases."""
    model = StripModel(config)
    n = model.n
    x = (None,) + before.fields
    new = (None,) + after.fields
    a = before.params
    residuals = [("boundary-minus", boundary_eval(model.minus, x[1], x[2], new[1], a[0], model.mu))]
    for j in range(3, n, 2):
        residuals.append((f"quad-{j}", quad_eval(model.quad, x[j], x[j + 1], x[j - 1], new[j], a[j - 1], a[j - 2])))
    for j in range(2, n, 2):
        residuals.append(
            (
                f"quad-{j}",
                quad_eval(model.quad, x[j], new[j + 1], new[j - 1], new[j], model.ahead(a, j), model.behind(a, j)),
            )
        )
    if n % 2 == 1:
        residuals.append(("boundary-plus", boundary_eval(model.plus, x[n], x[n - 1], new[n], a[n - 2], model.mu)))
    else:
        residuals.append(
            ("boundary-plus", boundary_eval(model.plus, x[n], new[n - 1], new[n], model.behind(a, n), model.mu))
        )
    return residuals


def iterate(config: StripConfig, state: StripState, steps: int) -> OrbitRecord:
    """Apply :func:`step_up` ``steps`` times, stopping at the first singular point."""
    model = StripModel(config)
    record = OrbitRecord(states=[state])
    for _ in range(steps):
        try:
            record.states.append(_step_up(model, record.last))
        except SingularOrbitError as exc:
            logger.warning("orbit singular at step %s (%s)", exc.step, exc.face)
            record.singular_at = (exc.step, exc.face)
            break
        logger.debug("step %s: %s", record.last.step, record.last.fields)
    return record


def autonomous_power(config: StripConfig, state: StripState) -> StripState:
    """The (n − 1)-th iterate, after which the lattice parameters are back."""
    model = StripModel(config)
    for _ in range(config.n - 1):
        state = _step_up(model, state)
    return state


def reseed(state: StripState) -> StripState:
    """Shift every field numerator by one."""
    return replace(state, fields=tuple(Fraction(x.numerator + 1, x.denominator) for x in state.fields))


def iterate_with_reseed(
    config: StripConfig, state: StripState, steps: int, max_reseeds: int = MAX_RESEEDS
) -> OrbitRecord:
    """Like :func:`iterate` but restarts from a reseeded state at singular points.

    The reseeded state replaces the last recorded one, so consecutive states are
    still one step apart; ``restarts`` lists the steps where this happened.
    """
    model = StripModel(config)
    record = OrbitRecord(states=[state])
    while len(record.states) <= steps:
        try:
            record.states.append(_step_up(model, record.last))
        except SingularOrbitError as exc:
            if len(record.restarts) >= max_reseeds:
                record.singular_at = (exc.step, exc.face)
                logger.warning("giving up after %s reseeds at step %s", max_reseeds, exc.step)
                break
            logger.info("reseeding at step %s (%s)", exc.step, exc.face)
            record.restarts.append(exc.step)
            record.states[-1] = reseed(record.last)
    return record


def general_from_autonomous(config: StripConfig) -> StripConfig:
    """Same strip with the autonomous parameters spelled out edge by edge."""
    return config.with_general(expand_params(config))
