"""Execution of a validated :class:`RunConfig` for each CLI verb."""

from __future__ import annotations

import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple, Union

from latticemaps.boundarymodel import (
    BOUNDARY_EQUATIONS,
    BoundaryEquationSpec,
    boundaries_for,
    check_boundary_consistency,
    check_boundary_zcc,
    check_dual_boundary_consistency,
    check_dual_matches_k,
    check_k_involution,
    check_z2_symmetry,
    sample_boundary_point,
    verify_duality,
)
from latticemaps.config import RunConfig
from latticemaps.errors import ConfigError, LatticeMapsError
from latticemaps.exact import format_rat
from latticemaps.gallery import GALLERY, gallery_crosscheck, list_gallery
from latticemaps.models import Command, ModeKind, OutputFormat, QuadId, StripConfig, StripState
from latticemaps.monodromy import (
    boundary_squares,
    check_conjugation,
    coefficient_orbit,
    double_row,
    epsilon_product,
    extract_invariants,
)
from latticemaps.quadmodel import (
    QUAD_EQUATIONS,
    QuadEquation,
    check_3d_consistency,
    check_symmetries,
    check_zero_curvature,
    corner_solve,
)
from latticemaps.reports import ReportWriter, render_csv, render_json
from latticemaps.sampling import RationalSampler
from latticemaps.strip import initial_state, iterate, iterate_with_reseed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

CONJUGATION_WIDTHS = (2, 3, 4, 5)
CONJUGATION_SEEDS = 20


@dataclass
class RunResult:
    passed: bool
    payload: Dict[str, Any]
    header: List[str] = field(default_factory=list)
    rows: List[List[str]] = field(default_factory=list)


def _repeat(sampler: RationalSampler, samples: int, check: Callable[[RationalSampler], bool]) -> bool:
    return all(sampler.attempt(check) for _ in range(samples))


def _cube(spec: QuadEquation) -> Callable[[RationalSampler], bool]:
    def check(draw: RationalSampler) -> bool:
        u, ut, uh, v = draw.rats(4, distinct=True)
        alpha, beta, spectral = draw.rats(3, nonzero=True, distinct=True)
        return check_3d_consistency(spec, u, ut, uh, v, alpha, beta, spectral).consistent

    return check


def _zero_curvature(spec: QuadEquation) -> Callable[[RationalSampler], bool]:
    def check(draw: RationalSampler) -> bool:
        u, ut, uh = draw.rats(3, distinct=True)
        alpha, beta, mu = draw.rats(3, nonzero=True, distinct=True)
        corner_solve(spec, u, ut, uh, alpha, beta)
        return check_zero_curvature(spec, u, ut, uh, alpha, beta, mu, samples=draw.rats(2))

    return check


def _half_cube(
    spec: BoundaryEquationSpec, check: Callable[..., Any]
) -> Callable[[RationalSampler], bool]:
    def run(draw: RationalSampler) -> bool:
        point = sample_boundary_point(spec, draw)
        return check(spec, **point).consistent

    return run


def _k_involution(spec: BoundaryEquationSpec) -> Callable[[RationalSampler], bool]:
    def check(draw: RationalSampler) -> bool:
        x, mu = draw.rats(2, nonzero=True)
        return check_k_involution(spec, x, mu) and check_dual_matches_k(spec, x, mu)

    return check


def _boundary_zcc(spec: BoundaryEquationSpec) -> Callable[[RationalSampler], bool]:
    def check(draw: RationalSampler) -> bool:
        point = sample_boundary_point(spec, draw)
        return check_boundary_zcc(spec, point["x"], point["u"], point["alpha"], point["mu"])

    return check


def strip_pairs() -> List[Tuple[BoundaryEquationSpec, BoundaryEquationSpec]]:
    """Every (minus, plus) boundary pair that shares an equation and an involution."""
    pairs = []
    for minus in BOUNDARY_EQUATIONS.values():
        for plus in boundaries_for(minus.quad_id):
            if plus.kind is minus.kind:
                pairs.append((minus, plus))
    return pairs


def _conjugation(minus: BoundaryEquationSpec, plus: BoundaryEquationSpec, n: int) -> Callable[[RationalSampler], bool]:
    def check(draw: RationalSampler) -> bool:
        mu = draw.rat(nonzero=True)
        alphas = tuple(draw.rats(n - 1, nonzero=True, distinct=True))
        config = StripConfig(minus.quad_id, minus.boundary_id, plus.boundary_id, n, mu, ModeKind.GENERAL, alphas)
        state = initial_state(config, draw.rats(n, nonzero=True, distinct=True))
        return check_conjugation(config, state)

    return check


SUITES = (
    "symmetries",
    "consistency",
    "zero-curvature",
    "duality",
    "z2-symmetry",
    "k-involution",
    "boundary-consistency",
    "dual-consistency",
    "boundary-zcc",
    "conjugation",
)
QUAD_SUITES = ("symmetries", "consistency", "zero-curvature")

SAMPLE_CHUNK = 25
CONJUGATION_CHUNK = 5


@dataclass(frozen=True)
class SuiteTask:
    """One chunk of samples for one registry row, drawn from its own seed."""

    suite: str
    row: str
    seed: int
    samples: int


def suite_rows(suite: str) -> List[str]:
    if suite in QUAD_SUITES:
        return [q.value for q in QUAD_EQUATIONS]
    if suite == "conjugation":
        return [
            f"{minus.boundary_id}|{plus.boundary_id}|n={n}" for minus, plus in strip_pairs() for n in CONJUGATION_WIDTHS
        ]
    if suite in SUITES:
        return list(BOUNDARY_EQUATIONS)
    raise KeyError(f"unknown suite {suite!r}")


def _check_row(suite: str, row: str, sampler: RationalSampler, samples: int) -> bool:
    if suite in QUAD_SUITES:
        quad = QUAD_EQUATIONS[QuadId(row)]
        if suite == "symmetries":
            return check_symmetries(quad, sampler, samples).passed
        if suite == "consistency":
            return _repeat(sampler, samples, _cube(quad))
        return _repeat(sampler, samples, _zero_curvature(quad))
    if suite == "conjugation":
        minus_id, plus_id, width = row.split("|")
        check = _conjugation(BOUNDARY_EQUATIONS[minus_id], BOUNDARY_EQUATIONS[plus_id], int(width[2:]))
        return _repeat(sampler, samples, check)
    spec = BOUNDARY_EQUATIONS[row]
    if suite == "duality":
        result = verify_duality(spec, samples, sampler)
        return result.holds and all(result.eliminations.values())
    if suite == "z2-symmetry":
        return check_z2_symmetry(spec, sampler, samples)
    if suite == "k-involution":
        return _repeat(sampler, samples, _k_involution(spec))
    if suite == "boundary-consistency":
        return _repeat(sampler, samples, _half_cube(spec, check_boundary_consistency))
    if suite == "dual-consistency":
        return _repeat(sampler, samples, _half_cube(spec, check_dual_boundary_consistency))
    if suite == "boundary-zcc":
        return _repeat(sampler, samples, _boundary_zcc(spec))
    raise KeyError(f"unknown suite {suite!r}")


def run_task(task: SuiteTask) -> Union[bool, str]:
    """Run one chunk; a domain error comes back as its code."""
    try:
        return _check_row(task.suite, task.row, RationalSampler(task.seed), task.samples)
    except LatticeMapsError as exc:
        logger.warning("%s/%s aborted: %s", task.suite, task.row, exc)
        return exc.code


def _chunks(total: int, size: int) -> List[int]:
    return [min(size, total - start) for start in range(0, total, size)]


def _suite_tasks(suite: str, sampler: RationalSampler, samples: int) -> List[SuiteTask]:
    """Chunks for every row of ``suite``; seeds are drawn in a fixed order."""
    if suite == "conjugation":
        total, size = min(samples, CONJUGATION_SEEDS), CONJUGATION_CHUNK
    else:
        total, size = samples, SAMPLE_CHUNK
    return [
        SuiteTask(suite, row, sampler.spawn_seed(), chunk)
        for row in suite_rows(suite)
        for chunk in _chunks(total, size)
    ]


def _execute(tasks: Sequence[SuiteTask], workers: int) -> List[Union[bool, str]]:
    if workers <= 1 or len(tasks) <= 1:
        return [run_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_task, tasks))


def run_verify(config: RunConfig) -> RunResult:
    sampler = RationalSampler(config.rng_seed)
    suites = [config.only] if config.only else list(SUITES)
    tasks: List[SuiteTask] = []
    for suite in suites:
        tasks.extend(_suite_tasks(suite, sampler, config.samples))
    logger.info("verify: %s suites, %s tasks on %s workers", len(suites), len(tasks), config.workers)
    outcomes = _execute(tasks, config.workers)

    matrix: Dict[str, Dict[str, Any]] = {suite: {} for suite in suites}
    for task, outcome in zip(tasks, outcomes):
        rows = matrix[task.suite]
        previous = rows.get(task.row, True)
        if previous is not True:
            continue
        rows[task.row] = {"error": outcome} if isinstance(outcome, str) else outcome
    passed = all(value is True for rows in matrix.values() for value in rows.values())
    table = [
        [suite, row, "pass" if ok is True else "fail"] for suite, rows in matrix.items() for row, ok in rows.items()
    ]
    payload = {"samples": config.samples, "matrix": matrix, "passed": passed}
    return RunResult(passed, payload, ["suite", "row", "result"], table)


def _state_columns(config: StripConfig, extra: int) -> List[str]:
    return (
        ["step"]
        + [f"x_{j}" for j in range(1, config.n + 1)]
        + [f"alpha_{j}" for j in range(1, config.n)]
        + [f"inv_{k}" for k in range(extra)]
    )


def _state_row(state: StripState, invariants: Sequence[Fraction]) -> List[str]:
    return (
        [str(state.step)]
        + [format_rat(x) for x in state.fields]
        + [format_rat(a) for a in state.params]
        + [format_rat(v) for v in invariants]
    )


def run_orbit(config: RunConfig) -> RunResult:
    strip = config.strip
    start = initial_state(strip, config.initial)
    if config.reseed:
        record = iterate_with_reseed(strip, start, config.steps)
    else:
        record = iterate(strip, start, config.steps)
    squares = [boundary_squares(strip, s.fields) for s in record.states]
    payload = {"config": strip.to_dict(), **record.to_dict()}
    header = _state_columns(strip, len(squares[0]))
    rows = [_state_row(s, sq) for s, sq in zip(record.states, squares)]
    return RunResult(True, payload, header, rows)


def run_invariants(config: RunConfig) -> RunResult:
    strip = config.strip
    start = initial_state(strip, config.initial)
    report = extract_invariants(double_row(strip, start), RationalSampler(config.rng_seed))
    states, coefficients, stride = coefficient_orbit(strip, start, config.steps)
    sign = epsilon_product(strip)
    drift = [
        [row[i] - sign ** (index * stride) * coefficients[0][i] for i in report.survivors]
        for index, row in enumerate(coefficients)
    ]
    passed = all(value == 0 for row in drift for value in row)
    payload = {
        "config": strip.to_dict(),
        "report": report.to_dict(),
        "stride": stride,
        "drift": [[format_rat(v) for v in row] for row in drift],
        "passed": passed,
    }
    header = _state_columns(strip, len(report.survivors))
    rows = [_state_row(s, [row[i] for i in report.survivors]) for s, row in zip(states, coefficients)]
    return RunResult(passed, payload, header, rows)


def run_gallery(config: RunConfig) -> RunResult:
    if config.gallery_id is None:
        entries = list_gallery()
        rows = [[e["id"], str(e["arity"]), " ".join(e["parameters"]), " ".join(e["laws"])] for e in entries]
        return RunResult(True, {"gallery": entries}, ["id", "arity", "parameters", "laws"], rows)
    report = gallery_crosscheck(config.gallery_id, config.steps, config.gallery_parameters)
    payload = report.to_dict()
    rows = [[str(t)] + [format_rat(v) for v in column] for t, column in enumerate(zip(*report.drift))]
    header = ["step"] + [f"drift_{k}" for k in range(len(report.drift))]
    return RunResult(report.passed, payload, header, rows)


HANDLERS: Dict[Command, Callable[[RunConfig], RunResult]] = {
    Command.VERIFY: run_verify,
    Command.ORBIT: run_orbit,
    Command.INVARIANTS: run_invariants,
    Command.GALLERY: run_gallery,
}


def emit(config: RunConfig, result: RunResult, stream: Optional[TextIO] = None) -> None:
    if config.out is not None:
        writer = ReportWriter(config.out)
        if config.format is OutputFormat.CSV:
            writer.write_csv(result.header, result.rows)
        else:
            writer.write_json(result.payload)
        return
    stream = stream or sys.stdout
    if config.format is OutputFormat.CSV:
        stream.write(render_csv(result.header, result.rows))
    else:
        stream.write(render_json(result.payload))


def validate_run(config: RunConfig) -> None:
    if config.only is not None and config.only not in SUITES:
        raise ConfigError("/only", f"unknown suite {config.only!r}")
    if config.command is Command.GALLERY and config.gallery_id is not None and config.gallery_id not in GALLERY:
        raise ConfigError("/gallery_id", f"unknown gallery map {config.gallery_id!r}")


def run(config: RunConfig, stream: Optional[TextIO] = None) -> int:
    """Execute one verb, write its report and return the exit status."""
    validate_run(config)
    try:
        result = HANDLERS[config.command](config)
    except LatticeMapsError as exc:
        logger.error("%s failed: %s", config.command.value, exc)
        result = RunResult(False, {"error": exc.code, "detail": exc.detail, "passed": False})
    emit(config, result, stream)
    return EXIT_OK if result.passed else EXIT_FAILED
