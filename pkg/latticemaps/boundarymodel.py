"""Integrable boundary equations, their duals and boundary matrices.

Every entry pairs a boundary equation q(x, y, z; α) = 0 on the boundary
triangle with its dual p(y, x, c; λ) = 0, the boundary matrix K(x; λ) read off
from the dual and the sign ε of the boundary zero curvature relation. The
lattice parameter on the far edge of a triangle is σ(α) for the involution σ of
the entry's family.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from latticemaps.errors import DegenerateError, ExactArithmeticError
from latticemaps.exact import lam
from latticemaps.models import InvolutionKind, QuadId
from latticemaps.quadmodel import (
    Matrix2,
    QuadEquation,
    ScaledMatrix,
    affine_parts,
    corner_solve,
    get_quad,
    lax_matrix,
    solve_affine,
)
from latticemaps.sampling import RationalSampler

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InvolutionSpec:
    kind: InvolutionKind
    mu: Fraction

    def apply(self, alpha: Any) -> Any:
        if self.kind is InvolutionKind.ADDITIVE:
            return 2 * self.mu - alpha
        if alpha == 0:
            raise ExactArithmeticError("involution-pole", "multiplicative involution at 0")
        return self.mu * self.mu / alpha

    @property
    def fixed_point(self) -> Fraction:
        return self.mu


def sigma_apply(inv: InvolutionSpec, alpha: Any) -> Any:
    return inv.apply(alpha)


Evaluator = Callable[[Any, Any, Any, Any, Fraction], Any]
BoundaryMatrixBuilder = Callable[[Any, Any, Fraction], Tuple[Matrix2, Any]]
Z2Factor = Callable[[Any, Any, Fraction], Any]


@dataclass(frozen=True)
class BoundaryEquationSpec:
    """One row of the boundary registry.

    ``evaluator(x, y, z, α, μ)`` is q, ``dual(y, x, c, λ, μ)`` is p and
    ``boundary_matrix(x, λ, μ)`` returns the core and scalar of K. Reflecting
    entries have q = x + z, so x² is carried over by the boundary step.
    """

    boundary_id: str
    quad_id: QuadId
    kind: InvolutionKind
    evaluator: Evaluator
    dual: Evaluator
    boundary_matrix: BoundaryMatrixBuilder
    epsilon: int
    z2_factor: Z2Factor
    reflecting: bool = False
    description: str = ""

    def involution(self, mu: Fraction) -> InvolutionSpec:
        return InvolutionSpec(self.kind, Fraction(mu))

    @property
    def quad(self) -> QuadEquation:
        return get_quad(self.quad_id)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.boundary_id,
            "equation": self.quad_id.value,
            "involution": self.kind.value,
            "epsilon": self.epsilon,
            "reflecting": self.reflecting,
            "q": self.description,
        }


def _diag_flip(x: Any, spectral: Any, mu: Fraction) -> Tuple[Matrix2, Any]:
    return ((Fraction(-1), Fraction(0)), (Fraction(0), Fraction(1))), Fraction(1)


def _h1_xz_matrix(x: Any, spectral: Any, mu: Fraction) -> Tuple[Matrix2, Any]:
    return ((Fraction(1), (mu - spectral) / x), (Fraction(0), Fraction(1))), Fraction(1)


def _q1add_row2_matrix(x: Any, spectral: Any, mu: Fraction) -> Tuple[Matrix2, Any]:
    shift = spectral - mu
    return ((mu, shift * x), (shift / x, mu)), 1 / spectral


def _q1mult_row1_matrix(x: Any, spectral: Any, mu: Fraction) -> Tuple[Matrix2, Any]:
    l2 = spectral * spectral
    return ((-l2, (l2 + mu * mu) * x), (Fraction(0), mu * mu)), 1 / (spectral * mu)


def _q1mult_row2_matrix(x: Any, spectral: Any, mu: Fraction) -> Tuple[Matrix2, Any]:
    l2 = spectral * spectral
    return ((l2, (mu * mu - l2) * x), (Fraction(0), mu * mu)), 1 / (spectral * mu)


def _q1mult_row3_matrix(x: Any, spectral: Any, mu: Fraction) -> Tuple[Matrix2, Any]:
    l2 = spectral * spectral
    return ((mu * mu * x, Fraction(0)), (l2 + mu * mu, -l2 * x)), -1 / (spectral * mu * x)


def _q1mult_row4_matrix(x: Any, spectral: Any, mu: Fraction) -> Tuple[Matrix2, Any]:
    l2 = spectral * spectral
    return ((-mu * mu * x, Fraction(0)), (l2 - mu * mu, -l2 * x)), -1 / (spectral * mu * x)


def _constant(value: int) -> Z2Factor:
    return lambda alpha, beta, mu: Fraction(value)


def _mult_ratio(sign: int) -> Z2Factor:
    return lambda alpha, beta, mu: sign * alpha * alpha / (mu * mu)


BOUNDARY_EQUATIONS: Dict[str, BoundaryEquationSpec] = {
    spec.boundary_id: spec
    for spec in (
        BoundaryEquationSpec(
            boundary_id="h1_yzx",
            quad_id=QuadId.H1,
            kind=InvolutionKind.ADDITIVE,
            evaluator=lambda x, y, z, a, mu: y * (z - x) + a - mu,
            dual=lambda y, x, c, s, mu: y + c,
            boundary_matrix=_diag_flip,
            epsilon=1,
            z2_factor=_constant(-1),
            description="y(z-x)+alpha-mu",
        ),
        BoundaryEquationSpec(
            boundary_id="h1_xz",
            quad_id=QuadId.H1,
            kind=InvolutionKind.ADDITIVE,
            evaluator=lambda x, y, z, a, mu: x + z,
            dual=lambda y, x, c, s, mu: x * (y - c) + mu - s,
            boundary_matrix=_h1_xz_matrix,
            epsilon=-1,
            z2_factor=_constant(1),
            reflecting=True,
            description="x+z",
        ),
        BoundaryEquationSpec(
            boundary_id="q1add_row1",
            quad_id=QuadId.Q1_ADD,
            kind=InvolutionKind.ADDITIVE,
            evaluator=lambda x, y, z, a, mu: a * (x * z - y * y) - mu * (x - y) * (y + z),
            dual=lambda y, x, c, s, mu: y + c,
            boundary_matrix=_diag_flip,
            epsilon=1,
            z2_factor=_constant(-1),
            description="alpha(xz-y^2)-mu(x-y)(y+z)",
        ),
        BoundaryEquationSpec(
            boundary_id="q1add_row2",
            quad_id=QuadId.Q1_ADD,
            kind=InvolutionKind.ADDITIVE,
            evaluator=lambda x, y, z, a, mu: x + z,
            dual=lambda y, x, c, s, mu: s * (x * x - c * y) + mu * (c + x) * (y - x),
            boundary_matrix=_q1add_row2_matrix,
            epsilon=-1,
            z2_factor=_constant(1),
            reflecting=True,
            description="x+z",
        ),
        BoundaryEquationSpec(
            boundary_id="q1mult_row1",
            quad_id=QuadId.Q1_MULT,
            kind=InvolutionKind.MULTIPLICATIVE,
            evaluator=lambda x, y, z, a, mu: a * a * (x - y) + mu * mu * (y - z),
            dual=lambda y, x, c, s, mu: s * s * (y - x) - mu * mu * (x - c),
            boundary_matrix=_q1mult_row1_matrix,
            epsilon=1,
            z2_factor=_mult_ratio(-1),
            description="alpha^2(x-y)+mu^2(y-z)",
        ),
        BoundaryEquationSpec(
            boundary_id="q1mult_row2",
            quad_id=QuadId.Q1_MULT,
            kind=InvolutionKind.MULTIPLICATIVE,
            evaluator=lambda x, y, z, a, mu: a * a * (x - y) - mu * mu * (y - z),
            dual=lambda y, x, c, s, mu: s * s * (y - x) + mu * mu * (x - c),
            boundary_matrix=_q1mult_row2_matrix,
            epsilon=-1,
            z2_factor=_mult_ratio(1),
            description="alpha^2(x-y)-mu^2(y-z)",
        ),
        BoundaryEquationSpec(
            boundary_id="q1mult_row3",
            quad_id=QuadId.Q1_MULT,
            kind=InvolutionKind.MULTIPLICATIVE,
            evaluator=lambda x, y, z, a, mu: a * a * (x - y) * z + mu * mu * (y - z) * x,
            dual=lambda y, x, c, s, mu: s * s * (y - x) * c - mu * mu * (x - c) * y,
            boundary_matrix=_q1mult_row3_matrix,
            epsilon=1,
            z2_factor=_mult_ratio(-1),
            description="alpha^2(x-y)z+mu^2(y-z)x",
        ),
        BoundaryEquationSpec(
            boundary_id="q1mult_row4",
            quad_id=QuadId.Q1_MULT,
            kind=InvolutionKind.MULTIPLICATIVE,
            evaluator=lambda x, y, z, a, mu: a * a * (x - y) * z - mu * mu * (y - z) * x,
            dual=lambda y, x, c, s, mu: s * s * (y - x) * c + mu * mu * (x - c) * y,
            boundary_matrix=_q1mult_row4_matrix,
            epsilon=-1,
            z2_factor=_mult_ratio(1),
            description="alpha^2(x-y)z-mu^2(y-z)x",
        ),
    )
}


def get_boundary(boundary_id: str) -> BoundaryEquationSpec:
    try:
        return BOUNDARY_EQUATIONS[boundary_id]
    except KeyError as exc:
        raise KeyError(f"unknown boundary equation {boundary_id!r}") from exc


def boundaries_for(quad_id: QuadId) -> List[BoundaryEquationSpec]:
    return [spec for spec in BOUNDARY_EQUATIONS.values() if spec.quad_id is quad_id]


def boundary_eval(spec: BoundaryEquationSpec, x: Any, y: Any, z: Any, alpha: Any, mu: Fraction) -> Any:
    return spec.evaluator(x, y, z, alpha, mu)


def boundary_solve(
    spec: BoundaryEquationSpec, x: Any, y: Any, alpha: Any, mu: Fraction, face: Optional[str] = None
) -> Any:
    """z with q(x, y, z; α) = 0."""
    return solve_affine(
        lambda a, b, c: spec.evaluator(a, b, c, alpha, mu),
        (x, y, None),
        2,
        code="degenerate-boundary",
        face=face or spec.boundary_id,
    )


def dual_solve(
    spec: BoundaryEquationSpec, y: Any, x: Any, spectral: Any, mu: Fraction, face: Optional[str] = None
) -> Any:
    """c with p(y, x, c; λ) = 0."""
    return solve_affine(
        lambda a, b, c: spec.dual(a, b, c, spectral, mu),
        (y, x, None),
        2,
        code="degenerate-dual",
        face=face or f"{spec.boundary_id}/dual",
    )


def boundary_matrix(spec: BoundaryEquationSpec, x: Any, mu: Fraction, spectral: Any = None) -> ScaledMatrix:
    """K(x; λ) from the registry, at symbolic λ unless ``spectral`` is given."""
    if spectral is None:
        spectral = lam()
    try:
        core, scalar = spec.boundary_matrix(x, spectral, Fraction(mu))
    except (ZeroDivisionError, ExactArithmeticError) as exc:
        raise DegenerateError("degenerate-boundary", f"K({x}) for {spec.boundary_id}") from exc
    return ScaledMatrix.build(core, scalar)


def boundary_matrix_from_dual(spec: BoundaryEquationSpec, x: Any, mu: Fraction) -> ScaledMatrix:
    """Möbius matrix of c = K[y] from p(y, x, c; λ) = 0, scaled to the registry K."""
    spectral = lam()

    def p(y: Any, c: Any) -> Any:
        return spec.dual(y, x, c, spectral, mu)

    b0 = p(Fraction(0), Fraction(0))
    a0 = p(Fraction(0), Fraction(1)) - b0
    b1 = p(Fraction(1), Fraction(0)) - b0
    a1 = p(Fraction(1), Fraction(1)) - b0 - a0 - b1
    if a0 == 0 and a1 == 0:
        raise DegenerateError("degenerate-dual", f"{spec.boundary_id} is not solvable for c")
    core: Matrix2 = ((-b1, -b0), (a1, a0))
    if core[0][0] * core[1][1] - core[0][1] * core[1][0] == 0:
        raise DegenerateError("degenerate-dual", f"{spec.boundary_id} gives a singular Möbius map")
    stored = boundary_matrix(spec, x, mu).entries()
    ratio: Any = Fraction(1)
    for i in range(2):
        for j in range(2):
            if core[i][j] != 0 and stored[i][j] != 0:
                ratio = stored[i][j] / core[i][j]
                break
        else:
            continue
        break
    return ScaledMatrix.build(core, ratio)


def check_dual_matches_k(spec: BoundaryEquationSpec, x: Any, mu: Fraction) -> bool:
    derived = boundary_matrix_from_dual(spec, x, mu)
    stored = boundary_matrix(spec, x, mu)
    return derived.equals(stored)


def check_k_involution(
    spec: BoundaryEquationSpec, x: Any, mu: Fraction, matrix: Optional[BoundaryMatrixBuilder] = None
) -> bool:
    """K(x; λ)K(x; σ(λ)) = id as an identity in λ."""
    if matrix is not None:
        spec = _with_matrix(spec, matrix)
    spectral = lam()
    inv = spec.involution(mu)
    product = boundary_matrix(spec, x, mu, spectral) @ boundary_matrix(spec, x, mu, inv.apply(spectral))
    return product.is_scalar_identity(1)


def _with_matrix(spec: BoundaryEquationSpec, matrix: BoundaryMatrixBuilder) -> BoundaryEquationSpec:
    return replace(spec, boundary_matrix=matrix)


def boundary_matrix_determinant(spec: BoundaryEquationSpec, x: Any, mu: Fraction) -> Any:
    return boundary_matrix(spec, x, mu).determinant()


def check_z2_symmetry(spec: BoundaryEquationSpec, sampler: RationalSampler, samples: int = 20) -> bool:
    """q(x,y,z;α) = h(α,σα)·q(z,y,x;σα) with h(α,β)h(β,α) = 1."""

    def attempt(draw: RationalSampler) -> bool:
        x, y, z = draw.rats(3)
        mu = draw.rat(nonzero=True)
        alpha = draw.rat(nonzero=True)
        beta = spec.involution(mu).apply(alpha)
        if beta == 0:
            raise DegenerateError("degenerate-boundary", "σ(α) = 0")
        h = spec.z2_factor(alpha, beta, mu)
        forward = spec.evaluator(x, y, z, alpha, mu)
        mirrored = spec.evaluator(z, y, x, beta, mu)
        return forward == h * mirrored and h * spec.z2_factor(beta, alpha, mu) == 1

    return all(sampler.attempt(attempt) for _ in range(samples))


@dataclass
class DualityResult:
    holds: bool
    chi_samples: List[Any] = field(default_factory=list)
    eliminations: Dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "chi_samples": [str(chi) for chi in self.chi_samples],
            "eliminations": dict(self.eliminations),
        }


def _constant_ratio(numerators: Sequence[Any], denominators: Sequence[Any]) -> Tuple[bool, Optional[Any]]:
    """Whether numerators/denominators is one value; zero pairs are skipped."""
    ratio = None
    for top, bottom in zip(numerators, denominators):
        if bottom == 0:
            if top != 0:
                return False, None
            continue
        value = top / bottom
        if ratio is None:
            ratio = value
        elif value != ratio:
            return False, None
    return ratio is not None, ratio


def _duality_sample(
    spec: BoundaryEquationSpec, quad: QuadEquation, draw: RationalSampler
) -> Tuple[bool, Any, Dict[str, bool]]:
    mu = draw.rat(nonzero=True)
    alpha = draw.rat(nonzero=True)
    beta = spec.involution(mu).apply(alpha)
    x, y, z0, c0 = draw.rats(4)
    varied = draw.rats(3, distinct=True)

    def q(a: Any, b: Any, c: Any) -> Any:
        return spec.evaluator(a, b, c, alpha, mu)

    def p(a: Any, b: Any, c: Any) -> Any:
        return spec.dual(a, b, c, alpha, mu)

    def big_q(u: Any, ut: Any, uh: Any, w: Any) -> Any:
        return quad.evaluate(u, ut, uh, w, alpha, beta)

    q1, _ = affine_parts(q, (x, y, None), 2, "degenerate-boundary")
    z = boundary_solve(spec, x, y, alpha, mu)
    holds, chi = _constant_ratio(
        [q1 * big_q(x, y, c, z) for c in varied], [p(y, x, c) for c in varied]
    )

    eliminations: Dict[str, bool] = {}
    # eliminate x through q, vary c
    q3, _ = affine_parts(q, (None, y, z0), 0, "degenerate-boundary")
    xs = solve_affine(q, (None, y, z0), 0, code="degenerate-boundary")
    eliminations["x"], _ = _constant_ratio(
        [q3 * big_q(xs, y, c, z0) for c in varied], [p(c, z0, y) for c in varied]
    )
    # eliminate c through p, vary z
    p1, _ = affine_parts(p, (y, x, None), 2, "degenerate-dual")
    cs = solve_affine(p, (y, x, None), 2, code="degenerate-dual")
    eliminations["c"], _ = _constant_ratio(
        [p1 * big_q(x, y, cs, zz) for zz in varied], [q(x, y, zz) for zz in varied]
    )
    # eliminate y through p, vary z
    p3, _ = affine_parts(p, (None, x, c0), 0, "degenerate-dual")
    ys = solve_affine(p, (None, x, c0), 0, code="degenerate-dual")
    eliminations["y"], _ = _constant_ratio(
        [p3 * big_q(x, ys, c0, zz) for zz in varied], [q(zz, c0, x) for zz in varied]
    )
    return holds, chi, eliminations


def verify_duality(
    spec: BoundaryEquationSpec, samples: int = 100, sampler: Optional[RationalSampler] = None
) -> DualityResult:
    """Randomised check that the dual p divides q₁·Q with z eliminated through q."""
    sampler = sampler or RationalSampler()
    quad = spec.quad
    result = DualityResult(holds=True, eliminations={"x": True, "c": True, "y": True})
    for _ in range(samples):
        holds, chi, eliminations = sampler.attempt(lambda draw: _duality_sample(spec, quad, draw))
        result.holds = result.holds and holds
        if chi is not None:
            result.chi_samples.append(chi)
        for part, ok in eliminations.items():
            result.eliminations[part] = result.eliminations[part] and ok
    logger.debug("duality %s: holds=%s eliminations=%s", spec.boundary_id, result.holds, result.eliminations)
    return result


@dataclass
class RouteResult:
    consistent: bool
    value: Optional[Any]
    routes: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "consistent": self.consistent,
            "value": None if self.value is None else str(self.value),
            "routes": {name: str(value) for name, value in self.routes.items()},
        }


def _route_result(routes: Dict[str, Any]) -> RouteResult:
    consistent = len(set(routes.values())) == 1
    return RouteResult(consistent, next(iter(routes.values())) if consistent else None, routes)


def check_boundary_consistency(
    spec: BoundaryEquationSpec,
    x: Any,
    y: Any,
    u: Any,
    alpha: Any,
    spectral: Any,
    mu: Fraction,
    sigma: Optional[Callable[[Any], Any]] = None,
) -> RouteResult:
    """Compute the apex t of the boundary half-cube along its three routes."""
    sigma = sigma or spec.involution(mu).apply
    quad = spec.quad
    beta = sigma(alpha)
    eta = sigma(spectral)
    z = boundary_solve(spec, x, y, alpha, mu, face="base-triangle")
    v = corner_solve(quad, x, y, u, alpha, spectral, face="front-quad")
    r = boundary_solve(spec, x, u, spectral, mu, face="side-triangle")
    w = corner_solve(quad, y, z, v, beta, spectral, face="back-quad")
    s = corner_solve(quad, u, v, r, alpha, eta, face="side-quad")
    routes = {
        "back-triangle": boundary_solve(spec, z, w, spectral, mu, face="back-triangle"),
        "top-triangle": boundary_solve(spec, r, s, alpha, mu, face="top-triangle"),
        "top-quad": corner_solve(quad, v, w, s, beta, eta, face="top-quad"),
    }
    return _route_result(routes)


def check_dual_boundary_consistency(
    spec: BoundaryEquationSpec,
    x: Any,
    y: Any,
    u: Any,
    alpha: Any,
    spectral: Any,
    mu: Fraction,
    sigma: Optional[Callable[[Any], Any]] = None,
) -> RouteResult:
    """Compute e on the dual half-cube by the q-first and p-first routes."""
    sigma = sigma or spec.involution(mu).apply
    quad = spec.quad
    beta = sigma(alpha)
    eta = sigma(spectral)
    v = corner_solve(quad, x, y, u, spectral, alpha, face="front-quad")
    r = boundary_solve(spec, x, u, alpha, mu, face="side-triangle")
    s = corner_solve(quad, u, v, r, spectral, beta, face="side-quad")
    via_q = dual_solve(spec, s, r, spectral, mu, face="top-dual")
    c = dual_solve(spec, y, x, spectral, mu, face="base-dual")
    d = corner_solve(quad, x, c, u, eta, alpha, face="back-quad")
    via_p = corner_solve(quad, u, d, r, eta, beta, face="top-quad")
    return _route_result({"q-first": via_q, "p-first": via_p})


def boundary_zcc_sides(
    spec: BoundaryEquationSpec,
    x: Any,
    u: Any,
    alpha: Any,
    mu: Fraction,
    epsilon: Optional[int] = None,
) -> Tuple[ScaledMatrix, ScaledMatrix]:
    quad = spec.quad
    inv = spec.involution(mu)
    epsilon = spec.epsilon if epsilon is None else epsilon
    r = boundary_solve(spec, x, u, alpha, mu)
    spectral = lam()
    flipped = inv.apply(spectral)
    beta = inv.apply(alpha)
    lhs = (
        lax_matrix(quad, r, u, beta, mu, flipped)
        @ lax_matrix(quad, u, x, alpha, mu, flipped)
        @ boundary_matrix(spec, x, mu, spectral)
    )
    rhs = (
        boundary_matrix(spec, r, mu, spectral)
        @ lax_matrix(quad, r, u, beta, mu, spectral)
        @ lax_matrix(quad, u, x, alpha, mu, spectral)
    ).scale(epsilon)
    return lhs, rhs


def check_boundary_zcc(
    spec: BoundaryEquationSpec, x: Any, u: Any, alpha: Any, mu: Fraction, epsilon: Optional[int] = None
) -> bool:
    lhs, rhs = boundary_zcc_sides(spec, x, u, alpha, mu, epsilon)
    return lhs.equals(rhs)


def cross_check_epsilon(spec: BoundaryEquationSpec, x: Any, u: Any, alpha: Any, mu: Fraction) -> Optional[int]:
    """The unique sign for which the boundary zero curvature relation holds, else None."""
    passing = [sign for sign in (1, -1) if check_boundary_zcc(spec, x, u, alpha, mu, sign)]
    if len(passing) != 1:
        logger.warning("epsilon cross-check for %s found %s", spec.boundary_id, passing)
        return None
    return passing[0]


def sample_boundary_point(spec: BoundaryEquationSpec, draw: RationalSampler) -> Dict[str, Fraction]:
    """Random admissible (x, y, u, α, λ, μ) for the half-cube checks."""
    x, y, u = draw.rats(3, nonzero=True, distinct=True)
    mu = draw.rat(nonzero=True)
    alpha, spectral = draw.rats(2, nonzero=True, distinct=True)
    inv = spec.involution(mu)
    for value in (alpha, spectral):
        if value == mu or inv.apply(value) == 0:
            raise DegenerateError("degenerate-boundary", "parameter at the involution fixed point")
    return {"x": x, "y": y, "u": u, "alpha": alpha, "spectral": spectral, "mu": mu}
