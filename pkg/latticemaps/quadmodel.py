from __future__ import annotations

import abc
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from latticemaps.errors import DegenerateError, ExactArithmeticError
from latticemaps.exact import RadicalMonomial, RatFun, lam
from latticemaps.models import QuadId
from latticemaps.sampling import RationalSampler

logger = logging.getLogger(__name__)

Matrix2 = Tuple[Tuple[Any, Any], Tuple[Any, Any]]


def _matmul(a: Matrix2, b: Matrix2) -> Matrix2:
    return (
        (a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
        (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]),
    )


def _evaluate_scalar(value: Any, at: Fraction) -> Any:
    return value.evaluate(at) if isinstance(value, RatFun) else value


@dataclass(frozen=True)
class ScaledMatrix:
    """2×2 matrix written as ``scalar * radical * core``.

    The radical part is kept reduced: every exponent is 0 or 1 and the even
    parts have already been multiplied into ``scalar``.
    """

    core: Matrix2
    scalar: Any = Fraction(1)
    radical: RadicalMonomial = field(default_factory=RadicalMonomial)

    @classmethod
    def build(
        cls, core: Matrix2, scalar: Any = Fraction(1), radical: Optional[RadicalMonomial] = None
    ) -> "ScaledMatrix":
        if radical is None:
            return cls(core, scalar, RadicalMonomial())
        factor, residual = radical.reduce()
        return cls(core, scalar * factor, residual)

    @classmethod
    def identity(cls) -> "ScaledMatrix":
        return cls(((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))))

    def __matmul__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        return ScaledMatrix.build(
            _matmul(self.core, other.core), self.scalar * other.scalar, self.radical * other.radical
        )

    def scale(self, value: Any) -> "ScaledMatrix":
        return ScaledMatrix(self.core, self.scalar * value, self.radical)

    def entries(self) -> Matrix2:
        """Scalar multiplied into the core; the radical stays outside."""
        return tuple(tuple(self.scalar * entry for entry in row) for row in self.core)  # type: ignore[return-value]

    def trace(self) -> Any:
        return self.scalar * (self.core[0][0] + self.core[1][1])

    def determinant(self) -> Any:
        factor, _ = (self.radical * self.radical).reduce()
        core_det = self.core[0][0] * self.core[1][1] - self.core[0][1] * self.core[1][0]
        return self.scalar * self.scalar * factor * core_det

    def evaluate(self, at: Fraction) -> "ScaledMatrix":
        squares = {name: _evaluate_scalar(square, at) for name, square in self.radical.squares.items()}
        return ScaledMatrix(
            tuple(tuple(_evaluate_scalar(entry, at) for entry in row) for row in self.core),  # type: ignore[arg-type]
            _evaluate_scalar(self.scalar, at),
            RadicalMonomial(self.radical.exponents, squares),
        )

    def equals(self, other: "ScaledMatrix") -> bool:
        if self.radical.exponents != other.radical.exponents:
            return False
        mine, theirs = self.entries(), other.entries()
        return all(mine[i][j] == theirs[i][j] for i in range(2) for j in range(2))

    def is_scalar_identity(self, value: Any = 1) -> bool:
        if not self.radical.is_rational:
            return False
        entries = self.entries()
        return (
            entries[0][0] == value
            and entries[1][1] == value
            and entries[0][1] == 0
            and entries[1][0] == 0
        )


def spectral_radical(square: Any) -> RadicalMonomial:
    """``1/sqrt(square)`` with the symbol named after its radicand."""
    return RadicalMonomial.symbol(f"s[{square}]", square, -1)


def affine_parts(
    fn: Callable[..., Any],
    args: Sequence[Any],
    slot: int,
    code: str = "degenerate-corner",
    face: Optional[str] = None,
) -> Tuple[Any, Any]:
    """``(a, b)`` with ``fn = a * t + b`` in the argument at ``slot``."""
    low = list(args)
    high = list(args)
    low[slot] = Fraction(0)
    high[slot] = Fraction(1)
    try:
        constant = fn(*low)
        return fn(*high) - constant, constant
    except ZeroDivisionError as exc:
        raise DegenerateError(code, str(exc), face) from exc


def solve_affine(
    fn: Callable[..., Any],
    args: Sequence[Any],
    slot: int,
    code: str = "degenerate-corner",
    face: Optional[str] = None,
) -> Any:
    """Solve ``fn(*args) = 0`` for the argument at ``slot``, fn affine-linear there."""
    coefficient, constant = affine_parts(fn, args, slot, code, face)
    if coefficient == 0:
        raise DegenerateError(code, f"vanishing coefficient in slot {slot}", face)
    return -constant / coefficient


class QuadEquation(abc.ABC):
    """Shared contract for quad equations Q(u, ũ, û, ŵ; α, β) = 0 and their Lax matrices."""

    quad_id: QuadId
    omega: int = 1
    delta: int = -1

    @abc.abstractmethod
    def evaluate(self, u: Any, ut: Any, uh: Any, w: Any, alpha: Any, beta: Any) -> Any:
        """Return Q(u, ũ, û, ŵ; α, β)."""

    @abc.abstractmethod
    def lax_core(self, xt: Any, x: Any, alpha: Any, spectral: Any) -> Matrix2:
        """Return the polynomial core of L(x̃, x; α, λ)."""

    @abc.abstractmethod
    def lax_scalar(self, xt: Any, x: Any, alpha: Any, mu: Fraction) -> Any:
        """Return the rational prefactor of L(x̃, x; α, λ)."""

    @abc.abstractmethod
    def spectral_square(self, spectral: Any, mu: Fraction) -> Any:
        """Return the radicand of the spectral normalisation."""

    @abc.abstractmethod
    def ell(self, alpha: Any, spectral: Any, mu: Fraction) -> Any:
        """Return ℓ with L(x̃, x)L(x, x̃) = ℓ·id."""

    def lax_radical(self, alpha: Any, spectral: Any, mu: Fraction) -> RadicalMonomial:
        return spectral_radical(self.spectral_square(spectral, mu))

    def needs_distinct_edge(self) -> bool:
        return False


class H1Equation(QuadEquation):
    quad_id = QuadId.H1

    def evaluate(self, u, ut, uh, w, alpha, beta):
        return (u - w) * (ut - uh) + beta - alpha

    def lax_core(self, xt, x, alpha, spectral):
        return ((x, alpha - spectral - xt * x), (Fraction(1), -xt))

    def lax_scalar(self, xt, x, alpha, mu):
        return Fraction(1)

    def spectral_square(self, spectral, mu):
        return spectral - mu

    def ell(self, alpha, spectral, mu):
        return (alpha - spectral) / (spectral - mu)


class Q1AdditiveEquation(QuadEquation):
    """Q1 with δ=0 in the additive normalisation; Lax rescaled by 1/sqrt(λ(λ−μ))."""

    quad_id = QuadId.Q1_ADD

    def evaluate(self, u, ut, uh, w, alpha, beta):
        return alpha * (u - uh) * (ut - w) - beta * (u - ut) * (uh - w)

    def lax_core(self, xt, x, alpha, spectral):
        d = xt - x
        return (
            (spectral * d - alpha * xt, alpha * xt * x),
            (-alpha, spectral * d + alpha * x),
        )

    def lax_scalar(self, xt, x, alpha, mu):
        return 1 / (xt - x)

    def spectral_square(self, spectral, mu):
        return spectral * (spectral - mu)

    def ell(self, alpha, spectral, mu):
        return (spectral - alpha) / (spectral - mu)

    def needs_distinct_edge(self) -> bool:
        return True


class Q1MultiplicativeEquation(QuadEquation):
    """Q1 with δ=0 in the multiplicative normalisation; Lax carries an extra sqrt(α)."""

    quad_id = QuadId.Q1_MULT

    def evaluate(self, u, ut, uh, w, alpha, beta):
        if alpha == 0 or beta == 0:
            raise ExactArithmeticError("zero-denominator", "Q1_MULT needs nonzero parameters")
        return (u - uh) * (ut - w) / (alpha * alpha) - (u - ut) * (uh - w) / (beta * beta)

    def lax_core(self, xt, x, alpha, spectral):
        d = xt - x
        a2 = alpha * alpha
        l2 = spectral * spectral
        return (
            (a2 * d - l2 * xt, l2 * xt * x),
            (-l2, a2 * d + l2 * x),
        )

    def lax_scalar(self, xt, x, alpha, mu):
        return mu / (alpha * alpha * (xt - x))

    def spectral_square(self, spectral, mu):
        return spectral * spectral - mu * mu

    def lax_radical(self, alpha, spectral, mu):
        return spectral_radical(self.spectral_square(spectral, mu)) * RadicalMonomial.symbol(
            f"sqrt[{alpha}]", alpha, 1
        )

    def ell(self, alpha, spectral, mu):
        return mu * mu * (alpha * alpha - spectral * spectral) / (alpha * (spectral * spectral - mu * mu))

    def needs_distinct_edge(self) -> bool:
        return True


QUAD_EQUATIONS: Dict[QuadId, QuadEquation] = {
    QuadId.H1: H1Equation(),
    QuadId.Q1_ADD: Q1AdditiveEquation(),
    QuadId.Q1_MULT: Q1MultiplicativeEquation(),
}


def get_quad(quad_id: QuadId | str) -> QuadEquation:
    return QUAD_EQUATIONS[QuadId(quad_id)]


def quad_eval(spec: QuadEquation, u: Any, ut: Any, uh: Any, w: Any, alpha: Any, beta: Any) -> Any:
    return spec.evaluate(u, ut, uh, w, alpha, beta)


def corner_solve(
    spec: QuadEquation, u: Any, ut: Any, uh: Any, alpha: Any, beta: Any, face: Optional[str] = None
) -> Any:
    """The far corner ŵ with Q(u, ũ, û, ŵ; α, β) = 0."""
    return solve_affine(
        lambda a, b, c, d: spec.evaluate(a, b, c, d, alpha, beta), (u, ut, uh, None), 3, face=face
    )


def lax_matrix(
    spec: QuadEquation, xt: Any, x: Any, alpha: Any, mu: Fraction, spectral: Any = None
) -> ScaledMatrix:
    """L(x̃, x; α, λ) at symbolic λ, or at a fixed node when ``spectral`` is given."""
    if spectral is None:
        spectral = lam()
    if spec.needs_distinct_edge() and xt == x:
        raise DegenerateError("degenerate-edge", f"x̃ = x = {x}")
    try:
        scalar = spec.lax_scalar(xt, x, alpha, mu)
    except ZeroDivisionError as exc:
        raise DegenerateError("degenerate-edge", str(exc)) from exc
    return ScaledMatrix.build(
        spec.lax_core(xt, x, alpha, spectral), scalar, spec.lax_radical(alpha, spectral, mu)
    )


def ell(spec: QuadEquation, alpha: Any, mu: Fraction, spectral: Any = None) -> Any:
    if spectral is None:
        spectral = lam()
    return spec.ell(alpha, spectral, mu)


def check_lax_inverse(spec: QuadEquation, xt: Any, x: Any, alpha: Any, mu: Fraction, spectral: Any = None) -> bool:
    """L(x̃, x)L(x, x̃) = ℓ(α, λ)·id."""
    product = lax_matrix(spec, xt, x, alpha, mu, spectral) @ lax_matrix(spec, x, xt, alpha, mu, spectral)
    return product.is_scalar_identity(ell(spec, alpha, mu, spectral))


@dataclass
class SymmetryReport:
    quad_id: QuadId
    affine_linear: bool
    d4_omega: bool
    d4_delta: bool
    tetrahedron: bool
    omega: int
    delta: int

    @property
    def passed(self) -> bool:
        return self.affine_linear and self.d4_omega and self.d4_delta and self.tetrahedron

    def to_dict(self) -> Dict[str, Any]:
        return {
            "equation": self.quad_id.value,
            "affine_linear": self.affine_linear,
            "d4_omega": self.d4_omega,
            "d4_delta": self.d4_delta,
            "tetrahedron": self.tetrahedron,
            "omega": self.omega,
            "delta": self.delta,
        }


def _affine_in_slot(spec: QuadEquation, sampler: RationalSampler, slot: int) -> bool:
    args = sampler.rats(4)
    alpha, beta = sampler.rats(2, nonzero=True)
    t0, t1, t2 = sampler.rats(3, distinct=True)
    values = []
    for t in (t0, t1, t2):
        shifted = list(args)
        shifted[slot] = t
        values.append(spec.evaluate(*shifted, alpha, beta))
    return (values[2] - values[1]) / (t2 - t1) == (values[1] - values[0]) / (t1 - t0)


def _d4_holds(spec: QuadEquation, sampler: RationalSampler) -> Tuple[bool, bool]:
    u, ut, uh, w = sampler.rats(4)
    alpha, beta = sampler.rats(2, nonzero=True)
    q = spec.evaluate(u, ut, uh, w, alpha, beta)
    omega_ok = q == spec.omega * spec.evaluate(ut, u, w, uh, alpha, beta)
    delta_ok = q == spec.delta * spec.evaluate(u, uh, ut, w, beta, alpha)
    return omega_ok, delta_ok


def top_corner(spec: QuadEquation, u: Any, ut: Any, uh: Any, v: Any, alpha: Any, beta: Any, spectral: Any) -> Any:
    """Far corner of the cube over (u, ũ, û, v), computed through the top face."""
    vt = corner_solve(spec, u, ut, v, alpha, spectral, face="tilde-side")
    vh = corner_solve(spec, u, uh, v, beta, spectral, face="hat-side")
    return corner_solve(spec, v, vt, vh, alpha, beta, face="top")


def _tetrahedron_holds(spec: QuadEquation, sampler: RationalSampler, variations: int = 5) -> bool:
    def attempt(draw: RationalSampler) -> bool:
        ut, uh, v = draw.rats(3, distinct=True)
        alpha, beta, spectral = draw.rats(3, nonzero=True, distinct=True)
        values = set()
        for u in draw.rats(variations, distinct=True):
            values.add(top_corner(spec, u, ut, uh, v, alpha, beta, spectral))
        return len(values) == 1

    return sampler.attempt(attempt)


def check_symmetries(
    spec: QuadEquation, sampler: Optional[RationalSampler] = None, samples: int = 20
) -> SymmetryReport:
    sampler = sampler or RationalSampler()
    affine = all(_affine_in_slot(spec, sampler, slot) for slot in range(4) for _ in range(samples))
    omega_ok = delta_ok = True
    for _ in range(samples):
        o, d = sampler.attempt(lambda draw: _d4_holds(spec, draw))
        omega_ok = omega_ok and o
        delta_ok = delta_ok and d
    tetrahedron = all(_tetrahedron_holds(spec, sampler) for _ in range(samples))
    report = SymmetryReport(spec.quad_id, affine, omega_ok, delta_ok, tetrahedron, spec.omega, spec.delta)
    logger.debug("symmetry report %s", report.to_dict())
    return report


@dataclass
class CubeResult:
    consistent: bool
    value: Optional[Fraction]
    routes: Dict[str, Any]


def check_3d_consistency(
    spec: QuadEquation, u: Any, ut: Any, uh: Any, v: Any, alpha: Any, beta: Any, spectral: Any
) -> CubeResult:
    """Compute the far corner of the cube along its three faces through it."""
    w = corner_solve(spec, u, ut, uh, alpha, beta, face="bottom")
    vt = corner_solve(spec, u, ut, v, alpha, spectral, face="tilde-side")
    vh = corner_solve(spec, u, uh, v, beta, spectral, face="hat-side")
    routes = {
        "top": corner_solve(spec, v, vt, vh, alpha, beta, face="top"),
        "tilde-far": corner_solve(spec, ut, w, vt, beta, spectral, face="tilde-far"),
        "hat-far": corner_solve(spec, uh, w, vh, alpha, spectral, face="hat-far"),
    }
    values = set(routes.values())
    consistent = len(values) == 1
    return CubeResult(consistent, routes["top"] if consistent else None, routes)


def zero_curvature_sides(
    spec: QuadEquation,
    u: Any,
    ut: Any,
    uh: Any,
    w: Any,
    alpha: Any,
    beta: Any,
    mu: Fraction,
    spectral: Any = None,
) -> Tuple[ScaledMatrix, ScaledMatrix]:
    lhs = lax_matrix(spec, w, ut, beta, mu, spectral) @ lax_matrix(spec, ut, u, alpha, mu, spectral)
    rhs = lax_matrix(spec, w, uh, alpha, mu, spectral) @ lax_matrix(spec, uh, u, beta, mu, spectral)
    return lhs, rhs


def check_zero_curvature(
    spec: QuadEquation,
    u: Any,
    ut: Any,
    uh: Any,
    alpha: Any,
    beta: Any,
    mu: Fraction,
    samples: Sequence[Fraction] = (),
    far_corner: Optional[Any] = None,
) -> bool:
    """L(ŵ,ũ;β)L(ũ,u;α) = L(ŵ,û;α)L(û,u;β), symbolically and at each λ node."""
    w = corner_solve(spec, u, ut, uh, alpha, beta) if far_corner is None else far_corner
    lhs, rhs = zero_curvature_sides(spec, u, ut, uh, w, alpha, beta, mu)
    if not lhs.equals(rhs):
        return False
    for node in samples:
        lhs_n, rhs_n = zero_curvature_sides(spec, u, ut, uh, w, alpha, beta, mu, Fraction(node))
        if not lhs_n.equals(rhs_n):
            return False
    return True


def sample_quad_point(spec: QuadEquation, sampler: RationalSampler) -> List[Fraction]:
    """Random (u, ũ, û, α, β) at which the corner solve is nondegenerate."""

    def attempt(draw: RationalSampler) -> List[Fraction]:
        u, ut, uh = draw.rats(3, distinct=True)
        alpha, beta = draw.rats(2, nonzero=True, distinct=True)
        corner_solve(spec, u, ut, uh, alpha, beta)
        return [u, ut, uh, alpha, beta]

    return sampler.attempt(attempt)
