"""Exact arithmetic kernel.

Rationals are :class:`fractions.Fraction`. Polynomials in the spectral
parameter live in a sympy polynomial ring over QQ, and :class:`RatFun` keeps
reduced quotients of them with a monic denominator. :class:`DualRat` carries
first-order partials for exact Jacobians, and :class:`RadicalMonomial` tracks
square-root prefactors formally without ever picking a branch.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Mapping, Sequence, Tuple, Union

from sympy import QQ
from sympy.polys.rings import PolyElement, ring

from latticemaps.errors import ExactArithmeticError

Rat = Fraction
Poly = PolyElement

LAMBDA_RING, LAMBDA_GEN = ring("lam", QQ)

_RAT_PATTERN = re.compile(r"^-?\d+(/\d+)?$")


def parse_rat(text: Union[str, int, Fraction]) -> Fraction:
    """Parse ``"p/q"`` or ``"p"`` into a reduced rational."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    value = str(text).strip()
    if not _RAT_PATTERN.match(value):
        raise ExactArithmeticError("malformed-rational", repr(text))
    numerator, _, denominator = value.partition("/")
    if denominator and int(denominator) == 0:
        raise ExactArithmeticError("zero-denominator", value)
    return Fraction(int(numerator), int(denominator or 1))


def format_rat(value: Union[int, Fraction]) -> str:
    return str(Fraction(value))


def _to_qq(value: Union[int, Fraction]) -> Any:
    value = Fraction(value)
    return QQ(value.numerator, value.denominator)


def _from_qq(value: Any) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))


def poly_from_coefficients(coefficients: Sequence[Union[int, Fraction]]) -> Poly:
    """Build a λ-polynomial from coefficients listed lowest degree first."""
    terms = {(degree,): _to_qq(c) for degree, c in enumerate(coefficients) if c}
    return LAMBDA_RING.from_dict(terms)


def poly_coefficients(poly: Poly) -> List[Fraction]:
    """Coefficients lowest degree first; the zero polynomial gives ``[]``."""
    if not poly:
        return []
    coefficients = [Fraction(0)] * (poly.degree() + 1)
    for (degree,), coefficient in poly.terms():
        coefficients[degree] = _from_qq(coefficient)
    return coefficients


def poly_evaluate(poly: Poly, at: Union[int, Fraction]) -> Fraction:
    return _from_qq(poly(_to_qq(at)))


def linear_factor(root: Union[int, Fraction]) -> Poly:
    """The monic factor λ − root."""
    return poly_from_coefficients([-Fraction(root), 1])


def factor_multiplicity(poly: Poly, factor: Poly) -> int:
    """How many times ``factor`` divides ``poly`` exactly."""
    if not poly or factor.degree() < 1:
        return 0
    count = 0
    while True:
        quotient, remainder = poly.div(factor)
        if remainder:
            return count
        poly = quotient
        count += 1


@dataclass(frozen=True, eq=False)
class RatFun:
    """Reduced rational function of λ with monic denominator.

    Build instances through :func:`ratfun_reduce` or the arithmetic operators;
    the raw constructor trusts its arguments.
    """

    num: Poly
    den: Poly

    @classmethod
    def constant(cls, value: Union[int, Fraction]) -> "RatFun":
        return cls(LAMBDA_RING.ground_new(_to_qq(value)), LAMBDA_RING.one)

    @classmethod
    def variable(cls) -> "RatFun":
        return cls(LAMBDA_GEN, LAMBDA_RING.one)

    @classmethod
    def from_coefficients(
        cls,
        numerator: Sequence[Union[int, Fraction]],
        denominator: Sequence[Union[int, Fraction]] = (1,),
    ) -> "RatFun":
        return ratfun_reduce(poly_from_coefficients(numerator), poly_from_coefficients(denominator))

    @property
    def is_zero(self) -> bool:
        return not self.num

    @property
    def is_constant(self) -> bool:
        return self.den == LAMBDA_RING.one and self.num.degree() <= 0

    def to_rat(self) -> Fraction:
        if not self.is_constant:
            raise ExactArithmeticError("not-constant", str(self))
        coefficients = poly_coefficients(self.num)
        return coefficients[0] if coefficients else Fraction(0)

    def evaluate(self, at: Union[int, Fraction]) -> Fraction:
        point = _to_qq(at)
        denominator = self.den(point)
        if not denominator:
            raise ExactArithmeticError("zero-denominator", f"{self} at lam={at}")
        return _from_qq(self.num(point)) / _from_qq(denominator)

    def __add__(self, other: Any) -> "RatFun":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.den == other.den:
            return ratfun_reduce(self.num + other.num, self.den)
        return ratfun_reduce(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "RatFun":
        return RatFun(-self.num, self.den)

    def __sub__(self, other: Any) -> "RatFun":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: Any) -> "RatFun":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other: Any) -> "RatFun":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return ratfun_reduce(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "RatFun":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero:
            raise ExactArithmeticError("zero-denominator", f"division of {self} by zero")
        return ratfun_reduce(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other: Any) -> "RatFun":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, exponent: int) -> "RatFun":
        if exponent < 0:
            return RatFun.constant(1) / (self**-exponent)
        return RatFun(self.num**exponent, self.den**exponent)

    def __eq__(self, other: object) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((tuple(poly_coefficients(self.num)), tuple(poly_coefficients(self.den))))

    def __str__(self) -> str:
        if self.den == LAMBDA_RING.one:
            return str(self.num)
        return f"({self.num})/({self.den})"

    __repr__ = __str__


def _coerce(value: Any) -> Any:
    if isinstance(value, RatFun):
        return value
    if isinstance(value, (int, Fraction)):
        return RatFun.constant(value)
    return NotImplemented


def ratfun_reduce(num: Poly, den: Poly) -> RatFun:
    """Cancel the gcd and make the denominator monic."""
    if not den:
        raise ExactArithmeticError("zero-denominator", f"({num})/0")
    if not num:
        return RatFun(LAMBDA_RING.zero, LAMBDA_RING.one)
    if den != LAMBDA_RING.one:
        common = num.gcd(den)
        if common != LAMBDA_RING.one:
            num = num.exquo(common)
            den = den.exquo(common)
        lead = den.LC
        if lead != QQ.one:
            num = num.quo_ground(lead)
            den = den.quo_ground(lead)
    return RatFun(num, den)


def lam() -> RatFun:
    """The symbolic spectral parameter."""
    return RatFun.variable()


def clear_known_denominator(f: RatFun, factors: Sequence[Tuple[Poly, int]]) -> List[Fraction]:
    """Coefficients of ``num(f) * prod(factors) / den(f)``, lowest degree first."""
    if f.is_zero:
        return [Fraction(0)]
    product = LAMBDA_RING.one
    for factor, multiplicity in factors:
        product *= factor**multiplicity
    quotient, remainder = product.div(f.den)
    if remainder:
        raise ExactArithmeticError("denominator-mismatch", f"{f.den} does not divide {product}")
    return poly_coefficients(f.num * quotient)


def interpolate(nodes: Sequence[Fraction], values: Sequence[Any]) -> List[Any]:
    """Coefficients (lowest first) of the polynomial through ``(nodes[i], values[i])``.

    Works over any scalar type with field operations, DualRat included.
    """
    count = len(nodes)
    table = list(values)
    newton = [table[0]]
    for level in range(1, count):
        table = [
            (table[i + 1] - table[i]) / (nodes[i + level] - nodes[i]) for i in range(count - level)
        ]
        newton.append(table[0])
    result = [newton[-1]]
    for k in range(count - 2, -1, -1):
        shifted: List[Any] = [Fraction(0)] + result
        for i, coefficient in enumerate(result):
            shifted[i] = shifted[i] - nodes[k] * coefficient
        shifted[0] = shifted[0] + newton[k]
        result = shifted
    return result


@dataclass(frozen=True)
class DualRat:
    """Rational value with exact first-order partials."""

    value: Fraction
    partials: Tuple[Fraction, ...]

    @classmethod
    def seeded(cls, value: Union[int, Fraction], index: int, size: int) -> "DualRat":
        return cls(
            Fraction(value), tuple(Fraction(1) if i == index else Fraction(0) for i in range(size))
        )

    def _lift(self, other: Any) -> "DualRat":
        if isinstance(other, DualRat):
            return other
        if isinstance(other, (int, Fraction)):
            return DualRat(Fraction(other), tuple(Fraction(0) for _ in self.partials))
        return NotImplemented

    def __add__(self, other: Any) -> "DualRat":
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        return DualRat(
            self.value + other.value, tuple(a + b for a, b in zip(self.partials, other.partials))
        )

    __radd__ = __add__

    def __neg__(self) -> "DualRat":
        return DualRat(-self.value, tuple(-a for a in self.partials))

    def __sub__(self, other: Any) -> "DualRat":
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: Any) -> "DualRat":
        return (-self) + other

    def __mul__(self, other: Any) -> "DualRat":
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        return DualRat(
            self.value * other.value,
            tuple(self.value * b + a * other.value for a, b in zip(self.partials, other.partials)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "DualRat":
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        if other.value == 0:
            raise ExactArithmeticError("singular-point", "dual division by a zero value")
        square = other.value * other.value
        return DualRat(
            self.value / other.value,
            tuple((a * other.value - self.value * b) / square for a, b in zip(self.partials, other.partials)),
        )

    def __rtruediv__(self, other: Any) -> "DualRat":
        lifted = self._lift(other)
        if lifted is NotImplemented:
            return NotImplemented
        return lifted / self

    def __pow__(self, exponent: int) -> "DualRat":
        if exponent < 0:
            return 1 / (self ** (-exponent))
        result = self._lift(1)
        for _ in range(exponent):
            result = result * self
        return result


def dual_jacobian(
    g: Callable[[List[DualRat]], Sequence[Any]], point: Sequence[Union[int, Fraction]]
) -> List[List[Fraction]]:
    """Exact Jacobian of ``g`` at ``point`` by forward-mode dual evaluation."""
    size = len(point)
    seeded = [DualRat.seeded(value, index, size) for index, value in enumerate(point)]
    try:
        outputs = g(seeded)
    except ZeroDivisionError as exc:
        raise ExactArithmeticError("singular-point", str(exc)) from exc
    rows: List[List[Fraction]] = []
    for output in outputs:
        if isinstance(output, DualRat):
            rows.append(list(output.partials))
        else:
            rows.append([Fraction(0)] * size)
    return rows


@dataclass(frozen=True)
class RadicalMonomial:
    """Product of formal square-root symbols with integer exponents.

    An exponent ``e`` on symbol ``s`` stands for ``s**e`` with ``s**2`` equal to
    ``squares[s]``; the radicand itself is never evaluated to a root.
    """

    exponents: Tuple[Tuple[str, int], ...] = ()
    squares: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False, repr=False)

    @classmethod
    def symbol(cls, name: str, square: Any, exponent: int = 1) -> "RadicalMonomial":
        if exponent == 0:
            return cls()
        return cls(((name, exponent),), {name: square})

    @property
    def is_rational(self) -> bool:
        return not self.exponents

    def exponent(self, name: str) -> int:
        return dict(self.exponents).get(name, 0)

    def __mul__(self, other: "RadicalMonomial") -> "RadicalMonomial":
        merged: Dict[str, int] = dict(self.exponents)
        for name, exponent in other.exponents:
            merged[name] = merged.get(name, 0) + exponent
        squares = {**self.squares, **other.squares}
        kept = tuple(sorted((name, e) for name, e in merged.items() if e))
        return RadicalMonomial(kept, {name: squares[name] for name, _ in kept})

    def inverse(self) -> "RadicalMonomial":
        return RadicalMonomial(tuple((name, -e) for name, e in self.exponents), dict(self.squares))

    def reduce(self) -> Tuple[Any, "RadicalMonomial"]:
        """Split into ``(scalar factor, residual monomial)`` with residual exponents in {0, 1}."""
        factor: Any = Fraction(1)
        kept = []
        for name, exponent in self.exponents:
            half, rest = divmod(exponent, 2)
            if half:
                factor = factor * self.squares[name] ** half
            if rest:
                kept.append((name, rest))
        return factor, RadicalMonomial(tuple(kept), {name: self.squares[name] for name, _ in kept})

    def ratio(self, other: "RadicalMonomial") -> Any:
        """Scalar value of ``self / other``; both sides must carry the same odd symbols."""
        factor, residual = (self * other.inverse()).reduce()
        if not residual.is_rational:
            raise ExactArithmeticError("unbalanced-radical", f"{self} / {other} leaves {residual}")
        return factor

    def __str__(self) -> str:
        if not self.exponents:
            return "1"
        return "*".join(f"{name}^{exponent}" for name, exponent in self.exponents)
