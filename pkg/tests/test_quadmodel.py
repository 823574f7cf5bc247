from fractions import Fraction

import pytest

from latticemaps.errors import DegenerateError, ExactArithmeticError
from latticemaps.exact import RatFun
from latticemaps.models import QuadId
from latticemaps.quadmodel import (
    QUAD_EQUATIONS,
    H1Equation,
    check_3d_consistency,
    check_lax_inverse,
    check_symmetries,
    check_zero_curvature,
    corner_solve,
    get_quad,
    lax_matrix,
    quad_eval,
    sample_quad_point,
)
from latticemaps.sampling import RationalSampler


class ShiftedH1(H1Equation):
    """H1 plus one; affine in every corner but not consistent around the cube."""

    def evaluate(self, u, ut, uh, w, alpha, beta):
        return super().evaluate(u, ut, uh, w, alpha, beta) + 1


H1 = get_quad(QuadId.H1)


def test_h1_vanishes_on_known_point():
    assert quad_eval(H1, 0, 1, 2, -2, 1, 3) == 0


@pytest.mark.parametrize(
    "corners, params, expected",
    [((0, 1, 2), (1, 3), Fraction(-2)), ((2, 5, 3), (1, 4), Fraction(7, 2))],
)
def test_h1_corner_solve(corners, params, expected):
    assert corner_solve(H1, *map(Fraction, corners), *map(Fraction, params)) == expected


def test_corner_solve_reports_vanishing_coefficient():
    with pytest.raises(DegenerateError) as excinfo:
        corner_solve(H1, Fraction(0), Fraction(1), Fraction(1), Fraction(2), Fraction(3))
    assert excinfo.value.code == "degenerate-corner"


def test_q1_mult_rejects_zero_parameter():
    with pytest.raises(ExactArithmeticError) as excinfo:
        quad_eval(get_quad("q1_mult"), 1, 2, 3, 4, 0, 1)
    assert excinfo.value.code == "zero-denominator"


def test_q1_lax_needs_distinct_edge():
    with pytest.raises(DegenerateError) as excinfo:
        lax_matrix(get_quad(QuadId.Q1_ADD), Fraction(2), Fraction(2), Fraction(1), Fraction(3))
    assert excinfo.value.code == "degenerate-edge"


def test_h1_lax_matrix_entries():
    m = lax_matrix(H1, Fraction(1), Fraction(0), Fraction(1), Fraction(3))
    entries = m.entries()
    assert entries[0][0] == 0
    assert entries[0][1] == RatFun.from_coefficients([1, -1])
    assert entries[1][0] == 1
    assert entries[1][1] == -1


@pytest.mark.parametrize("quad_id", list(QuadId))
def test_lax_inverse(quad_id):
    spec = get_quad(quad_id)
    assert check_lax_inverse(spec, Fraction(2), Fraction(5, 3), Fraction(3), Fraction(7))
    assert check_lax_inverse(spec, Fraction(-1, 2), Fraction(4), Fraction(2, 5), Fraction(3), spectral=Fraction(11))


@pytest.mark.parametrize("quad_id", list(QuadId))
def test_symmetries(quad_id):
    report = check_symmetries(QUAD_EQUATIONS[quad_id], RationalSampler(3), samples=5)
    assert report.passed
    assert report.to_dict()["delta"] == -1


def test_cube_witness():
    result = check_3d_consistency(H1, *map(Fraction, (0, 1, 3, 5)), *map(Fraction, (2, 3, 7)))
    assert result.consistent
    assert result.value == Fraction(19, 3)


def test_shifted_equation_is_not_consistent():
    result = check_3d_consistency(ShiftedH1(), *map(Fraction, (0, 1, 3, 5)), *map(Fraction, (2, 3, 7)))
    assert not result.consistent
    assert result.value is None


@pytest.mark.parametrize("quad_id", list(QuadId))
def test_cube_consistency_at_random_points(quad_id, sampler):
    spec = QUAD_EQUATIONS[quad_id]

    def draw_cube(draw):
        u, ut, uh, v = draw.rats(4, distinct=True)
        alpha, beta, spectral = draw.rats(3, nonzero=True, distinct=True)
        return check_3d_consistency(spec, u, ut, uh, v, alpha, beta, spectral)

    for _ in range(10):
        assert sampler.attempt(draw_cube).consistent


def test_zero_curvature_witness():
    args = (Fraction(0), Fraction(1), Fraction(3), Fraction(2), Fraction(3), Fraction(5))
    assert check_zero_curvature(H1, *args, samples=(Fraction(1), Fraction(2)))
    w = corner_solve(H1, *args[:5])
    assert not check_zero_curvature(H1, *args, far_corner=w + 1)


@pytest.mark.parametrize("quad_id", list(QuadId))
def test_zero_curvature_at_random_points(quad_id, sampler):
    spec = QUAD_EQUATIONS[quad_id]

    def draw_square(draw):
        u, ut, uh, alpha, beta = sample_quad_point(spec, draw)
        return check_zero_curvature(spec, u, ut, uh, alpha, beta, Fraction(7), samples=(Fraction(13),))

    for _ in range(5):
        assert sampler.attempt(draw_square)


def test_symmetries_reject_a_shifted_equation():
    report = check_symmetries(ShiftedH1(), RationalSampler(3), samples=5)
    assert report.affine_linear
    assert report.d4_omega
    assert not report.d4_delta
    assert not report.passed
