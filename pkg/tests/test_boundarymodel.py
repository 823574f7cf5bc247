from dataclasses import replace
from fractions import Fraction

import pytest

from latticemaps.boundarymodel import (
    BOUNDARY_EQUATIONS,
    InvolutionSpec,
    boundaries_for,
    boundary_matrix_determinant,
    boundary_solve,
    check_boundary_consistency,
    check_boundary_zcc,
    check_dual_boundary_consistency,
    check_dual_matches_k,
    check_k_involution,
    check_z2_symmetry,
    cross_check_epsilon,
    dual_solve,
    get_boundary,
    sample_boundary_point,
    sigma_apply,
    verify_duality,
)
from latticemaps.errors import DegenerateError, ExactArithmeticError
from latticemaps.exact import lam
from latticemaps.models import InvolutionKind, QuadId
from latticemaps.sampling import RationalSampler

BOUNDARY_IDS = sorted(BOUNDARY_EQUATIONS)

# (x, y, u, alpha, spectral, mu) with a hand-computed apex for h1_yzx
WITNESS = dict(x=Fraction(0), y=Fraction(1), u=Fraction(3), alpha=Fraction(1), spectral=Fraction(2), mu=Fraction(3))
# the same for h1_xz, where every route can be worked out by hand
XZ_POINT = dict(x=Fraction(1), y=Fraction(2), u=Fraction(5), alpha=Fraction(1), spectral=Fraction(2), mu=Fraction(3))


def test_registry_covers_every_equation():
    assert len(BOUNDARY_EQUATIONS) == 8
    assert {spec.boundary_id for spec in boundaries_for(QuadId.H1)} == {"h1_yzx", "h1_xz"}
    assert len(boundaries_for(QuadId.Q1_MULT)) == 4


def test_unknown_boundary():
    with pytest.raises(KeyError):
        get_boundary("h2_xyz")


def test_involutions():
    assert InvolutionSpec(InvolutionKind.ADDITIVE, Fraction(3)).apply(Fraction(1)) == 5
    assert InvolutionSpec(InvolutionKind.MULTIPLICATIVE, Fraction(2)).apply(Fraction(8)) == Fraction(1, 2)
    with pytest.raises(ExactArithmeticError) as excinfo:
        InvolutionSpec(InvolutionKind.MULTIPLICATIVE, Fraction(2)).apply(Fraction(0))
    assert excinfo.value.code == "involution-pole"


def test_sigma_apply_is_an_involution():
    additive = InvolutionSpec(InvolutionKind.ADDITIVE, Fraction(3))
    assert sigma_apply(additive, Fraction(3)) == additive.fixed_point
    for alpha in (Fraction(1), Fraction(-7, 2)):
        assert sigma_apply(additive, sigma_apply(additive, alpha)) == alpha
    multiplicative = InvolutionSpec(InvolutionKind.MULTIPLICATIVE, Fraction(2))
    assert sigma_apply(multiplicative, Fraction(8)) == Fraction(1, 2)
    assert sigma_apply(multiplicative, sigma_apply(multiplicative, Fraction(5, 3))) == Fraction(5, 3)


def test_boundary_solve():
    assert boundary_solve(get_boundary("h1_yzx"), Fraction(1), Fraction(2), Fraction(1), Fraction(3)) == 2
    assert boundary_solve(get_boundary("h1_xz"), Fraction(5), Fraction(2), Fraction(1), Fraction(3)) == -5


def test_boundary_solve_degenerate():
    with pytest.raises(DegenerateError) as excinfo:
        boundary_solve(get_boundary("h1_yzx"), Fraction(1), Fraction(0), Fraction(1), Fraction(3))
    assert excinfo.value.code == "degenerate-boundary"


def test_dual_solve():
    assert dual_solve(get_boundary("h1_yzx"), Fraction(4), Fraction(0), Fraction(2), Fraction(3)) == -4


def test_boundary_consistency_witness():
    result = check_boundary_consistency(get_boundary("h1_yzx"), **WITNESS)
    assert result.consistent
    assert result.value == -3
    assert set(result.routes) == {"back-triangle", "top-triangle", "top-quad"}


def test_boundary_consistency_needs_the_involution():
    result = check_boundary_consistency(get_boundary("h1_yzx"), **WITNESS, sigma=lambda a: a)
    assert not result.consistent
    assert result.routes["back-triangle"] == Fraction(19, 7)
    assert result.routes["top-triangle"] == Fraction(13, 9)


def test_dual_consistency_witness():
    result = check_dual_boundary_consistency(get_boundary("h1_yzx"), **WITNESS)
    assert result.consistent
    assert result.value == 15


def test_h1_xz_half_cubes_by_hand():
    spec = get_boundary("h1_xz")
    assert check_boundary_consistency(spec, **XZ_POINT).value == 1
    assert check_dual_boundary_consistency(spec, **XZ_POINT).value == Fraction(37, 7)


def test_dual_consistency_rejects_a_foreign_dual():
    wrong = replace(get_boundary("h1_xz"), dual=lambda y, x, c, s, mu: y + c)
    assert check_boundary_consistency(wrong, **XZ_POINT).consistent
    result = check_dual_boundary_consistency(wrong, **XZ_POINT)
    assert not result.consistent
    assert result.routes == {"q-first": Fraction(-44, 7), "p-first": Fraction(92, 17)}


def test_both_half_cubes_reject_a_mutated_boundary():
    mutated = replace(get_boundary("h1_xz"), evaluator=lambda x, y, z, a, mu: 2 * x + z)
    boundary = check_boundary_consistency(mutated, **XZ_POINT)
    assert not boundary.consistent
    assert boundary.routes == {"back-triangle": 4, "top-triangle": 4, "top-quad": 1}
    dual = check_dual_boundary_consistency(mutated, **XZ_POINT)
    assert not dual.consistent
    assert dual.routes == {"q-first": Fraction(27, 5), "p-first": Fraction(47, 9)}


@pytest.mark.parametrize("boundary_id", BOUNDARY_IDS)
def test_half_cubes_agree_point_by_point(boundary_id, sampler):
    spec = get_boundary(boundary_id)

    def draw(d):
        point = sample_boundary_point(spec, d)
        return (
            check_boundary_consistency(spec, **point).consistent,
            check_dual_boundary_consistency(spec, **point).consistent,
        )

    for _ in range(10):
        assert sampler.attempt(draw) == (True, True)


@pytest.mark.parametrize("boundary_id", BOUNDARY_IDS)
def test_half_cubes_at_random_points(boundary_id, sampler):
    spec = get_boundary(boundary_id)

    def draw(check):
        return lambda d: check(spec, **sample_boundary_point(spec, d)).consistent

    for _ in range(5):
        assert sampler.attempt(draw(check_boundary_consistency))
        assert sampler.attempt(draw(check_dual_boundary_consistency))


@pytest.mark.parametrize("boundary_id", BOUNDARY_IDS)
def test_k_is_an_involution(boundary_id):
    spec = get_boundary(boundary_id)
    assert check_k_involution(spec, Fraction(3), Fraction(2))
    assert check_dual_matches_k(spec, Fraction(3), Fraction(2))


def test_k_involution_negative_control():
    doubled = lambda x, spectral, mu: (((Fraction(2), Fraction(0)), (Fraction(0), Fraction(1))), Fraction(1))
    assert not check_k_involution(get_boundary("h1_yzx"), Fraction(3), Fraction(2), matrix=doubled)


@pytest.mark.parametrize("boundary_id", BOUNDARY_IDS)
def test_k_determinant_is_field_independent(boundary_id):
    spec = get_boundary(boundary_id)
    for mu in (Fraction(3), Fraction(-2, 5)):
        first = boundary_matrix_determinant(spec, Fraction(2), mu)
        assert all(boundary_matrix_determinant(spec, x, mu) == first for x in (Fraction(5), Fraction(-7, 3)))


def test_q1add_row2_determinant():
    spec = get_boundary("q1add_row2")
    assert boundary_matrix_determinant(spec, Fraction(2), Fraction(3)) == (6 - lam()) / lam()


@pytest.mark.parametrize("boundary_id", BOUNDARY_IDS)
def test_z2_symmetry(boundary_id):
    assert check_z2_symmetry(get_boundary(boundary_id), RationalSampler(11), samples=10)


def test_z2_symmetry_negative_control():
    wrong = replace(get_boundary("h1_yzx"), z2_factor=lambda a, b, mu: Fraction(1))
    assert not check_z2_symmetry(wrong, RationalSampler(11), samples=10)


@pytest.mark.parametrize("boundary_id", BOUNDARY_IDS)
def test_duality(boundary_id):
    result = verify_duality(get_boundary(boundary_id), samples=10, sampler=RationalSampler(5))
    assert result.holds
    assert all(result.eliminations.values())
    assert result.chi_samples


def test_duality_negative_control():
    wrong = replace(get_boundary("h1_yzx"), dual=lambda y, x, c, s, mu: y + 2 * c)
    assert not verify_duality(wrong, samples=10, sampler=RationalSampler(5)).holds


@pytest.mark.parametrize("boundary_id", BOUNDARY_IDS)
def test_boundary_zero_curvature(boundary_id, sampler):
    spec = get_boundary(boundary_id)

    def draw(d):
        point = sample_boundary_point(spec, d)
        return point, check_boundary_zcc(spec, point["x"], point["u"], point["alpha"], point["mu"])

    for _ in range(3):
        point, holds = sampler.attempt(draw)
        assert holds
        assert cross_check_epsilon(spec, point["x"], point["u"], point["alpha"], point["mu"]) == spec.epsilon


def test_boundary_zero_curvature_wrong_sign():
    spec = get_boundary("h1_xz")
    args = (Fraction(1), Fraction(4), Fraction(1), Fraction(3))
    assert check_boundary_zcc(spec, *args)
    assert not check_boundary_zcc(spec, *args, epsilon=-spec.epsilon)
