"""
Tests for symmetric (N,M)-POVM construction and the coincidence diagnostics
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import InvalidState, ParameterRangeError, PositivityViolation
from matrix_core import Tolerances, random_density, random_pure_state
from operator_bases import resolve_basis
from symmetric_measurements import (
    build_povm,
    build_povm_for_x,
    coincidence_bound,
    coincidence_bound_check,
    definition_report,
    full_coincidence_sum,
    ic_classes,
    is_informationally_complete,
    optimal_t,
    optimal_x,
    probabilities,
    pure_state_bound,
    t_from_x,
    x_from_t,
    x_range,
)

R3 = math.sqrt(3)


@pytest.fixture
def ex3_basis():
    return resolve_basis("gellmann:3", "ex3")


@pytest.fixture
def ex3_povm(ex3_basis):
    return build_povm(ex3_basis, optimal_t(ex3_basis))


@pytest.mark.parametrize("d,M,low,high", [
    (3, 3, 1 / 3, 1.0),
    (3, 2, 3 / 4, 3 / 2),
    (3, 5, 3 / 25, 9 / 25),
])
def test_x_range_ends(d, M, low, high):
    rng = x_range(d, M)
    assert rng.low == pytest.approx(low)
    assert rng.high == pytest.approx(high)
    assert not rng.contains(low)
    assert rng.contains(high)


def test_x_t_inverse():
    assert x_from_t(3, 3, t_from_x(3, 3, 0.5)) == pytest.approx(0.5)
    with pytest.raises(ParameterRangeError):
        t_from_x(3, 3, 0.2)


def test_optimal_x_gell_mann_ex3(ex3_basis):
    assert optimal_x(ex3_basis) == pytest.approx(5 / 9, rel=1e-9)


def test_optimal_x_mub_two_outcomes():
    basis = resolve_basis("mub3", "ex4", (1, 2, 3, 5, 6, 7, 8))
    assert optimal_x(basis) == pytest.approx(3 * (5 - 2 * R3) / 4, rel=1e-9)


def test_optimal_x_gell_mann_ex5():
    basis = resolve_basis("gellmann:3", "ex5")
    assert optimal_x(basis) == pytest.approx(0.1832387, abs=1e-6)
    assert optimal_x(basis) <= x_range(3, 5).high


def test_povm_at_optimum_satisfies_symmetry(ex3_povm):
    report = definition_report(ex3_povm)
    assert report.holds()
    assert report.min_eigenvalue >= -1e-9
    assert ex3_povm.params.x == pytest.approx(5 / 9, rel=1e-9)
    for row in ex3_povm.elements:
        assert_allclose(sum(row), np.eye(3), atol=1e-12)
    e = ex3_povm.element(2, 1)
    assert np.trace(e).real == pytest.approx(1.0)
    assert np.trace(e @ e).real == pytest.approx(5 / 9)
    assert np.trace(e @ ex3_povm.element(3, 2)).real == pytest.approx(1 / 3)


def test_build_povm_for_x_range_checks(ex3_basis):
    with pytest.raises(ParameterRangeError):
        build_povm_for_x(ex3_basis, 2.0)
    with pytest.raises(ParameterRangeError):
        build_povm_for_x(ex3_basis, 1 / 3)
    with pytest.raises(PositivityViolation) as info:
        build_povm_for_x(ex3_basis, 1.0)
    assert info.value.min_eigenvalue < 0


def test_build_povm_at_t_zero_is_degenerate(ex3_basis, caplog):
    with caplog.at_level("WARNING"):
        povm = build_povm(ex3_basis, 0.0)
    assert povm.params.degenerate
    assert "t=0" in caplog.text
    assert_allclose(povm.element(1, 1), np.eye(3) / 3)


def test_ic_classes_d3():
    classes = {(c.N, c.M): c.tags for c in ic_classes(3)}
    assert set(classes) == {(8, 2), (4, 3), (2, 5), (1, 9)}
    assert classes[(1, 9)] == ("general SIC",)
    assert classes[(4, 3)] == ("MUM",)
    assert classes[(2, 5)] == ("M=d+2",)


def test_informational_completeness(ex3_povm):
    assert is_informationally_complete(ex3_povm)
    partial = resolve_basis("gellmann:3", "chunk:4")
    assert not is_informationally_complete(build_povm(partial, optimal_t(partial)))


def test_maximally_mixed_state_probabilities(ex3_povm):
    table = probabilities(ex3_povm, np.eye(3) / 3)
    assert_allclose(table.p, np.full((4, 3), 1 / 3))
    assert table.purity == pytest.approx(1 / 3)


def test_probabilities_reject_unnormalized(ex3_povm):
    with pytest.raises(InvalidState):
        probabilities(ex3_povm, np.eye(3))


def test_coincidence_bound_equality_for_complete_set(ex3_povm):
    rho = random_pure_state(3, np.random.default_rng(11))
    check = coincidence_bound_check(ex3_povm, rho, ex3_povm.N)
    assert check.holds
    assert check.equality_deviation < 1e-10
    assert check.lhs == pytest.approx(full_coincidence_sum(ex3_povm, 1.0))
    assert check.rhs == pytest.approx(pure_state_bound(ex3_povm, ex3_povm.N))


@pytest.mark.parametrize("L", [1, 2, 3])
def test_coincidence_bound_partial_sums(ex3_povm, L):
    rng = np.random.default_rng(100 + L)
    for _ in range(5):
        rho = random_density(3, rng)
        check = coincidence_bound_check(ex3_povm, rho, L)
        assert check.holds
        assert check.equality_deviation is None


def test_coincidence_bound_value(ex3_povm):
    # L/M for the maximally mixed state
    assert coincidence_bound(ex3_povm, 2, 1 / 3) == pytest.approx(2 / 3)
    with pytest.raises(ParameterRangeError):
        coincidence_bound_check(ex3_povm, np.eye(3) / 3, 0)


DEFINITION_CASES = [
    ("gellmann:2", "chunk:2", 0.3),
    ("gellmann:2", "chunk:2", 0.9),
    ("gellmann:2", "chunk:3", 0.5),
    ("gellmann:2", "chunk:4", 0.7),
    ("gellmann:3", "ex3", 0.2),
    ("gellmann:3", "ex3", 0.95),
    ("gellmann:3", "ex5", 0.6),
    ("gellmann:3", "chunk:2", 0.4),
    ("gellmann:3", "chunk:4", 0.8),
    ("gellmann:3", "chunk:9", 0.5),
    ("mub3", "natural", 0.35),
    ("mub3", "ex4", 0.65),
    ("mub3", "chunk:5", 0.25),
    ("gellmann:4", "chunk:2", 0.55),
    ("gellmann:4", "chunk:4", 0.15),
    ("gellmann:4", "chunk:4", 0.85),
    ("gellmann:4", "chunk:6", 0.45),
    ("gellmann:4", "chunk:6", 0.75),
    ("gellmann:4", "chunk:16", 0.5),
    ("gellmann:4", "chunk:3", 0.6),
]


@pytest.mark.parametrize("preset,grouping,frac", DEFINITION_CASES)
def test_symmetry_conditions_hold_inside_the_range(preset, grouping, frac):
    basis = resolve_basis(preset, grouping)
    low = x_range(basis.d, basis.M).low
    x = low + frac * (optimal_x(basis) - low)
    povm = build_povm_for_x(basis, x)
    report = definition_report(povm)
    assert report.max_deviation <= 1e-9
    assert report.resolution <= 1e-10
    assert report.min_eigenvalue >= -1e-9
    assert povm.params.x == pytest.approx(x, rel=1e-12)


@pytest.mark.parametrize("ic", ic_classes(3), ids=lambda c: f"N{c.N}-M{c.M}")
def test_coincidence_bound_on_haar_states(ic):
    basis = resolve_basis("gellmann:3", f"chunk:{ic.M}")
    assert (basis.N, basis.M) == (ic.N, ic.M)
    povm = build_povm(basis, optimal_t(basis))
    assert is_informationally_complete(povm)
    rng = np.random.default_rng(1000 + ic.M)
    for n in range(25):
        rho = random_pure_state(3, rng) if n % 2 else random_density(3, rng)
        for L in range(1, povm.N):
            check = coincidence_bound_check(povm, rho, L)
            assert check.holds
            assert check.equality_deviation is None
        full = coincidence_bound_check(povm, rho, povm.N)
        assert full.holds
        assert full.equality_deviation <= 1e-9


def test_coincidence_check_reads_its_slack_from_tolerances(ex3_povm):
    rho = random_pure_state(3, np.random.default_rng(4))
    assert coincidence_bound_check(ex3_povm, rho, ex3_povm.N).holds
    strict = Tolerances(coincidence=-1e-3)
    assert not coincidence_bound_check(ex3_povm, rho, ex3_povm.N, strict).holds
