"""
Tests for the operator bases and their groupings
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import BasisError
from matrix_core import gram_matrix
from operator_bases import (
    EX3_GROUPING,
    MUB3_LABELS,
    basis_elements,
    chunk_grouping,
    gell_mann_basis,
    gell_mann_labels,
    group_basis,
    mub_basis_d3,
    mub_elements_d3,
    mub_projectors_d3,
    resolve_basis,
)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_gell_mann_basis_is_orthonormal_traceless_hermitian(d):
    basis = gell_mann_basis(d)
    assert len(basis) == d * d - 1
    for g in basis:
        assert abs(np.trace(g)) < 1e-14
        assert_allclose(g, g.conj().T)
    assert_allclose(gram_matrix(basis), np.eye(d * d - 1), atol=1e-14)


def test_gell_mann_order_d3():
    assert gell_mann_labels(3) == ["g01", "g10", "g02", "g20", "g12", "g21", "g11", "g22"]
    g = gell_mann_basis(3)
    r2 = math.sqrt(2)
    assert g[0][0, 1] == pytest.approx(1 / r2)
    assert g[1][0, 1] == pytest.approx(-1j / r2)
    assert_allclose(np.diag(g[7]).real, np.array([1, 1, -2]) / math.sqrt(6))


def test_gell_mann_rejects_d1():
    with pytest.raises(BasisError):
        gell_mann_basis(1)


def test_mub_projectors_are_mutually_unbiased():
    fam = mub_projectors_d3()
    assert fam.max_deviation() < 1e-12
    assert fam.omega == pytest.approx(complex(-0.5, math.sqrt(3) / 2))


def test_mub_elements_prefactor_corrections_recorded():
    elements, report = mub_elements_d3()
    assert sorted(report.prefactor_corrections) == ["G22", "G32", "G42"]
    for name in ("G22", "G32", "G42"):
        assert report.norms[name] == pytest.approx(2.0)
        assert report.prefactor_corrections[name] == pytest.approx(0.5)
    assert report.max_gram_deviation < 1e-10
    assert len(elements) == len(MUB3_LABELS)


def test_mub_basis_matches_projector_relation():
    # G[alpha,k] = E[alpha,M]/(1+sqrt3) - E[alpha,k] + (1 - 1/(1+sqrt3)) 1/3
    fam = mub_projectors_d3()
    basis = mub_basis_d3()
    c = 1 / (1 + math.sqrt(3))
    for alpha in range(1, 5):
        for k in range(1, 3):
            expected = (fam.projector(alpha, 3) * c - fam.projector(alpha, k)
                        + (1 - c) * np.eye(3) / 3)
            assert_allclose(basis.element(alpha, k), expected, atol=1e-12)


def test_mub_basis_logs_corrections(caplog):
    with caplog.at_level("WARNING"):
        mub_basis_d3()
    assert "G22" in caplog.text


def test_resolve_basis_presets():
    ex3 = resolve_basis("gellmann:3", "ex3")
    assert (ex3.N, ex3.M, ex3.is_complete) == (4, 3, True)
    ex5 = resolve_basis("gellmann:3", "ex5")
    assert (ex5.N, ex5.M) == (2, 5)
    assert_allclose(ex5.element(1, 2), gell_mann_basis(3)[2])
    ex4 = resolve_basis("mub3", "ex4", (1, 2, 3, 5, 6, 7, 8))
    assert (ex4.N, ex4.M) == (7, 2)
    assert [lab[0] for lab in ex4.labels] == ["G12", "G21", "G22", "G31", "G32", "G41", "G42"]
    default = resolve_basis("gellmann:3")
    assert (default.N, default.M) == (8, 2)
    natural = resolve_basis("mub3")
    assert (natural.N, natural.M) == (4, 3)


def test_chunk_grouping_drops_remainder():
    basis = resolve_basis("gellmann:3", "chunk:4")
    assert (basis.N, basis.M) == (2, 4)
    assert not basis.is_complete
    assert len(chunk_grouping(8, 4).assignment) == 6


def test_short_grouping_keeps_leading_elements_and_logs_the_rest(caplog):
    with caplog.at_level("WARNING"):
        basis = resolve_basis("gellmann:4", "chunk:5")
    assert (basis.N, basis.M) == (3, 5)
    assert "uses 12 of 15" in caplog.text
    dropped = gell_mann_labels(4)[12:]
    assert all(label in caplog.text for label in dropped)
    for kept, ref in zip(basis.elements(), gell_mann_basis(4)[:12]):
        assert_allclose(kept, ref)


def test_select_renumbers_groups():
    basis = resolve_basis("gellmann:3", "ex3")
    sub = basis.select([3, 1])
    assert sub.N == 2
    assert_allclose(sub.element(1, 1), basis.element(3, 1))
    assert sub.name.endswith("[3,1]")
    with pytest.raises(BasisError):
        basis.select([1, 1])
    with pytest.raises(BasisError):
        basis.select([5])


@pytest.mark.parametrize("preset,grouping", [
    ("gellmann:3", "natural"),
    ("pauli", None),
    ("gellmann:x", None),
    ("gellmann:3", "ex9"),
    ("gellmann:2", "ex3"),
])
def test_resolve_basis_rejects_bad_presets(preset, grouping):
    with pytest.raises(BasisError):
        resolve_basis(preset, grouping)


def test_group_basis_rejects_incomplete_grid_and_non_orthonormal():
    g = gell_mann_basis(3)
    with pytest.raises(BasisError):
        group_basis(g[:3], [(1, 1), (1, 2), (2, 1)])
    with pytest.raises(BasisError):
        group_basis([g[0], g[0]], [(1, 1), (2, 1)])
    with pytest.raises(BasisError):
        group_basis(g[:2], [(1, 1), (1, 1)])


def test_basis_elements_notes():
    _, labels, notes = basis_elements("mub3")
    assert labels == list(MUB3_LABELS)
    assert len(notes) == 3
    _, _, gm_notes = basis_elements("gellmann:4")
    assert gm_notes == ()


def test_ex3_grouping_pairs_gell_mann():
    basis = EX3_GROUPING.apply(gell_mann_basis(3), gell_mann_labels(3))
    assert basis.labels == (("g01", "g10"), ("g02", "g20"), ("g12", "g21"), ("g11", "g22"))
