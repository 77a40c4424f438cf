"""
Tests for the dense matrix helpers and the JSON matrix format
"""
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import DimensionMismatch, InvalidMatrixJson, NotHermitian
from matrix_core import (
    DEFAULT_TOLERANCES,
    Tolerances,
    dumps_json,
    frob_inner,
    hermitian_eigen,
    kron,
    loads_matrix,
    matrix_from_json,
    matrix_to_json,
    maximally_entangled_vector,
    partial_trace,
    partial_transpose,
    projector,
    random_density,
    random_hermitian,
    swap_operator,
)


def test_kron_index_convention():
    a = np.array([[1, 2], [3, 4]])
    b = np.array([[0, 1], [1, 0]])
    k = kron(a, b)
    # entry (i*2 + j, k*2 + l) = a[i,k] * b[j,l]
    assert k[1 * 2 + 0, 0 * 2 + 1] == a[1, 0] * b[0, 1]
    assert k.shape == (4, 4)


def test_partial_transpose_of_max_entangled_is_swap_over_d():
    d = 3
    psi = maximally_entangled_vector(d)
    p_plus = np.outer(psi, psi.conj())
    assert_allclose(partial_transpose(p_plus), swap_operator(d) / d, atol=1e-14)
    assert_allclose(partial_transpose(p_plus, subsystem="A"), swap_operator(d) / d, atol=1e-14)


def test_partial_transpose_product_operator():
    rng = np.random.default_rng(1)
    a = random_hermitian(2, rng)
    b = random_hermitian(3, rng)
    assert_allclose(partial_transpose(kron(a, b), (2, 3)), kron(a, b.T), atol=1e-14)
    assert_allclose(partial_transpose(kron(a, b), (2, 3), "A"), kron(a.T, b), atol=1e-14)


def test_partial_transpose_is_involution():
    rng = np.random.default_rng(2)
    x = random_hermitian(6, rng)
    assert_allclose(partial_transpose(partial_transpose(x, (2, 3)), (2, 3)), x)


def test_partial_transpose_rejects_bad_dims():
    with pytest.raises(DimensionMismatch):
        partial_transpose(np.eye(6), (2, 2))
    with pytest.raises(DimensionMismatch):
        partial_transpose(np.eye(6))


def test_partial_trace_of_product():
    rng = np.random.default_rng(3)
    a = random_density(2, rng)
    b = random_density(3, rng)
    assert_allclose(partial_trace(kron(a, b), (2, 3), keep="A"), a, atol=1e-14)
    assert_allclose(partial_trace(kron(a, b), (2, 3), keep="B"), b, atol=1e-14)


def test_hermitian_eigen_residual_and_phase():
    rng = np.random.default_rng(4)
    x = random_hermitian(5, rng)
    spec = hermitian_eigen(x)
    assert np.all(np.diff(spec.eigenvalues) >= 0)
    residual = x @ spec.eigenvectors - spec.eigenvectors * spec.eigenvalues
    assert np.abs(residual).max() <= 1e-9 * np.linalg.norm(x)
    for j in range(5):
        col = spec.eigenvectors[:, j]
        first = col[np.argmax(np.abs(col) > 1e-12)]
        assert abs(first.imag) < 1e-12 and first.real > 0


def test_hermitian_eigen_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigen(np.array([[0, 1], [0, 0]]))


def test_frob_inner_is_trace_of_adjoint_product():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert frob_inner(a, b) == pytest.approx(np.trace(a.conj().T @ b))


def test_projector_normalizes():
    p = projector([1, 1j, 0])
    assert_allclose(p @ p, p, atol=1e-14)
    assert np.trace(p).real == pytest.approx(1.0)


def test_tolerances_scaled():
    assert DEFAULT_TOLERANCES.scaled(None) is DEFAULT_TOLERANCES
    loose = DEFAULT_TOLERANCES.scaled(1e-6)
    assert set(loose.to_dict().values()) == {1e-6}
    assert Tolerances().psd == 1e-9


def test_matrix_json_encoding():
    m = np.array([[1, 2j], [-2j, 3]])
    doc = matrix_to_json(m)
    assert doc == {"rows": 2, "cols": 2,
                   "entries": [[1.0, 0.0], [0.0, 2.0], [0.0, -2.0], [3.0, 0.0]]}
    assert_allclose(matrix_from_json(doc), m)


def test_matrix_json_accepts_real_entries():
    assert_allclose(matrix_from_json({"rows": 1, "cols": 2, "entries": [1, 2.5]}), [[1, 2.5]])


@pytest.mark.parametrize("doc", [
    [[1, 0]],
    {"rows": 2, "cols": 2, "entries": [[1, 0]]},
    {"rows": 1, "cols": 1, "entries": [[1, 0, 0]]},
    {"rows": 0, "cols": 1, "entries": []},
    {"cols": 1, "entries": [[1, 0]]},
    {"rows": 1, "cols": 1, "entries": [["a", 0]]},
])
def test_matrix_json_rejects_malformed(doc):
    with pytest.raises(InvalidMatrixJson):
        matrix_from_json(doc)


@pytest.mark.parametrize("token", ["NaN", "Infinity", "-Infinity"])
def test_matrix_json_rejects_non_finite(token):
    text = '{"rows": 1, "cols": 1, "entries": [[%s, 0]]}' % token
    with pytest.raises(InvalidMatrixJson):
        loads_matrix(text)


def test_dumps_json_is_sorted_and_rejects_nan():
    text = dumps_json({"b": 1, "a": [1.5]})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [1.5], "b": 1}
    with pytest.raises(ValueError):
        dumps_json({"x": float("nan")})
