"""
Matrix Core
Dense complex matrix helpers: Kronecker products, partial transposition,
deterministic Hermitian eigendecomposition and the JSON matrix exchange format
"""

import json
import logging
import math
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

from errors import DimensionMismatch, InvalidMatrixJson, NotHermitian

logger = logging.getLogger(__name__)

# All operators are plain complex128 ndarrays
CMatrix = np.ndarray


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by every check in the toolkit"""
    hermitian: float = 1e-10
    psd: float = 1e-9
    trace: float = 1e-9
    orthonormal: float = 1e-10
    detection: float = 1e-9
    probe_eigen: float = 1e-8
    probe_purity: float = 1e-9
    coincidence: float = 1e-10

    def scaled(self, tol: Optional[float]) -> "Tolerances":
        """Return a copy where every tolerance is replaced by ``tol``.

        Args:
            tol: Global override, or None to keep the defaults

        Returns:
            Tolerances: New instance
        """
        if tol is None:
            return self
        return replace(self, **{f.name: float(tol) for f in fields(self)})

    def to_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and matching orthonormal eigenvector columns"""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max(self) -> float:
        return float(self.eigenvalues[-1])


def as_cmatrix(x: Any) -> CMatrix:
    """Coerce input into a non-empty 2-D complex array."""
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(f"Expected a non-empty 2-D matrix, got shape {m.shape}")
    return m


def require_square(x: CMatrix, size: Optional[int] = None) -> CMatrix:
    m = as_cmatrix(x)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"Expected a square matrix, got shape {m.shape}")
    if size is not None and m.shape[0] != size:
        raise DimensionMismatch(f"Expected a {size}x{size} matrix, got {m.shape[0]}x{m.shape[1]}")
    return m


def kron(a: CMatrix, b: CMatrix) -> CMatrix:
    """Kronecker product, entry (i*rows_b + j, k*cols_b + l) = a[i,k] * b[j,l]"""
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def dagger(x: CMatrix) -> CMatrix:
    return np.conj(x).T


def hermiticity_error(x: CMatrix) -> float:
    m = require_square(x)
    return float(np.abs(m - dagger(m)).max())


def is_hermitian(x: CMatrix, tol: float = DEFAULT_TOLERANCES.hermitian) -> bool:
    return hermiticity_error(x) <= tol


def require_hermitian(x: CMatrix, tol: float = DEFAULT_TOLERANCES.hermitian,
                      name: str = "matrix") -> CMatrix:
    """Return ``x`` as a complex array, raising NotHermitian beyond ``tol``."""
    m = require_square(x)
    err = hermiticity_error(m)
    if err > tol:
        raise NotHermitian(f"{name} is not Hermitian: max|X - X^dagger| = {err:.3e} > {tol:.1e}")
    return m


def _split_dims(n: int, dims: Optional[Tuple[int, int]]) -> Tuple[int, int]:
    if dims is None:
        d = math.isqrt(n)
        if d * d != n:
            raise DimensionMismatch(f"Cannot infer equal subsystem dimensions for size {n}")
        return d, d
    d_a, d_b = int(dims[0]), int(dims[1])
    if d_a < 1 or d_b < 1 or d_a * d_b != n:
        raise DimensionMismatch(f"Dimensions {dims} do not match operator size {n}")
    return d_a, d_b


def partial_transpose(x: CMatrix, dims: Optional[Tuple[int, int]] = None,
                      subsystem: str = "B") -> CMatrix:
    """
    Partial transpose of a bipartite operator.

    Args:
        x: (dA*dB) x (dA*dB) operator
        dims: (dA, dB); inferred as equal factors when omitted
        subsystem: "B" transposes every dB x dB block, "A" swaps blocks (i,j) -> (j,i)

    Returns:
        CMatrix: Partially transposed operator

    Raises:
        DimensionMismatch: If the shape does not factor as dA*dB
    """
    m = require_square(x)
    d_a, d_b = _split_dims(m.shape[0], dims)
    t = m.reshape(d_a, d_b, d_a, d_b)
    sub = subsystem.upper()
    if sub == "B":
        t = t.transpose(0, 3, 2, 1)
    elif sub == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return t.reshape(d_a * d_b, d_a * d_b)


def partial_trace(x: CMatrix, dims: Optional[Tuple[int, int]] = None,
                  keep: str = "A") -> CMatrix:
    """Trace out one factor of a bipartite operator, keeping ``keep``."""
    m = require_square(x)
    d_a, d_b = _split_dims(m.shape[0], dims)
    t = m.reshape(d_a, d_b, d_a, d_b)
    if keep.upper() == "A":
        return np.einsum("ijkj->ik", t)
    if keep.upper() == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def hermitian_eigen(x: CMatrix, tol: float = DEFAULT_TOLERANCES.hermitian) -> Spectrum:
    """
    Eigendecomposition of a Hermitian matrix with deterministic phases.

    Eigenvalues come back ascending. Each eigenvector is rotated so that its
    first non-negligible component is real and positive.

    Args:
        x: Hermitian matrix
        tol: Hermiticity tolerance

    Returns:
        Spectrum: Eigenvalues and eigenvectors

    Raises:
        NotHermitian: If ``x`` deviates from its adjoint beyond ``tol``
    """
    m = require_hermitian(x, tol)
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2)
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        idx = int(np.argmax(np.abs(col) > 1e-12))
        if abs(col[idx]) > 0:
            vecs[:, j] = col * (abs(col[idx]) / col[idx])
    return Spectrum(eigenvalues=vals, eigenvectors=vecs)


def eigenvalues(x: CMatrix) -> np.ndarray:
    """Ascending eigenvalues of the Hermitian part of ``x``"""
    m = require_square(x)
    return np.linalg.eigvalsh((m + dagger(m)) / 2)


def min_eigenvalue(x: CMatrix) -> float:
    return float(eigenvalues(x)[0])


def frob_inner(a: CMatrix, b: CMatrix) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dagger b)"""
    ma, mb = as_cmatrix(a), as_cmatrix(b)
    if ma.shape != mb.shape:
        raise DimensionMismatch(f"Shape mismatch in inner product: {ma.shape} vs {mb.shape}")
    return complex(np.vdot(ma, mb))


def is_psd(x: CMatrix, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    return min_eigenvalue(x) >= -tol


def gram_matrix(elements: Sequence[CMatrix]) -> np.ndarray:
    """Matrix of pairwise inner products Tr(A_i^dagger A_j)"""
    flat = np.array([np.asarray(e, dtype=complex).ravel() for e in elements])
    return flat.conj() @ flat.T


def maximally_entangled_vector(d: int) -> np.ndarray:
    """(1/sqrt d) sum_i |ii>"""
    psi = np.zeros(d * d, dtype=complex)
    psi[[i * d + i for i in range(d)]] = 1.0
    return psi / math.sqrt(d)


def projector(v: np.ndarray) -> CMatrix:
    """Rank-one projector onto the normalized vector ``v``"""
    vec = np.asarray(v, dtype=complex).ravel()
    vec = vec / np.linalg.norm(vec)
    return np.outer(vec, vec.conj())


def swap_operator(d: int) -> CMatrix:
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return s


def haar_unitary(d: int, rng: np.random.Generator) -> CMatrix:
    """Haar-random d x d unitary (``unitary_group`` rejects d = 1)"""
    if d == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1), dtype=complex)
    return unitary_group.rvs(d, random_state=rng)


def haar_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector in C^d"""
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_pure_state(d: int, rng: np.random.Generator) -> CMatrix:
    return projector(haar_vector(d, rng))


def random_density(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> CMatrix:
    """Random mixed state G G^dagger / Tr from a Ginibre matrix of the given rank"""
    r = d if rank is None else rank
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_hermitian(d: int, rng: np.random.Generator) -> CMatrix:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (g + dagger(g)) / 2


# JSON matrix exchange: {"rows": n, "cols": m, "entries": [[re, im], ...]} row-major

def matrix_to_json(x: CMatrix) -> Dict[str, Any]:
    m = as_cmatrix(x)
    rows, cols = m.shape
    entries = [[float(z.real), float(z.imag)] for z in m.ravel()]
    return {"rows": int(rows), "cols": int(cols), "entries": entries}


def matrix_from_json(doc: Any) -> CMatrix:
    """
    Decode a JSON matrix document.

    Args:
        doc: Parsed JSON object with rows, cols and row-major [re, im] entries

    Returns:
        CMatrix: Decoded matrix

    Raises:
        InvalidMatrixJson: On missing keys, bad sizes, or non-finite entries
    """
    if not isinstance(doc, dict):
        raise InvalidMatrixJson("Matrix document must be a JSON object")
    try:
        rows, cols, entries = int(doc["rows"]), int(doc["cols"]), doc["entries"]
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidMatrixJson(f"Malformed matrix document: {e}") from e
    if rows < 1 or cols < 1:
        raise InvalidMatrixJson(f"Matrix must have positive size, got {rows}x{cols}")
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise InvalidMatrixJson(f"Expected {rows * cols} entries for a {rows}x{cols} matrix")
    values = np.empty(rows * cols, dtype=complex)
    for n, entry in enumerate(entries):
        try:
            if isinstance(entry, (list, tuple)):
                if len(entry) != 2:
                    raise ValueError("entry must be [re, im]")
                re, im = float(entry[0]), float(entry[1])
            else:
                re, im = float(entry), 0.0
        except (TypeError, ValueError) as e:
            raise InvalidMatrixJson(f"Bad entry at position {n}: {entry!r}") from e
        if not (math.isfinite(re) and math.isfinite(im)):
            raise InvalidMatrixJson(f"Non-finite entry at position {n}: {entry!r}")
        values[n] = complex(re, im)
    return values.reshape(rows, cols)


def _reject_constant(token: str):
    raise InvalidMatrixJson(f"Non-finite JSON constant {token}")


def loads_matrix(text: str) -> CMatrix:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise InvalidMatrixJson(f"Invalid JSON: {e}") from e
    return matrix_from_json(doc)


def load_json_file(path: str) -> Any:
    """Read a JSON document, rejecting NaN / Infinity constants."""
    with open(path, "r") as f:
        try:
            return json.load(f, parse_constant=_reject_constant)
        except json.JSONDecodeError as e:
            raise InvalidMatrixJson(f"Invalid JSON in {path}: {e}") from e


def dumps_json(doc: Any) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation, no NaN."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
