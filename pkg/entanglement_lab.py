"""
Entanglement Lab
State validation, PPT tests, witness evaluation, see-saw block-positivity
estimates and the search for PPT states that certify indecomposability
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from errors import (
    DimensionMismatch,
    InvalidState,
    NotHermitianState,
    NotPSD,
    WitnessLabError,
    ZeroTrace,
)
from matrix_core import (
    CMatrix,
    DEFAULT_TOLERANCES,
    Tolerances,
    eigenvalues,
    haar_vector,
    hermiticity_error,
    min_eigenvalue,
    partial_transpose,
    random_density,
    require_square,
)
from witness_factory import Witness

logger = logging.getLogger(__name__)

SEESAW_CONVERGENCE = 1e-12
SEARCH_STEP = 0.05
SEARCH_ROUNDS = 50
SEARCH_THRESHOLD = -1e-7
SEARCH_MARGIN = -1e-10
SEARCH_STALL_ITERS = 20
SEARCH_STALL_TOL = 1e-9


@dataclass(frozen=True)
class DensityState:
    """Validated bipartite density matrix"""
    matrix: CMatrix
    dims: Tuple[int, int]
    original_trace: float = 1.0
    renormalized: bool = False


def _dims_for(size: int, dims: Optional[Tuple[int, int]]) -> Tuple[int, int]:
    if dims is None:
        d = math.isqrt(size)
        if d * d != size:
            raise DimensionMismatch(f"Cannot split size {size} into equal subsystems")
        return d, d
    if dims[0] * dims[1] != size:
        raise DimensionMismatch(f"Dimensions {tuple(dims)} do not match size {size}")
    return int(dims[0]), int(dims[1])


def validate_state(m: Any, dims: Optional[Tuple[int, int]] = None, renormalize: bool = False,
                   tolerances: Tolerances = DEFAULT_TOLERANCES) -> DensityState:
    """
    Check that ``m`` is a density matrix on C^dA (x) C^dB.

    Args:
        m: Candidate matrix
        dims: (dA, dB), inferred as equal factors when omitted
        renormalize: Divide by the trace first and record the original trace
        tolerances: hermitian / psd / trace tolerances

    Returns:
        DensityState: The validated (possibly renormalized) state

    Raises:
        NotHermitianState: If m deviates from its adjoint
        ZeroTrace: If the trace vanishes
        InvalidState: If the trace is not one and renormalize is False
        NotPSD: If an eigenvalue is below -tolerances.psd
    """
    rho = require_square(m)
    shape = _dims_for(rho.shape[0], dims)
    err = hermiticity_error(rho)
    if err > tolerances.hermitian:
        raise NotHermitianState(f"State is not Hermitian (deviation {err:.3e})", err)
    tr = float(np.trace(rho).real)
    if abs(tr) <= 1e-12:
        raise ZeroTrace("State has zero trace", tr)
    if renormalize:
        if abs(tr - 1.0) > tolerances.trace:
            logger.warning("State trace is %.12g; renormalizing", tr)
        rho = rho / tr
    elif abs(tr - 1.0) > tolerances.trace:
        raise InvalidState(f"State trace is {tr:.12g}, expected 1 (use renormalize)", tr)
    lam = min_eigenvalue(rho)
    if lam < -tolerances.psd:
        raise NotPSD(f"State has negative eigenvalue {lam:.3e}", lam)
    return DensityState(matrix=rho, dims=shape, original_trace=tr,
                        renormalized=renormalize and abs(tr - 1.0) > tolerances.trace)


class PptResult(NamedTuple):
    ppt: bool
    min_eigenvalue: float


def is_ppt(state: DensityState, subsystem: str = "B",
           tolerances: Tolerances = DEFAULT_TOLERANCES) -> PptResult:
    lam = min_eigenvalue(partial_transpose(state.matrix, state.dims, subsystem))
    return PptResult(ppt=lam >= -tolerances.psd, min_eigenvalue=lam)


def negativity(state: DensityState) -> float:
    """Sum of the magnitudes of the negative eigenvalues of the partial transpose"""
    vals = eigenvalues(partial_transpose(state.matrix, state.dims))
    return float(-np.sum(vals[vals < 0]))


def realignment(m: CMatrix, dims: Tuple[int, int]) -> CMatrix:
    """R[(i,k),(j,l)] = rho[(i,j),(k,l)]"""
    d_a, d_b = dims
    t = np.asarray(m).reshape(d_a, d_b, d_a, d_b)
    return t.transpose(0, 2, 1, 3).reshape(d_a * d_a, d_b * d_b)


def realignment_norm(state: DensityState) -> float:
    """Trace norm of the realigned state; above one certifies entanglement"""
    return float(np.linalg.svd(realignment(state.matrix, state.dims), compute_uv=False).sum())


def _witness_matrix(w: Any) -> CMatrix:
    return w.matrix if isinstance(w, Witness) else require_square(w)


def evaluate(w: Any, state: DensityState) -> float:
    """
    Real part of Tr(W rho).

    Raises:
        DimensionMismatch: If W and rho differ in size
        WitnessLabError: If the imaginary part exceeds 1e-10 (non-Hermitian input)
    """
    mw = _witness_matrix(w)
    if mw.shape != state.matrix.shape:
        raise DimensionMismatch(f"Witness {mw.shape} and state {state.matrix.shape} differ")
    value = complex(np.sum(mw * state.matrix.T))
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise WitnessLabError(f"Tr(W rho) has imaginary part {value.imag:.3e}")
    return value.real


def product_expectation(w: Any, a: Any, b: Any) -> float:
    """<a (x) b| W |a (x) b> for normalized a and b"""
    va = np.asarray(a, dtype=complex).ravel()
    vb = np.asarray(b, dtype=complex).ravel()
    v = np.kron(va / np.linalg.norm(va), vb / np.linalg.norm(vb))
    return float(np.vdot(v, _witness_matrix(w) @ v).real)


def sampled_product_min(w: Any, samples: int, seed: int = 0,
                        dims: Optional[Tuple[int, int]] = None) -> float:
    """Minimum of <a (x) b|W|a (x) b> over random product vectors"""
    mw = _witness_matrix(w)
    d_a, d_b = _dims_for(mw.shape[0], dims)
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(samples, d_a)) + 1j * rng.normal(size=(samples, d_a))
    b = rng.normal(size=(samples, d_b)) + 1j * rng.normal(size=(samples, d_b))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    v = np.einsum("ni,nj->nij", a, b).reshape(samples, d_a * d_b)
    return float(np.einsum("ni,ij,nj->n", v.conj(), mw, v).real.min())


@dataclass
class SeesawResult:
    value: float
    a: np.ndarray
    b: np.ndarray
    history: List[float] = field(default_factory=list)


def seesaw(w: Any, a0: Any, iters: int = 500,
           dims: Optional[Tuple[int, int]] = None) -> SeesawResult:
    """
    Alternate lowest-eigenvector updates of b (a fixed) and a (b fixed).

    Each half step minimizes exactly over one factor, so the recorded
    objective never increases.
    """
    mw = _witness_matrix(w)
    d_a, d_b = _dims_for(mw.shape[0], dims)
    t = mw.reshape(d_a, d_b, d_a, d_b)
    a = np.asarray(a0, dtype=complex).ravel()
    a = a / np.linalg.norm(a)
    history: List[float] = []
    b = np.zeros(d_b, dtype=complex)
    value = math.inf
    for _ in range(max(1, iters)):
        mb = np.einsum("i,ijkl,k->jl", a.conj(), t, a)
        vals, vecs = np.linalg.eigh((mb + mb.conj().T) / 2)
        b = vecs[:, 0]
        ma = np.einsum("j,ijkl,l->ik", b.conj(), t, b)
        vals, vecs = np.linalg.eigh((ma + ma.conj().T) / 2)
        a = vecs[:, 0]
        new_value = float(vals[0])
        history.append(new_value)
        converged = abs(value - new_value) < SEESAW_CONVERGENCE
        value = new_value
        if converged:
            break
    return SeesawResult(value=value, a=a, b=b, history=history)


def block_positivity_min(w: Any, restarts: int = 200, iters: int = 500, seed: int = 0,
                         dims: Optional[Tuple[int, int]] = None) -> float:
    """
    See-saw estimate of min <a (x) b|W|a (x) b> over unit product vectors.

    Every restart starts from a Haar-random a drawn from its own child seed,
    so the estimate is reproducible for a fixed ``seed``.

    Args:
        w: Witness or matrix
        restarts: Number of random starts
        iters: Maximum see-saw sweeps per start
        seed: Root seed
        dims: (dA, dB)

    Returns:
        float: Best (lowest) value found
    """
    mw = _witness_matrix(w)
    d_a, _ = _dims_for(mw.shape[0], dims)
    best = math.inf
    for child in np.random.SeedSequence(seed).spawn(max(1, restarts)):
        rng = np.random.default_rng(child)
        best = min(best, seesaw(mw, haar_vector(d_a, rng), iters, dims).value)
    return best


def _project_eigenvalues_to_simplex(vals: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto {p >= 0, sum p = 1}"""
    u = np.sort(vals)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, len(u) + 1)
    cond = u - (css - 1.0) / idx > 0
    r = int(idx[cond][-1])
    theta = (css[r - 1] - 1.0) / r
    return np.maximum(vals - theta, 0.0)


def _project_density(x: CMatrix) -> CMatrix:
    vals, vecs = np.linalg.eigh((x + x.conj().T) / 2)
    p = _project_eigenvalues_to_simplex(vals)
    return (vecs * p) @ vecs.conj().T


def _project_ppt(x: CMatrix, dims: Tuple[int, int]) -> CMatrix:
    return partial_transpose(_project_density(partial_transpose(x, dims)), dims)


def _repair(x: CMatrix, dims: Tuple[int, int]) -> CMatrix:
    """Mix with the identity just enough to clear both PSD margins."""
    x = (x + x.conj().T) / 2
    x = x / np.trace(x).real
    margin = min(min_eigenvalue(x), min_eigenvalue(partial_transpose(x, dims)))
    if margin >= 0:
        return x
    size = x.shape[0]
    return (x - margin * np.eye(size)) / (1.0 - margin * size)


def ppt_detection_search(w: Any, restarts: int = 200, iters: int = 500, seed: int = 0,
                         dims: Optional[Tuple[int, int]] = None,
                         tolerances: Tolerances = DEFAULT_TOLERANCES) -> Optional[DensityState]:
    """
    Heuristic hunt for a PPT state with Tr(W rho) < -1e-7.

    Each iteration takes a gradient step along -W, then alternates projections
    onto the density matrices and onto the PPT density matrices. Candidates are
    mixed with the identity until both spectra are non-negative. A restart is
    abandoned once Tr(W rho) has not improved for SEARCH_STALL_ITERS steps.
    A None result does not mean the witness is decomposable.

    Returns:
        Optional[DensityState]: First qualifying state, or None
    """
    mw = _witness_matrix(w)
    shape = _dims_for(mw.shape[0], dims)
    size = mw.shape[0]
    direction = mw / np.linalg.norm(mw)
    children = np.random.SeedSequence(seed).spawn(max(1, restarts))
    for n, child in enumerate(children):
        rng = np.random.default_rng(child)
        rho = np.eye(size, dtype=complex) / size if n == 0 else random_density(size, rng)
        best, stalled = math.inf, 0
        for step in range(max(1, iters)):
            rho = rho - SEARCH_STEP * direction
            for _ in range(SEARCH_ROUNDS):
                rho = _project_ppt(_project_density(rho), shape)
            candidate = _repair(rho, shape)
            value = float(np.sum(mw * candidate.T).real)
            if value < best - SEARCH_STALL_TOL:
                best, stalled = value, 0
            else:
                stalled += 1
            if value >= SEARCH_THRESHOLD:
                if stalled >= SEARCH_STALL_ITERS:
                    logger.debug("Restart %d stalled at Tr(W rho) = %.6g after %d steps",
                                 n, best, step + 1)
                    break
                continue
            margin_rho = min_eigenvalue(candidate)
            margin_pt = min_eigenvalue(partial_transpose(candidate, shape))
            if margin_rho >= SEARCH_MARGIN and margin_pt >= SEARCH_MARGIN:
                logger.info("Found PPT state with Tr(W rho) = %.6g after restart %d", value, n)
                return validate_state(candidate, shape, renormalize=True, tolerances=tolerances)
    logger.info("No detected PPT state found in %d restarts", len(children))
    return None


@dataclass
class CertificateReport:
    """Verdicts and raw values behind an indecomposability claim"""
    state_valid: bool
    ppt: bool
    ppt_min_eigenvalue: Optional[float]
    expectation: Optional[float]
    detected: bool
    indecomposable_certified: bool
    tolerances: Dict[str, float]
    block_positive: Optional[bool] = None
    block_min: Optional[float] = None
    negativity: Optional[float] = None
    state_error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "state_valid": self.state_valid,
            "ppt": self.ppt,
            "ppt_min_eigenvalue": self.ppt_min_eigenvalue,
            "expectation": self.expectation,
            "detected": self.detected,
            "indecomposable_certified": self.indecomposable_certified,
            "tolerances": self.tolerances,
            "block_positive": self.block_positive,
            "block_min": self.block_min,
            "negativity": self.negativity,
            "state_error": self.state_error,
        }


def certify_indecomposable(w: Any, state: Any, block_min: Optional[float] = None,
                           renormalize: bool = False,
                           tolerances: Tolerances = DEFAULT_TOLERANCES) -> CertificateReport:
    """
    Decide whether (W, rho) certifies that W is an indecomposable witness.

    The certificate needs a valid PPT state with Tr(W rho) < -tolerances.detection.
    When a block-positivity estimate ``block_min`` is supplied it must also be
    at least -tolerances.probe_eigen; a witness that is negative on a product
    vector certifies nothing.

    Args:
        w: Witness or matrix
        state: DensityState or raw matrix (validated here)
        block_min: Optional see-saw minimum over product vectors
        renormalize: Renormalize a raw matrix by its trace
        tolerances: Tolerances used for every verdict

    Returns:
        CertificateReport: Full verdict bundle
    """
    tol_dict = tolerances.to_dict()
    if not isinstance(state, DensityState):
        try:
            state = validate_state(state, renormalize=renormalize, tolerances=tolerances)
        except InvalidState as e:
            return CertificateReport(False, False, None, None, False, False, tol_dict,
                                     state_error=str(e))
    ppt = is_ppt(state, tolerances=tolerances)
    value = evaluate(w, state)
    detected = value < -tolerances.detection
    block_positive = None if block_min is None else block_min >= -tolerances.probe_eigen
    certified = ppt.ppt and detected and block_positive is not False
    return CertificateReport(
        state_valid=True,
        ppt=ppt.ppt,
        ppt_min_eigenvalue=ppt.min_eigenvalue,
        expectation=value,
        detected=detected,
        indecomposable_certified=certified,
        tolerances=tol_dict,
        block_positive=block_positive,
        block_min=block_min,
        negativity=negativity(state),
    )
