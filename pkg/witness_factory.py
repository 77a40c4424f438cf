"""
Witness Factory
Entanglement witnesses induced by the symmetric-measurement maps, in their
Choi form, the x-independent rescaled form, the CCNR form and the M=2 form
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from errors import DimensionMismatch, InvalidRotation, SingularValueViolation, WitnessLabError
from matrix_core import (
    CMatrix,
    DEFAULT_TOLERANCES,
    Tolerances,
    as_cmatrix,
    gram_matrix,
    hermiticity_error,
    matrix_from_json,
    matrix_to_json,
    maximally_entangled_vector,
    min_eigenvalue,
)
from operator_bases import GroupedBasis, gell_mann_basis
from positive_maps import (
    MapSpec,
    RotationSet,
    SuperOp,
    check_rotation,
    depolarizing_choi,
    phi_alpha_choi,
)
from symmetric_measurements import build_h_family

logger = logging.getLogger(__name__)

SINGULAR_VALUE_SLACK = 1e-9
FORM_AGREEMENT = 1e-10


@dataclass
class Witness:
    """A d^2 x d^2 Hermitian operator and the recipe that produced it"""
    matrix: CMatrix
    recipe: Dict[str, Any] = field(default_factory=dict)

    @property
    def form(self) -> str:
        return str(self.recipe.get("form", "custom"))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def dims(self) -> Tuple[int, int]:
        d = math.isqrt(self.size)
        if d * d != self.size:
            raise DimensionMismatch(f"Witness size {self.size} is not a square d^2")
        return d, d

    @property
    def min_eigenvalue(self) -> float:
        return min_eigenvalue(self.matrix)

    def is_proper(self, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
        """True when the operator has a negative eigenvalue below -tol"""
        return self.min_eigenvalue < -tol

    @property
    def canonical_scale(self) -> float:
        """Largest real diagonal entry; dividing by it gives the display normalization"""
        return float(np.max(np.real(np.diag(self.matrix))))

    def scaled(self, c: float) -> "Witness":
        recipe = dict(self.recipe)
        recipe["scale"] = recipe.get("scale", 1.0) * c
        return Witness(matrix=c * self.matrix, recipe=recipe)

    def normalized(self) -> "Witness":
        scale = self.canonical_scale
        if scale <= 0:
            return self
        return self.scaled(1.0 / scale)

    def to_dict(self, tol: float = DEFAULT_TOLERANCES.psd) -> Dict[str, Any]:
        lam = self.min_eigenvalue
        return {
            "matrix": matrix_to_json(self.matrix),
            "recipe": self.recipe,
            "min_eigenvalue": lam,
            "proper": lam < -tol,
        }

    @classmethod
    def from_dict(cls, doc: Any) -> "Witness":
        """Accept either a witness bundle or a bare JSON matrix."""
        if isinstance(doc, dict) and "matrix" in doc:
            return cls(matrix=matrix_from_json(doc["matrix"]), recipe=dict(doc.get("recipe", {})))
        return cls(matrix=matrix_from_json(doc), recipe={"form": "custom"})


def _witness(matrix: CMatrix, recipe: Dict[str, Any],
             tol: float = DEFAULT_TOLERANCES.hermitian) -> Witness:
    err = hermiticity_error(matrix)
    if err > tol * max(1.0, float(np.abs(matrix).max())):
        raise WitnessLabError(f"Constructed witness is not Hermitian (deviation {err:.3e})")
    return Witness(matrix=(matrix + matrix.conj().T) / 2, recipe=recipe)


def _s(M: int) -> float:
    return math.sqrt(M) + 1.0


def rescaled_constant(d: int, M: int) -> float:
    """(d-1)/d^2 * M^2 (sqrt(M)+1)^2"""
    return (d - 1) / d ** 2 * M ** 2 * _s(M) ** 2


# Choi form

def choi_witness(phi: SuperOp) -> Witness:
    return _witness(phi.choi, {"form": "choi", "d": phi.d})


def k_form_witness(spec: MapSpec) -> Witness:
    """
    Choi matrix summed directly from the K operators,
    (1/b)(a/d 1 + sum_{alpha>L} K_alpha - sum_{alpha<=L} K_alpha).
    """
    d = spec.povm.d
    total = spec.a * depolarizing_choi(d)
    for alpha, o in enumerate(spec.rotations.matrices, start=1):
        k_alpha = phi_alpha_choi(spec.povm, o, alpha)
        total = total - k_alpha if alpha <= spec.L else total + k_alpha
    return _witness(total / spec.b, {"form": "choi", "d": d, "L": spec.L,
                                     "x": spec.povm.params.x})


# Rescaled form

def h_coefficients(M: int) -> np.ndarray:
    """
    Coefficients expressing H[alpha,k] in the group elements G[alpha,m].

    Row k < M is (1 - sqrt(M)(sqrt(M)+1) delta_km), the last row is sqrt(M)+1.
    """
    s = _s(M)
    h = np.ones((M, M - 1))
    h[: M - 1, :] -= math.sqrt(M) * s * np.eye(M - 1)
    h[M - 1, :] = s
    return h


def q_block_general(o: Any) -> np.ndarray:
    """Q = h^T O h, valid for any M x M matrix O"""
    rot = np.asarray(o, dtype=float)
    h = h_coefficients(rot.shape[0])
    return h.T @ rot @ h


def q_block(o: Any) -> np.ndarray:
    """
    Closed form for rotations with unit row and column sums:
    Q[k,l] = M(O[M,M]-1) + M(sqrt(M)+1)^2 O[k,l] - M(sqrt(M)+1)(O[M,l] + O[k,M]).
    """
    rot = np.asarray(o, dtype=float)
    M = rot.shape[0]
    s = _s(M)
    core = rot[: M - 1, : M - 1]
    last_row = rot[M - 1, : M - 1][np.newaxis, :]
    last_col = rot[: M - 1, M - 1][:, np.newaxis]
    return M * (rot[M - 1, M - 1] - 1) + M * s * s * core - M * s * (last_row + last_col)


def _transpose_kron_sum(first: Sequence[CMatrix], second: Sequence[CMatrix],
                        coeffs: np.ndarray) -> CMatrix:
    """sum_{m,n} coeffs[n,m] first[m]^T (x) second[n]"""
    d = first[0].shape[0]
    out = np.zeros((d * d, d * d), dtype=complex)
    for m, a in enumerate(first):
        mixed = sum(coeffs[n, m] * b for n, b in enumerate(second))
        if np.any(mixed):
            out += np.kron(a.T, mixed)
    return out


def j_operator(basis: GroupedBasis, o: Any, alpha: int,
               tol: float = FORM_AGREEMENT) -> CMatrix:
    """
    J_alpha = (M/d) sum_{k,l} O[k,l] conj(H[alpha,l]) (x) H[alpha,k].

    The same operator is also assembled from the basis elements through
    Q = h^T O h; both must agree.

    Args:
        basis: Grouped operator basis
        o: M x M rotation
        alpha: 1-based group index
        tol: Relative agreement required between the two assemblies

    Returns:
        CMatrix: J_alpha

    Raises:
        WitnessLabError: If the H-form and G-form disagree
    """
    if not 1 <= alpha <= basis.N:
        raise IndexError(f"alpha = {alpha} outside 1..{basis.N}")
    rot = np.asarray(o, dtype=float)
    if rot.shape != (basis.M, basis.M):
        raise InvalidRotation(f"Rotation has shape {rot.shape}, expected ({basis.M}, {basis.M})")
    d, M = basis.d, basis.M
    h_ops = build_h_family(basis).operators[alpha - 1]
    h_form = (M / d) * _transpose_kron_sum(h_ops, h_ops, rot)
    g_ops = basis.groups[alpha - 1]
    g_form = (M / d) * _transpose_kron_sum(g_ops, g_ops, q_block_general(rot))
    scale = max(1.0, float(np.abs(h_form).max()))
    gap = float(np.abs(h_form - g_form).max())
    if gap > tol * scale:
        raise WitnessLabError(f"J_{alpha}: H-form and G-form differ by {gap:.3e}")
    return h_form


def _rotation_recipe(rotations: RotationSet) -> Dict[str, Any]:
    return rotations.to_dict()


def weighted_witness(basis: GroupedBasis, rotations: RotationSet,
                     weights: Sequence[float],
                     tolerances: Tolerances = DEFAULT_TOLERANCES) -> Witness:
    """
    c 1 - sum_alpha w_alpha J_alpha with c = (d-1)/d^2 M^2 (sqrt(M)+1)^2.

    Positive weights subtract, negative weights add. The recipe records
    ``q_norm``, the spectral norm of the equivalent CCNR matrix; above one the
    result is no longer guaranteed to be block-positive.
    """
    if len(weights) != basis.N or rotations.N != basis.N:
        raise DimensionMismatch(
            f"Need one weight and one rotation per group (N={basis.N}), "
            f"got {len(weights)} weights and {rotations.N} rotations"
        )
    for a, (o, mode) in enumerate(zip(rotations.matrices, rotations.modes), start=1):
        check = check_rotation(o, mode, tolerances.hermitian)
        if not check.valid:
            raise InvalidRotation(f"Rotation {a}: {check.message}")
    d, M = basis.d, basis.M
    total = rescaled_constant(d, M) * np.eye(d * d, dtype=complex)
    for alpha, (o, w) in enumerate(zip(rotations.matrices, weights), start=1):
        if w != 0:
            total -= w * j_operator(basis, o, alpha)
    _, q = ccnr_q_from_recipe(basis, rotations, weights)
    recipe = {
        "form": "weighted",
        "basis": basis.name,
        "d": d,
        "M": M,
        "N": basis.N,
        "weights": [float(w) for w in weights],
        "rotations": _rotation_recipe(rotations),
        "constant": rescaled_constant(d, M),
        "q_norm": float(np.linalg.norm(q, 2)),
    }
    return _witness(total, recipe)


def rescaled_witness(basis: GroupedBasis, rotations: RotationSet, L: int,
                     tolerances: Tolerances = DEFAULT_TOLERANCES) -> Witness:
    """
    x-independent witness c 1 + sum_{alpha>L} J_alpha - sum_{alpha<=L} J_alpha.

    Sign-flip and zero rotations are accepted only while the equivalent CCNR
    matrix keeps its largest singular value at or below one.

    Raises:
        SingularValueViolation: If extended rotations break Q^T Q <= 1
    """
    if not 0 <= L <= basis.N:
        raise WitnessLabError(f"L = {L} outside 0..{basis.N}")
    weights = [1.0 if alpha <= L else -1.0 for alpha in range(1, basis.N + 1)]
    if not rotations.all_strict:
        _, q = ccnr_q_from_recipe(basis, rotations, weights)
        norm = float(np.linalg.norm(q, 2))
        if norm > 1.0 + SINGULAR_VALUE_SLACK:
            raise SingularValueViolation(norm)
    w = weighted_witness(basis, rotations, weights, tolerances)
    w.recipe["form"] = "rescaled"
    w.recipe["L"] = L
    return w


# CCNR form

@dataclass
class CcnrSpec:
    """Orthonormal Hermitian operators G_mu and a real matrix Q with ||Q||_2 <= 1"""
    elements: List[CMatrix]
    q: np.ndarray

    def validate(self, tolerances: Tolerances = DEFAULT_TOLERANCES) -> float:
        """
        Check shapes, orthonormality and the singular value bound.

        Returns:
            float: Largest singular value of Q

        Raises:
            SingularValueViolation: If ||Q||_2 > 1 + 1e-9
        """
        n = len(self.elements)
        if self.q.shape != (n, n):
            raise DimensionMismatch(f"Q has shape {self.q.shape}, expected ({n}, {n})")
        gram = gram_matrix(self.elements)
        err = float(np.abs(gram - np.eye(n)).max())
        if err > tolerances.orthonormal:
            raise WitnessLabError(f"CCNR operators are not orthonormal (deviation {err:.3e})")
        if any(hermiticity_error(g) > tolerances.hermitian for g in self.elements):
            raise WitnessLabError("CCNR operators must be Hermitian")
        norm = float(np.linalg.norm(self.q, 2))
        if norm > 1.0 + SINGULAR_VALUE_SLACK:
            raise SingularValueViolation(norm)
        return norm


def full_operator_basis(d: int) -> List[CMatrix]:
    """G_0 = 1/sqrt(d) followed by the Gell-Mann matrices"""
    return [np.eye(d, dtype=complex) / math.sqrt(d)] + gell_mann_basis(d)


def ccnr_witness(spec: CcnrSpec, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Witness:
    """W' = 1 - sum_{mu,nu} Q[mu,nu] G_mu^T (x) G_nu"""
    norm = spec.validate(tolerances)
    d = spec.elements[0].shape[0]
    total = np.eye(d * d, dtype=complex) - _transpose_kron_sum(spec.elements, spec.elements,
                                                               spec.q.T)
    return _witness(total, {"form": "ccnr", "d": d, "q_norm": norm})


def ccnr_q_from_recipe(basis: GroupedBasis, rotations: RotationSet,
                       weights: Sequence[float]) -> Tuple[List[CMatrix], np.ndarray]:
    """
    Block-diagonal CCNR matrix equivalent to a weighted witness.

    Block 0 is the scalar 1 for G_0; group alpha contributes
    w_alpha Q_alpha^T / (M (sqrt(M)+1)^2).

    Returns:
        Tuple: ([G_0] + grouped elements, Q)
    """
    M = basis.M
    width = M - 1
    n = 1 + basis.N * width
    q = np.zeros((n, n))
    q[0, 0] = 1.0
    norm = M * _s(M) ** 2
    for a, (o, w) in enumerate(zip(rotations.matrices, weights)):
        lo = 1 + a * width
        q[lo: lo + width, lo: lo + width] = w * q_block_general(o).T / norm
    return [basis.g0] + basis.elements(), q


def ccnr_from_recipe(basis: GroupedBasis, rotations: RotationSet, weights: Sequence[float],
                     tolerances: Tolerances = DEFAULT_TOLERANCES) -> Witness:
    elements, q = ccnr_q_from_recipe(basis, rotations, weights)
    w = ccnr_witness(CcnrSpec(elements=elements, q=q), tolerances)
    w.recipe.update({"basis": basis.name, "weights": [float(x) for x in weights],
                     "rotations": _rotation_recipe(rotations)})
    return w


# Special cases

def m2_witness(basis: GroupedBasis, signs: Sequence[int]) -> Witness:
    """
    Witness of an (N,2)-POVM family: 1 + sum_+ G^T (x) G - sum_- G^T (x) G.

    Args:
        basis: Basis grouped with M = 2 (one element per group)
        signs: N+1 entries in {+1, -1, 0}; entry 0 refers to G_0 = 1/sqrt(d)

    Returns:
        Witness: The resulting operator
    """
    if basis.M != 2:
        raise WitnessLabError(f"m2_witness needs M = 2, got M = {basis.M}")
    if len(signs) != basis.N + 1:
        raise DimensionMismatch(f"Expected {basis.N + 1} signs (G_0 first), got {len(signs)}")
    if any(s not in (-1, 0, 1) for s in signs):
        raise WitnessLabError(f"Signs must be -1, 0 or +1, got {list(signs)}")
    d = basis.d
    ops = [basis.g0] + [group[0] for group in basis.groups]
    total = np.eye(d * d, dtype=complex)
    for sign, g in zip(signs, ops):
        if sign:
            total += sign * np.kron(g.T, g)
    return _witness(total, {"form": "m2", "basis": basis.name, "d": d, "N": basis.N,
                            "signs": [int(s) for s in signs]})


def maximally_entangled(d: int) -> CMatrix:
    """P_+ = |psi+><psi+|"""
    psi = maximally_entangled_vector(d)
    return np.outer(psi, psi.conj())


def reduction_witness(d: int) -> Witness:
    """1 - d P_+, the witness of the reduction map"""
    return _witness(np.eye(d * d, dtype=complex) - d * maximally_entangled(d),
                    {"form": "reduction", "d": d})


@dataclass(frozen=True)
class ProportionalityReport:
    """Best positive scale c with a ~ c b, and the residual at b's scale"""
    scale: float
    max_deviation: float

    @property
    def positive(self) -> bool:
        return self.scale > 0

    def matched(self, tol: float = 1e-8) -> bool:
        return self.positive and self.max_deviation <= tol

    def to_dict(self) -> Dict[str, float]:
        return {"scale": self.scale, "max_deviation": self.max_deviation,
                "positive": self.positive}


def proportionality(a: Any, b: Any) -> ProportionalityReport:
    """
    Compare two matrices up to a scalar.

    Args:
        a: Computed matrix
        b: Reference matrix

    Returns:
        ProportionalityReport: Least-squares scale and max |a/scale - b|
    """
    ma, mb = as_cmatrix(a), as_cmatrix(b)
    if ma.shape != mb.shape:
        raise DimensionMismatch(f"Cannot compare shapes {ma.shape} and {mb.shape}")
    denom = np.vdot(mb, mb)
    if abs(denom) == 0:
        return ProportionalityReport(scale=0.0, max_deviation=math.inf)
    c = np.vdot(mb, ma) / denom
    if abs(c) == 0:
        return ProportionalityReport(scale=0.0, max_deviation=math.inf)
    deviation = float(np.abs(ma / c - mb).max())
    if abs(c.imag) > 1e-12 * abs(c):
        deviation = max(deviation, abs(c.imag) / abs(c))
    return ProportionalityReport(scale=float(c.real), max_deviation=deviation)
