"""
Positive Maps
Rotation matrices, the maps Phi_alpha / Phi_0 and the positive trace-preserving
combination built from a symmetric measurement, stored as Choi matrices
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy.stats import ortho_group

from errors import DegenerateScale, DimensionMismatch, InvalidRotation, ParameterRangeError
from matrix_core import (
    CMatrix,
    DEFAULT_TOLERANCES,
    Tolerances,
    eigenvalues,
    haar_vector,
    partial_trace,
    projector,
    require_square,
    swap_operator,
)
from symmetric_measurements import SymmetricPovm, within_overlap

logger = logging.getLogger(__name__)

PROBE_CHUNK = 100


class RotationMode(str, Enum):
    STRICT = "strict"
    SIGN_FLIP = "sign_flip"
    ZERO = "zero"


@dataclass(frozen=True)
class RotationCheck:
    """Diagnostics of a rotation matrix against its mode"""
    valid: bool
    orthogonality_error: float
    row_sum_error: float
    col_sum_error: float
    message: str = ""


def check_rotation(o: Any, mode: RotationMode = RotationMode.STRICT,
                   tol: float = DEFAULT_TOLERANCES.hermitian) -> RotationCheck:
    """
    Measure how far ``o`` is from a valid rotation of the given mode.

    strict: orthogonal with unit row and column sums (fixes the uniform vector).
    sign_flip: orthogonal and maps the uniform vector to its negative.
    zero: the all-zeros matrix.
    """
    m = np.asarray(o)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return RotationCheck(False, math.inf, math.inf, math.inf, f"not square: shape {m.shape}")
    if np.iscomplexobj(m):
        if np.abs(m.imag).max() > tol:
            return RotationCheck(False, math.inf, math.inf, math.inf, "rotation must be real")
        m = m.real
    mode = RotationMode(mode)
    size = m.shape[0]
    if mode is RotationMode.ZERO:
        err = float(np.abs(m).max())
        ok = err <= tol
        return RotationCheck(ok, err, err, err, "" if ok else "zero mode requires the zero matrix")
    target = 1.0 if mode is RotationMode.STRICT else -1.0
    orth = float(np.abs(m.T @ m - np.eye(size)).max())
    rows = float(np.abs(m.sum(axis=1) - target).max())
    cols = float(np.abs(m.sum(axis=0) - target).max())
    problems = []
    if orth > tol:
        problems.append(f"O^T O deviates from identity by {orth:.3e}")
    if rows > tol:
        problems.append(f"row sums deviate from {target:+.0f} by {rows:.3e}")
    if cols > tol:
        problems.append(f"column sums deviate from {target:+.0f} by {cols:.3e}")
    return RotationCheck(not problems, orth, rows, cols, "; ".join(problems))


def validate_rotation(o: Any, mode: RotationMode = RotationMode.STRICT,
                      tol: float = DEFAULT_TOLERANCES.hermitian) -> bool:
    check = check_rotation(o, mode, tol)
    if not check.valid:
        logger.debug("Rejected %s rotation: %s", RotationMode(mode).value, check.message)
    return check.valid


def identity_rotation(M: int) -> np.ndarray:
    return np.eye(M)


def cycle_rotation(M: int, shift: int = 1) -> np.ndarray:
    """Permutation with O[k, (k+shift) mod M] = 1"""
    o = np.zeros((M, M))
    for k in range(M):
        o[k, (k + shift) % M] = 1.0
    return o


def random_strict_rotation(M: int, rng: np.random.Generator) -> np.ndarray:
    """Random orthogonal matrix fixing the uniform vector (1,...,1)/sqrt(M)."""
    n = np.ones(M) / math.sqrt(M)
    frame, _ = np.linalg.qr(np.column_stack([n, rng.normal(size=(M, M - 1))]))
    frame[:, 0] = n
    if M - 1 == 1:
        inner = np.array([[rng.choice([-1.0, 1.0])]])
    else:
        inner = ortho_group.rvs(M - 1, random_state=rng)
    block = np.eye(M)
    block[1:, 1:] = inner
    return frame @ block @ frame.T


@dataclass(frozen=True)
class RotationSet:
    """One M x M rotation per POVM, each with its own mode"""
    matrices: Tuple[np.ndarray, ...]
    modes: Tuple[RotationMode, ...]

    @classmethod
    def uniform(cls, o: Any, N: int, mode: RotationMode = RotationMode.STRICT) -> "RotationSet":
        m = np.asarray(o, dtype=float)
        return cls(tuple(m.copy() for _ in range(N)), tuple(RotationMode(mode) for _ in range(N)))

    @classmethod
    def strict(cls, matrices: Sequence[Any]) -> "RotationSet":
        mats = tuple(np.asarray(o, dtype=float) for o in matrices)
        return cls(mats, tuple(RotationMode.STRICT for _ in mats))

    @property
    def N(self) -> int:
        return len(self.matrices)

    @property
    def all_strict(self) -> bool:
        return all(m is RotationMode.STRICT for m in self.modes)

    def validate(self, M: int, tol: float = DEFAULT_TOLERANCES.hermitian) -> None:
        """Raise InvalidRotation on the first matrix that breaks its mode."""
        if len(self.modes) != len(self.matrices):
            raise InvalidRotation("Every rotation needs exactly one mode")
        for a, (o, mode) in enumerate(zip(self.matrices, self.modes), start=1):
            if o.shape != (M, M):
                raise InvalidRotation(f"Rotation {a} has shape {o.shape}, expected ({M}, {M})")
            check = check_rotation(o, mode, tol)
            if not check.valid:
                raise InvalidRotation(f"Rotation {a} is not a valid {mode.value} rotation: "
                                      f"{check.message}")

    def to_dict(self) -> Dict[str, Any]:
        return {"matrices": [o.tolist() for o in self.matrices],
                "modes": [m.value for m in self.modes]}


def parse_rotation_spec(spec: Any, M: int, N: int) -> RotationSet:
    """
    Turn a CLI / JSON rotation description into a RotationSet.

    Args:
        spec: "identity:<M>", "cycle:<M>", "cycle:<M>:<shift>", a single M x M
            nested list (used for every POVM), a list of N such matrices, or a
            dict {"matrices": [...], "modes": [...]}
        M: Outcomes per POVM
        N: Number of POVMs

    Returns:
        RotationSet: Unvalidated rotation set
    """
    if isinstance(spec, str):
        parts = spec.strip().lower().split(":")
        try:
            size = int(parts[1]) if len(parts) > 1 else M
            shift = int(parts[2]) if len(parts) > 2 else 1
        except ValueError as e:
            raise InvalidRotation(f"Bad rotation preset {spec!r}") from e
        if size != M:
            raise InvalidRotation(f"Rotation preset size {size} does not match M={M}")
        if parts[0] == "identity":
            return RotationSet.uniform(identity_rotation(M), N)
        if parts[0] == "cycle":
            return RotationSet.uniform(cycle_rotation(M, shift), N)
        raise InvalidRotation(f"Unknown rotation preset {spec!r}")
    if isinstance(spec, dict):
        mats = [np.asarray(o, dtype=float) for o in spec["matrices"]]
        modes = tuple(RotationMode(m) for m in spec.get("modes", ["strict"] * len(mats)))
        return RotationSet(tuple(mats), modes)
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 2:
        return RotationSet.uniform(arr, N)
    if arr.ndim == 3:
        return RotationSet.strict(list(arr))
    raise InvalidRotation(f"Cannot interpret rotation specification of shape {arr.shape}")


@dataclass(frozen=True)
class MapSpec:
    """Inputs of the positive trace-preserving map and its derived constants"""
    povm: SymmetricPovm
    rotations: RotationSet
    L: int
    a: float
    b: float
    y: float

    @classmethod
    def from_povm(cls, povm: SymmetricPovm, rotations: RotationSet, L: int) -> "MapSpec":
        """Derive y = (d - Mx)/(M(M-1)), b = (d-1)M(x-y)/d and a = b - N + 2L."""
        if not 0 <= L <= povm.N:
            raise ParameterRangeError(f"L = {L} outside 0..{povm.N}")
        if rotations.N != povm.N:
            raise InvalidRotation(f"Got {rotations.N} rotations for {povm.N} POVMs")
        d, M, x = povm.d, povm.M, povm.params.x
        y = within_overlap(d, M, x)
        b = (d - 1) * M * (x - y) / d
        return cls(povm=povm, rotations=rotations, L=L, a=b - povm.N + 2 * L, b=b, y=y)

    def to_dict(self) -> Dict[str, Any]:
        return {"L": self.L, "a": self.a, "b": self.b, "y": self.y,
                "params": self.povm.params.to_dict(), "rotations": self.rotations.to_dict()}


@dataclass(frozen=True)
class SuperOp:
    """Linear map on d x d matrices held as its Choi matrix sum |k><l| (x) Phi[|k><l|]"""
    choi: CMatrix
    d: int

    def apply(self, x_in: CMatrix) -> CMatrix:
        x = require_square(x_in, self.d)
        c = self.choi.reshape(self.d, self.d, self.d, self.d)
        return np.einsum("kl,kilj->ij", x, c)

    def trace_preservation_error(self) -> float:
        reduced = partial_trace(self.choi, (self.d, self.d), keep="A")
        return float(np.abs(reduced - np.eye(self.d)).max())

    def is_trace_preserving(self, tol: float = DEFAULT_TOLERANCES.trace) -> bool:
        return self.trace_preservation_error() <= tol


def _check_alpha(povm: SymmetricPovm, alpha: int) -> None:
    if not 1 <= alpha <= povm.N:
        raise IndexError(f"alpha = {alpha} outside 1..{povm.N}")


def apply_phi_alpha(povm: SymmetricPovm, o: Any, alpha: int, x_in: CMatrix) -> CMatrix:
    """(M/d) sum_{k,l} O[k,l] E[alpha,k] Tr(X E[alpha,l])"""
    _check_alpha(povm, alpha)
    x = require_square(x_in, povm.d)
    elems = povm.elements[alpha - 1]
    probs = np.array([np.trace(x @ e) for e in elems])
    weights = np.asarray(o) @ probs
    return (povm.M / povm.d) * sum(w * e for w, e in zip(weights, elems))


def apply_phi0(x_in: CMatrix) -> CMatrix:
    """Completely depolarizing map X -> Tr(X) 1/d"""
    x = require_square(x_in)
    d = x.shape[0]
    return np.trace(x) * np.eye(d, dtype=complex) / d


def phi_alpha_choi(povm: SymmetricPovm, o: Any, alpha: int) -> CMatrix:
    """K_alpha = (M/d) sum_{k,l} O[k,l] E[alpha,l]^T (x) E[alpha,k]"""
    _check_alpha(povm, alpha)
    elems = povm.elements[alpha - 1]
    rot = np.asarray(o)
    d, M = povm.d, povm.M
    k_alpha = np.zeros((d * d, d * d), dtype=complex)
    for k in range(M):
        for l in range(M):
            if rot[k, l] != 0:
                k_alpha += rot[k, l] * np.kron(elems[l].T, elems[k])
    return (M / d) * k_alpha


def depolarizing_choi(d: int) -> CMatrix:
    return np.eye(d * d, dtype=complex) / d


def transpose_choi(d: int) -> CMatrix:
    """Choi matrix of the transposition map (the swap operator)"""
    return swap_operator(d)


def build_map(spec: MapSpec, tolerances: Tolerances = DEFAULT_TOLERANCES) -> SuperOp:
    """
    Assemble Phi = (1/b)[a Phi_0 + sum_{alpha>L} Phi_alpha - sum_{alpha<=L} Phi_alpha].

    Args:
        spec: Map specification with strict rotations
        tolerances: Rotation and trace tolerances

    Returns:
        SuperOp: Choi representation of the map

    Raises:
        DegenerateScale: If b <= 1e-12
        InvalidRotation: If a rotation is not strict or fails its checks
    """
    if spec.b <= 1e-12:
        raise DegenerateScale(f"Map normalization b = {spec.b:.3e} vanishes; x must exceed d/M^2")
    if not spec.rotations.all_strict:
        raise InvalidRotation("The positive map construction needs strict rotations")
    spec.rotations.validate(spec.povm.M, tolerances.hermitian)
    d = spec.povm.d
    choi = spec.a * depolarizing_choi(d)
    for alpha, o in enumerate(spec.rotations.matrices, start=1):
        sign = -1.0 if alpha <= spec.L else 1.0
        choi = choi + sign * phi_alpha_choi(spec.povm, o, alpha)
    phi = SuperOp(choi=choi / spec.b, d=d)
    err = phi.trace_preservation_error()
    if err > tolerances.trace:
        logger.warning("Map is not trace preserving: deviation %.3e", err)
    return phi


def output_purity_formula(povm: SymmetricPovm, alpha: int, p: CMatrix) -> float:
    """
    Closed form of Tr(Phi_alpha[P]^2) for a strict rotation:
    M/(d^2 (M-1)) * (d - Mx + (M^2 x - d) sum_k Tr(P E[alpha,k])^2).
    """
    _check_alpha(povm, alpha)
    d, M, x = povm.d, povm.M, povm.params.x
    probs = np.array([np.trace(p @ e).real for e in povm.elements[alpha - 1]])
    return M / (d * d * (M - 1)) * (d - M * x + (M * M * x - d) * float(np.sum(probs ** 2)))


@dataclass
class ProbeReport:
    """Worst case over sampled rank-one inputs"""
    samples: int
    seed: int
    max_purity: float
    min_eigenvalue: float
    purity_bound: float
    purity_violation: bool
    eigenvalue_violation: bool

    @property
    def violation(self) -> bool:
        return self.purity_violation or self.eigenvalue_violation

    def to_dict(self) -> Dict[str, Any]:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "max_purity": self.max_purity,
            "min_eigenvalue": self.min_eigenvalue,
            "purity_bound": self.purity_bound,
            "purity_violation": self.purity_violation,
            "eigenvalue_violation": self.eigenvalue_violation,
            "violation": self.violation,
        }


def _probe_chunk(phi: SuperOp, count: int, rng: np.random.Generator) -> Tuple[float, float]:
    worst_purity, worst_eig = -math.inf, math.inf
    for _ in range(count):
        out = phi.apply(projector(haar_vector(phi.d, rng)))
        worst_purity = max(worst_purity, float(np.trace(out @ out).real))
        worst_eig = min(worst_eig, float(eigenvalues(out)[0]))
    return worst_purity, worst_eig


def positivity_probe(phi: SuperOp, samples: int = 1000, seed: int = 0,
                     tolerances: Tolerances = DEFAULT_TOLERANCES) -> ProbeReport:
    """
    Sample Haar-random rank-one projectors and track output purity and spectrum.

    Samples are drawn in chunks, each from its own child of one SeedSequence,
    so the result depends only on ``seed`` and ``samples``.

    Args:
        phi: Map under test
        samples: Number of random inputs (>= 1)
        seed: Root seed
        tolerances: probe_purity / probe_eigen thresholds

    Returns:
        ProbeReport: Worst observed purity and eigenvalue with violation flags
    """
    if samples < 1:
        raise ParameterRangeError(f"samples must be >= 1, got {samples}")
    if phi.d < 2:
        raise DimensionMismatch("Positivity probe needs d >= 2")
    n_chunks = -(-samples // PROBE_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    max_purity, min_eig = -math.inf, math.inf
    remaining = samples
    for child in children:
        count = min(PROBE_CHUNK, remaining)
        remaining -= count
        purity, eig = _probe_chunk(phi, count, np.random.default_rng(child))
        max_purity = max(max_purity, purity)
        min_eig = min(min_eig, eig)
    bound = 1.0 / (phi.d - 1)
    report = ProbeReport(
        samples=samples,
        seed=seed,
        max_purity=max_purity,
        min_eigenvalue=min_eig,
        purity_bound=bound,
        purity_violation=max_purity > bound + tolerances.probe_purity,
        eigenvalue_violation=min_eig < -tolerances.probe_eigen,
    )
    if report.violation:
        logger.info("Positivity probe flagged a violation: purity %.6g, eigenvalue %.3e",
                    max_purity, min_eig)
    return report


def map_for_povm(povm: SymmetricPovm, rotations: RotationSet, L: int,
                 tolerances: Tolerances = DEFAULT_TOLERANCES) -> Tuple[MapSpec, SuperOp]:
    """Convenience wrapper: derive the MapSpec and build its map."""
    spec = MapSpec.from_povm(povm, rotations, L)
    return spec, build_map(spec, tolerances)
