"""
Symmetric Measurements
Build (N,M)-POVMs E[alpha,k] = 1/M + t H[alpha,k] from a grouped operator basis,
check the symmetry conditions and evaluate probability diagnostics
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from errors import (
    InvalidState,
    NotHermitianState,
    NotPSD,
    ParameterRangeError,
    PositivityViolation,
    WitnessLabError,
)
from matrix_core import (
    CMatrix,
    DEFAULT_TOLERANCES,
    Tolerances,
    gram_matrix,
    hermiticity_error,
    min_eigenvalue,
    require_square,
)
from operator_bases import GroupedBasis

logger = logging.getLogger(__name__)

BISECTION_STEPS = 60


def _s(M: int) -> float:
    return math.sqrt(M) + 1.0


class XRange(NamedTuple):
    """Admissible x interval (low, high], open at the lower end"""
    low: float
    high: float

    def contains(self, x: float) -> bool:
        return self.low < x <= self.high


def x_range(d: int, M: int) -> XRange:
    if M < 2:
        raise ParameterRangeError(f"M must be >= 2, got {M}")
    return XRange(d / M ** 2, min(d ** 2 / M ** 2, d / M))


def x_from_t(d: int, M: int, t: float) -> float:
    return d / M ** 2 + t * t * (M - 1) * _s(M) ** 2


def t_from_x(d: int, M: int, x: float) -> float:
    """Non-negative t producing ``x``; raises below the lower end of the range."""
    low = d / M ** 2
    if x < low:
        raise ParameterRangeError(f"x = {x} is below d/M^2 = {low}")
    return math.sqrt((x - low) / ((M - 1) * _s(M) ** 2))


def within_overlap(d: int, M: int, x: float) -> float:
    """Tr(E[alpha,k] E[alpha,l]) for k != l"""
    return (d - M * x) / (M * (M - 1))


@dataclass(frozen=True)
class PovmParams:
    d: int
    N: int
    M: int
    x: float
    t: float

    @property
    def degenerate(self) -> bool:
        """True when x sits on the open lower boundary d/M^2"""
        return self.t == 0.0 or self.x <= self.d / self.M ** 2

    def to_dict(self) -> Dict[str, float]:
        return {"d": self.d, "N": self.N, "M": self.M, "x": self.x, "t": self.t,
                "degenerate": self.degenerate}


@dataclass(frozen=True)
class HFamily:
    """Traceless operators H[alpha,k] and group sums G_alpha"""
    operators: Tuple[Tuple[CMatrix, ...], ...]
    group_sums: Tuple[CMatrix, ...]
    M: int

    def operator(self, alpha: int, k: int) -> CMatrix:
        return self.operators[alpha - 1][k - 1]


def build_h_family(basis: GroupedBasis) -> HFamily:
    """
    H[alpha,k] = G_alpha - sqrt(M)(sqrt(M)+1) G[alpha,k] for k < M and
    H[alpha,M] = (sqrt(M)+1) G_alpha, with G_alpha the sum of the group.
    """
    M = basis.M
    s = _s(M)
    ops = []
    sums = []
    for group in basis.groups:
        g_alpha = sum(group)
        row = [g_alpha - math.sqrt(M) * s * g for g in group]
        row.append(s * g_alpha)
        ops.append(tuple(row))
        sums.append(g_alpha)
    return HFamily(operators=tuple(ops), group_sums=tuple(sums), M=M)


@dataclass(frozen=True)
class SymmetricPovm:
    """N POVMs of M elements each, built from ``source``"""
    params: PovmParams
    elements: Tuple[Tuple[CMatrix, ...], ...]
    source: GroupedBasis

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def M(self) -> int:
        return self.params.M

    def element(self, alpha: int, k: int) -> CMatrix:
        if not (1 <= alpha <= self.N and 1 <= k <= self.M):
            raise IndexError(f"E[{alpha},{k}] outside N={self.N}, M={self.M}")
        return self.elements[alpha - 1][k - 1]

    def all_elements(self) -> List[CMatrix]:
        return [e for povm in self.elements for e in povm]


@dataclass
class DefinitionReport:
    """Largest deviation of each symmetry condition"""
    trace: float
    purity: float
    within: float
    cross: float
    resolution: float
    min_eigenvalue: float

    @property
    def max_deviation(self) -> float:
        return max(self.trace, self.purity, self.within, self.cross, self.resolution)

    def holds(self, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
        return bool(self.max_deviation <= tol)

    def to_dict(self) -> Dict[str, float]:
        return {
            "trace": self.trace,
            "purity": self.purity,
            "within": self.within,
            "cross": self.cross,
            "resolution": self.resolution,
            "min_eigenvalue": self.min_eigenvalue,
            "max_deviation": self.max_deviation,
        }


def definition_report(povm: SymmetricPovm) -> DefinitionReport:
    """Measure Tr E = d/M, Tr E^2 = x, the two overlap values and sum_k E = 1."""
    d, M, x = povm.d, povm.M, povm.params.x
    y = within_overlap(d, M, x)
    trace = purity = within = cross = resolution = 0.0
    lowest = math.inf
    for a, povm_a in enumerate(povm.elements):
        resolution = max(resolution,
                         float(np.abs(sum(povm_a) - np.eye(d)).max()))
        for k, e in enumerate(povm_a):
            trace = max(trace, abs(np.trace(e).real - d / M))
            lowest = min(lowest, min_eigenvalue(e))
            for b, povm_b in enumerate(povm.elements):
                for l, f in enumerate(povm_b):
                    if (b, l) < (a, k):
                        continue
                    overlap = np.trace(e @ f).real
                    if (a, k) == (b, l):
                        purity = max(purity, abs(overlap - x))
                    elif a == b:
                        within = max(within, abs(overlap - y))
                    else:
                        cross = max(cross, abs(overlap - d / M ** 2))
    return DefinitionReport(trace, purity, within, cross, resolution, lowest)


def build_povm(basis: GroupedBasis, t: float,
               tolerances: Tolerances = DEFAULT_TOLERANCES) -> SymmetricPovm:
    """
    Construct the (N,M)-POVM E[alpha,k] = 1/M + t H[alpha,k].

    Args:
        basis: Grouped operator basis
        t: Construction parameter (t = 0 is accepted and flagged degenerate)
        tolerances: Positivity and symmetry tolerances

    Returns:
        SymmetricPovm: Verified measurement set

    Raises:
        PositivityViolation: If some element has an eigenvalue below -tolerances.psd
    """
    d, M = basis.d, basis.M
    h = build_h_family(basis)
    ident = np.eye(d, dtype=complex) / M
    elements = []
    for a, row in enumerate(h.operators, start=1):
        povm_a = []
        for k, op in enumerate(row, start=1):
            e = ident + t * op
            lam = min_eigenvalue(e)
            if lam < -tolerances.psd:
                raise PositivityViolation(a, k, lam)
            povm_a.append(e)
        elements.append(tuple(povm_a))
    params = PovmParams(d=d, N=basis.N, M=M, x=x_from_t(d, M, t), t=float(t))
    povm = SymmetricPovm(params=params, elements=tuple(elements), source=basis)
    report = definition_report(povm)
    if not report.holds(tolerances.psd):
        raise WitnessLabError(
            f"Symmetry conditions fail by {report.max_deviation:.3e}; the basis is not orthonormal"
        )
    if params.degenerate:
        logger.warning("POVM built at t=0: x=d/M^2 lies on the open boundary of its range")
    return povm


def build_povm_for_x(basis: GroupedBasis, x: float,
                     tolerances: Tolerances = DEFAULT_TOLERANCES) -> SymmetricPovm:
    """Build the POVM for a given x, which must lie in (d/M^2, min(d^2/M^2, d/M)]."""
    rng = x_range(basis.d, basis.M)
    if not rng.contains(x):
        raise ParameterRangeError(
            f"x = {x} outside the admissible range ({rng.low:.12g}, {rng.high:.12g}]"
        )
    return build_povm(basis, t_from_x(basis.d, basis.M, x), tolerances)


def _min_element_eigenvalue(h: HFamily, d: int, t: float) -> float:
    return min(1.0 / h.M + t * min_eigenvalue(op) for row in h.operators for op in row)


def optimal_t(basis: GroupedBasis) -> float:
    """Largest t keeping every element PSD, capped at the top of the x range."""
    h = build_h_family(basis)
    t_upper = t_from_x(basis.d, basis.M, x_range(basis.d, basis.M).high)
    if _min_element_eigenvalue(h, basis.d, t_upper) >= 0.0:
        return t_upper
    lo, hi = 0.0, t_upper
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if _min_element_eigenvalue(h, basis.d, mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def optimal_x(basis: GroupedBasis) -> float:
    """
    Largest admissible x for which every E[alpha,k] stays positive.

    Args:
        basis: Grouped operator basis

    Returns:
        float: x_opt, never above the upper end of the x range
    """
    return min(x_from_t(basis.d, basis.M, optimal_t(basis)),
               x_range(basis.d, basis.M).high)


class IcClass(NamedTuple):
    N: int
    M: int
    tags: Tuple[str, ...]


def ic_classes(d: int) -> List[IcClass]:
    """
    All informationally complete (N, M) pairs with N = (d^2-1)/(M-1).

    Tags name the four families that exist in every dimension:
    "general SIC" (M=d^2), "MUM" (M=d), "M=2" and "M=d+2".
    """
    if d < 2:
        raise ParameterRangeError(f"d must be >= 2, got {d}")
    out = []
    for M in range(2, d * d + 1):
        if (d * d - 1) % (M - 1):
            continue
        tags = []
        if M == d * d:
            tags.append("general SIC")
        if M == d:
            tags.append("MUM")
        if M == 2:
            tags.append("M=2")
        if M == d + 2:
            tags.append("M=d+2")
        out.append(IcClass(N=(d * d - 1) // (M - 1), M=M, tags=tuple(tags)))
    return out


def is_informationally_complete(povm: SymmetricPovm, tol: float = 1e-9) -> bool:
    """True when the N*M elements span the full d^2-dimensional operator space."""
    gram = gram_matrix(povm.all_elements())
    vals = np.linalg.eigvalsh((gram + gram.conj().T) / 2)
    return int(np.sum(vals > tol)) == povm.d ** 2


def _require_state(rho: CMatrix, d: int, tolerances: Tolerances) -> CMatrix:
    m = require_square(rho, d)
    if hermiticity_error(m) > tolerances.hermitian:
        raise NotHermitianState("State is not Hermitian")
    lam = min_eigenvalue(m)
    if lam < -tolerances.psd:
        raise NotPSD(f"State has negative eigenvalue {lam:.3e}", lam)
    tr = np.trace(m).real
    if abs(tr - 1.0) > tolerances.trace:
        raise InvalidState(f"State trace is {tr:.12g}, expected 1", tr)
    return m


@dataclass
class ProbabilityTable:
    """p[alpha-1, k-1] = Tr(E[alpha,k] rho) and the purity of rho"""
    p: np.ndarray
    purity: float

    def coincidence(self, L: Optional[int] = None) -> float:
        """Sum of squared probabilities over the first L POVMs"""
        rows = self.p if L is None else self.p[:L]
        return float(np.sum(rows ** 2))


def probabilities(povm: SymmetricPovm, rho: CMatrix,
                  tolerances: Tolerances = DEFAULT_TOLERANCES) -> ProbabilityTable:
    m = _require_state(rho, povm.d, tolerances)
    p = np.array([[np.trace(e @ m).real for e in row] for row in povm.elements])
    purity = float(np.trace(m @ m).real)
    return ProbabilityTable(p=p, purity=purity)


class CoincidenceCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool
    equality_deviation: Optional[float]


def coincidence_bound(povm: SymmetricPovm, L: int, purity: float) -> float:
    """L/M + (M^2 x - d)(d Tr rho^2 - 1)/(d M (M-1))"""
    d, M, x = povm.d, povm.M, povm.params.x
    return L / M + (M * M * x - d) * (d * purity - 1) / (d * M * (M - 1))


def pure_state_bound(povm: SymmetricPovm, L: int) -> float:
    return coincidence_bound(povm, L, 1.0)


def full_coincidence_sum(povm: SymmetricPovm, purity: float) -> float:
    """Closed form of the full index sum for an informationally complete set."""
    d, M, x = povm.d, povm.M, povm.params.x
    return (d * (M * M * x - d) * purity + d ** 3 - M * M * x) / (d * M * (M - 1))


def coincidence_bound_check(povm: SymmetricPovm, rho: CMatrix, L: int,
                            tolerances: Tolerances = DEFAULT_TOLERANCES) -> CoincidenceCheck:
    """
    Compare sum_{alpha<=L} sum_k p^2 with its upper bound.

    For L = N on an informationally complete set the bound is attained, and
    the deviation from equality is reported; otherwise it is None.
    """
    if not 1 <= L <= povm.N:
        raise ParameterRangeError(f"L = {L} outside 1..{povm.N}")
    table = probabilities(povm, rho, tolerances)
    lhs = table.coincidence(L)
    rhs = coincidence_bound(povm, L, table.purity)
    equality = None
    if L == povm.N and is_informationally_complete(povm):
        equality = abs(lhs - rhs)
    return CoincidenceCheck(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + tolerances.coincidence),
                            equality_deviation=equality)
