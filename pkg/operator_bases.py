"""
Operator Bases
Hermitian orthonormal operator bases (generalized Gell-Mann, d=3 MUB-derived)
and their (alpha, k) groupings used to build symmetric measurements
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import BasisError
from matrix_core import (
    CMatrix,
    DEFAULT_TOLERANCES,
    gram_matrix,
    hermiticity_error,
    require_square,
)

logger = logging.getLogger(__name__)

Label = Tuple[int, int]


def gell_mann_labels(d: int) -> List[str]:
    """Names matching the order of ``gell_mann_basis(d)``"""
    if d < 2:
        raise BasisError(f"Gell-Mann basis needs d >= 2, got {d}")
    sep = "" if d <= 10 else ","
    labels = []
    for i in range(d):
        for j in range(i + 1, d):
            labels.append(f"g{i}{sep}{j}")
            labels.append(f"g{j}{sep}{i}")
    for k in range(1, d):
        labels.append(f"g{k}{sep}{k}")
    return labels


def gell_mann_basis(d: int) -> List[CMatrix]:
    """
    Generalized Gell-Mann matrices, orthonormal under Tr(A^dagger B).

    Off-diagonal pairs come first in lexicographic (i, j) order, each as the
    symmetric element followed by the antisymmetric one, then the d-1 diagonal
    elements. For d=3 this gives g01, g10, g02, g20, g12, g21, g11, g22.

    Args:
        d: Hilbert space dimension (>= 2)

    Returns:
        List[CMatrix]: d^2 - 1 traceless Hermitian matrices
    """
    if d < 2:
        raise BasisError(f"Gell-Mann basis needs d >= 2, got {d}")
    r2 = math.sqrt(2.0)
    basis = []
    for i in range(d):
        for j in range(i + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[i, j] = sym[j, i] = 1.0 / r2
            anti = np.zeros((d, d), dtype=complex)
            anti[i, j] = -1j / r2
            anti[j, i] = 1j / r2
            basis.extend([sym, anti])
    for k in range(1, d):
        diag = np.zeros(d)
        diag[:k] = 1.0
        diag[k] = -k
        basis.append(np.diag(diag / math.sqrt(k * (k + 1))).astype(complex))
    return basis


@dataclass(frozen=True)
class GroupedBasis:
    """
    Orthonormal Hermitian basis {G0, G[alpha,k]} arranged as N groups of M-1.

    Attributes:
        d: Hilbert space dimension
        M: Outcomes per POVM (each group holds M-1 elements)
        groups: groups[alpha-1][k-1] is G[alpha,k]
        labels: Human readable names mirroring ``groups``
        name: Preset name the basis was built from
        notes: Recorded discrepancies (e.g. corrected prefactors)
    """
    d: int
    M: int
    groups: Tuple[Tuple[CMatrix, ...], ...]
    labels: Tuple[Tuple[str, ...], ...] = ()
    name: str = "custom"
    notes: Tuple[str, ...] = ()

    @property
    def N(self) -> int:
        return len(self.groups)

    @property
    def g0(self) -> CMatrix:
        return np.eye(self.d, dtype=complex) / math.sqrt(self.d)

    @property
    def is_complete(self) -> bool:
        return self.N * (self.M - 1) == self.d ** 2 - 1

    def element(self, alpha: int, k: int) -> CMatrix:
        """G[alpha,k] with 1-based indices"""
        if not (1 <= alpha <= self.N and 1 <= k <= self.M - 1):
            raise IndexError(f"G[{alpha},{k}] outside N={self.N}, M-1={self.M - 1}")
        return self.groups[alpha - 1][k - 1]

    def group_sum(self, alpha: int) -> CMatrix:
        return sum(self.groups[alpha - 1])

    def elements(self) -> List[CMatrix]:
        """All grouped elements in (alpha, k) order, without G0"""
        return [g for group in self.groups for g in group]

    def flat_labels(self) -> List[str]:
        if self.labels:
            return [name for group in self.labels for name in group]
        return [f"G{a + 1},{k + 1}" for a in range(self.N) for k in range(self.M - 1)]

    def gram(self) -> np.ndarray:
        return gram_matrix([self.g0] + self.elements())

    def select(self, alphas: Sequence[int]) -> "GroupedBasis":
        """Sub-basis keeping only the listed groups (1-based), renumbered in order."""
        picked = []
        for a in alphas:
            if not 1 <= a <= self.N:
                raise BasisError(f"Group index {a} outside 1..{self.N}")
            picked.append(a - 1)
        if len(set(picked)) != len(picked):
            raise BasisError(f"Duplicate group index in {list(alphas)}")
        labels = tuple(self.labels[a] for a in picked) if self.labels else ()
        return GroupedBasis(
            d=self.d,
            M=self.M,
            groups=tuple(self.groups[a] for a in picked),
            labels=labels,
            name=f"{self.name}[{','.join(str(a) for a in alphas)}]",
            notes=self.notes,
        )

    def validate(self, tol: float = DEFAULT_TOLERANCES.orthonormal) -> None:
        """
        Check tracelessness, Hermiticity and orthonormality of {G0} u {G[alpha,k]}.

        Raises:
            BasisError: On the first violated condition
        """
        if self.M < 2:
            raise BasisError(f"M must be >= 2, got {self.M}")
        for a, group in enumerate(self.groups, start=1):
            if len(group) != self.M - 1:
                raise BasisError(f"Group {a} has {len(group)} elements, expected {self.M - 1}")
            for k, g in enumerate(group, start=1):
                require_square(g, self.d)
                if abs(np.trace(g)) > tol:
                    raise BasisError(f"G[{a},{k}] is not traceless: Tr = {np.trace(g):.3e}")
                if hermiticity_error(g) > tol:
                    raise BasisError(f"G[{a},{k}] is not Hermitian")
        if self.N * (self.M - 1) > self.d ** 2 - 1:
            raise BasisError(
                f"N*(M-1) = {self.N * (self.M - 1)} exceeds d^2-1 = {self.d ** 2 - 1}"
            )
        gram = self.gram()
        err = float(np.abs(gram - np.eye(gram.shape[0])).max())
        if err > tol:
            raise BasisError(f"Basis is not orthonormal: max Gram deviation {err:.3e}")


def group_basis(elements: Sequence[CMatrix], assignment: Sequence[Label],
                labels: Optional[Sequence[str]] = None, name: str = "custom",
                notes: Sequence[str] = (),
                tol: float = DEFAULT_TOLERANCES.orthonormal) -> GroupedBasis:
    """
    Arrange traceless orthonormal elements into an (alpha, k) grid.

    Args:
        elements: Candidate basis elements
        assignment: One 1-based (alpha, k) label per element
        labels: Optional names of the elements
        name: Name recorded on the result
        notes: Discrepancies carried over from the source basis
        tol: Orthonormality tolerance

    Returns:
        GroupedBasis: Validated basis

    Raises:
        BasisError: On duplicate labels, incomplete grids or non-orthonormal input
    """
    if len(elements) != len(assignment):
        raise BasisError(
            f"Got {len(elements)} elements but {len(assignment)} (alpha, k) labels"
        )
    if not assignment:
        raise BasisError("Empty grouping")
    seen: Dict[Label, int] = {}
    for n, lab in enumerate(assignment):
        lab = (int(lab[0]), int(lab[1]))
        if lab in seen:
            raise BasisError(f"Duplicate label {lab}")
        seen[lab] = n
    n_groups = max(a for a, _ in seen)
    width = max(k for _, k in seen)
    for a in range(1, n_groups + 1):
        for k in range(1, width + 1):
            if (a, k) not in seen:
                raise BasisError(f"Incomplete grid: label ({a}, {k}) missing")
    if min(min(a, k) for a, k in seen) < 1:
        raise BasisError("Labels are 1-based")
    names = list(labels) if labels is not None else [f"e{n}" for n in range(len(elements))]
    d = require_square(elements[0]).shape[0]
    groups = tuple(
        tuple(np.asarray(elements[seen[(a, k)]], dtype=complex) for k in range(1, width + 1))
        for a in range(1, n_groups + 1)
    )
    group_labels = tuple(
        tuple(names[seen[(a, k)]] for k in range(1, width + 1))
        for a in range(1, n_groups + 1)
    )
    basis = GroupedBasis(d=d, M=width + 1, groups=groups, labels=group_labels,
                         name=name, notes=tuple(notes))
    basis.validate(tol)
    return basis


@dataclass(frozen=True)
class GroupingPreset:
    """Named (alpha, k) assignment for an ordered list of basis elements"""
    name: str
    assignment: Tuple[Label, ...]
    description: str = ""

    def apply(self, elements: Sequence[CMatrix], labels: Optional[Sequence[str]] = None,
              basis_name: str = "custom", notes: Sequence[str] = ()) -> GroupedBasis:
        return group_basis(elements, self.assignment, labels,
                           name=f"{basis_name}/{self.name}", notes=notes)


# Element order g01, g10, g02, g20, g12, g21, g11, g22 (Gell-Mann) or
# G11, G12, G21, G22, G31, G32, G41, G42 (MUB-derived)
EX3_GROUPING = GroupingPreset(
    name="ex3",
    assignment=((1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2), (4, 1), (4, 2)),
    description="N=4, M=3: pairs {g01,g10}, {g02,g20}, {g12,g21}, {g11,g22}",
)

EX5_GROUPING = GroupingPreset(
    name="ex5",
    assignment=((1, 1), (1, 3), (1, 2), (1, 4), (2, 1), (2, 2), (2, 3), (2, 4)),
    description="N=2, M=5: {g01,g02,g10,g20}, {g12,g21,g11,g22}",
)

EX4_GROUPING = GroupingPreset(
    name="ex4",
    assignment=((4, 1), (1, 1), (2, 1), (3, 1), (5, 1), (6, 1), (7, 1), (8, 1)),
    description="N=8, M=2: G1..G3 = G12,G21,G22 and G4..G8 = G11,G31,G32,G41,G42",
)

GROUPING_PRESETS: Dict[str, GroupingPreset] = {
    p.name: p for p in (EX3_GROUPING, EX4_GROUPING, EX5_GROUPING)
}


def chunk_grouping(count: int, M: int) -> GroupingPreset:
    """Consecutive groups of M-1 elements, dropping any remainder"""
    if M < 2:
        raise BasisError(f"M must be >= 2, got {M}")
    width = M - 1
    n_groups = count // width
    if n_groups == 0:
        raise BasisError(f"{count} elements cannot fill a single group of {width}")
    assignment = tuple((n // width + 1, n % width + 1) for n in range(n_groups * width))
    return GroupingPreset(name=f"chunk:{M}", assignment=assignment)


@dataclass(frozen=True)
class MubFamily:
    """The four mutually unbiased bases of C^3 as rank-one projectors"""
    d: int
    projectors: Tuple[Tuple[CMatrix, ...], ...]
    omega: complex
    u: complex
    v: complex

    def projector(self, alpha: int, k: int) -> CMatrix:
        return self.projectors[alpha - 1][k - 1]

    def max_deviation(self) -> float:
        """Largest violation of idempotence, unit trace, orthogonality or unbiasedness"""
        worst = 0.0
        flat = [(a, k, p) for a, group in enumerate(self.projectors)
                for k, p in enumerate(group)]
        for a, k, p in flat:
            worst = max(worst, float(np.abs(p @ p - p).max()), abs(np.trace(p) - 1))
            for b, l, q in flat:
                if (b, l) <= (a, k):
                    continue
                overlap = np.trace(p @ q).real
                target = 0.0 if a == b else 1.0 / self.d
                worst = max(worst, abs(overlap - target))
        for group in self.projectors:
            worst = max(worst, float(np.abs(sum(group) - np.eye(self.d)).max()))
        return worst


def mub_projectors_d3() -> MubFamily:
    """Projectors E[alpha,k] of the complete MUB set in d=3, omega = exp(2 pi i / 3)."""
    w = cmath.exp(2j * math.pi / 3)
    w2 = w * w
    third = 1.0 / 3.0

    def mat(rows):
        return third * np.array(rows, dtype=complex)

    e1 = tuple(np.diag(row).astype(complex) for row in np.eye(3))
    e2 = (
        mat([[1, 1, 1], [1, 1, 1], [1, 1, 1]]),
        mat([[1, w2, w], [w, 1, w2], [w2, w, 1]]),
        mat([[1, w, w2], [w2, 1, w], [w, w2, 1]]),
    )
    e3 = (
        mat([[1, w2, w2], [w, 1, 1], [w, 1, 1]]),
        mat([[1, w, 1], [w2, 1, w2], [1, w, 1]]),
        mat([[1, 1, w], [1, 1, w], [w2, w2, 1]]),
    )
    e4 = (
        mat([[1, w, w], [w2, 1, 1], [w2, 1, 1]]),
        mat([[1, w2, 1], [w, 1, w], [1, w2, 1]]),
        mat([[1, 1, w2], [1, 1, w2], [w, w, 1]]),
    )
    r3 = math.sqrt(3.0)
    return MubFamily(
        d=3,
        projectors=(e1, e2, e3, e4),
        omega=w,
        u=(1 - 1j) * (1 + r3),
        v=2 + r3 + 1j,
    )


@dataclass
class MubBasisReport:
    """Outcome of evaluating the closed-form MUB-derived basis"""
    norms: Dict[str, float]
    prefactor_corrections: Dict[str, float] = field(default_factory=dict)
    max_gram_deviation: float = 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            "norms": dict(self.norms),
            "prefactor_corrections": dict(self.prefactor_corrections),
            "max_gram_deviation": self.max_gram_deviation,
        }


MUB3_LABELS = ("G11", "G12", "G21", "G22", "G31", "G32", "G41", "G42")


def _mub3_closed_forms() -> List[CMatrix]:
    """The eight matrices with the prefactors as they are commonly printed"""
    fam = mub_projectors_d3()
    u, v = fam.u, fam.v
    uc, vc = u.conjugate(), v.conjugate()
    r3 = math.sqrt(3.0)
    p1 = 1.0 / (r3 * (1 + r3))
    p2 = 1.0 / (2 * r3 * (1 + r3))
    a = np.array
    return [
        p1 * np.diag([-2 - r3, 1, 1 + r3]).astype(complex),
        p1 * np.diag([1, -2 - r3, 1 + r3]).astype(complex),
        p2 * a([[0, -vc, -v], [-v, 0, -vc], [-vc, -v, 0]], dtype=complex),
        p1 * a([[0, 1j * vc, -1j * v], [-1j * v, 0, 1j * vc], [1j * vc, -1j * v, 0]], dtype=complex),
        p2 * a([[0, uc, 1j * vc], [u, 0, -vc], [-1j * v, -v, 0]], dtype=complex),
        p1 * a([[0, u, -vc], [uc, 0, 1j * vc], [-v, -1j * v, 0]], dtype=complex),
        p2 * a([[0, u, -1j * v], [uc, 0, -v], [1j * vc, -vc, 0]], dtype=complex),
        p1 * a([[0, uc, -v], [u, 0, -1j * v], [-vc, 1j * vc, 0]], dtype=complex),
    ]


def mub_elements_d3(tol: float = DEFAULT_TOLERANCES.orthonormal
                    ) -> Tuple[List[CMatrix], MubBasisReport]:
    """
    Evaluate the MUB-derived basis and repair any element with a wrong norm.

    The printed prefactor of G22, G32 and G42 leaves them with Frobenius norm 2.
    Such elements are rescaled to unit norm; each correction is logged and
    recorded in the report, never applied silently.

    Returns:
        Tuple[List[CMatrix], MubBasisReport]: Elements in G11..G42 order and the report
    """
    raw = _mub3_closed_forms()
    norms = {name: float(np.linalg.norm(g)) for name, g in zip(MUB3_LABELS, raw)}
    report = MubBasisReport(norms=norms)
    fixed = []
    for name, g in zip(MUB3_LABELS, raw):
        n = norms[name]
        if abs(n - 1.0) > tol:
            logger.warning("MUB basis element %s has norm %.12g; rescaling prefactor by %.12g",
                           name, n, 1.0 / n)
            report.prefactor_corrections[name] = 1.0 / n
            g = g / n
        fixed.append(g)
    gram = gram_matrix([np.eye(3, dtype=complex) / math.sqrt(3.0)] + fixed)
    report.max_gram_deviation = float(np.abs(gram - np.eye(9)).max())
    return fixed, report


def mub_basis_d3(tol: float = DEFAULT_TOLERANCES.orthonormal) -> GroupedBasis:
    """MUB-derived basis of d=3 grouped as N=4, M=3 (G[alpha,1], G[alpha,2] per basis)."""
    elements, report = mub_elements_d3(tol)
    notes = tuple(
        f"{name}: printed prefactor rescaled by {scale:.12g}"
        for name, scale in sorted(report.prefactor_corrections.items())
    )
    return EX3_GROUPING.apply(elements, MUB3_LABELS, basis_name="mub3", notes=notes)


def basis_elements(preset: str) -> Tuple[List[CMatrix], List[str], Tuple[str, ...]]:
    """
    Resolve a basis preset name.

    Args:
        preset: "gellmann:<d>" or "mub3"

    Returns:
        Tuple: (elements, labels, notes)

    Raises:
        BasisError: On unknown presets
    """
    key = preset.strip().lower()
    if key.startswith("gellmann:"):
        try:
            d = int(key.split(":", 1)[1])
        except ValueError as e:
            raise BasisError(f"Bad Gell-Mann preset {preset!r}") from e
        return gell_mann_basis(d), gell_mann_labels(d), ()
    if key == "mub3":
        elements, report = mub_elements_d3()
        notes = tuple(
            f"{name}: printed prefactor rescaled by {scale:.12g}"
            for name, scale in sorted(report.prefactor_corrections.items())
        )
        return elements, list(MUB3_LABELS), notes
    raise BasisError(f"Unknown basis preset {preset!r} (expected gellmann:<d> or mub3)")


def resolve_basis(preset: str, grouping: Optional[str] = None,
                  alphas: Optional[Sequence[int]] = None) -> GroupedBasis:
    """
    Build a GroupedBasis from CLI-style preset names.

    Args:
        preset: Basis preset ("gellmann:<d>" or "mub3")
        grouping: "ex3", "ex4", "ex5", "natural" or "chunk:<M>"; defaults to
            "natural" for mub3 and chunks of one (M=2) otherwise
        alphas: Optional 1-based subset of groups to keep

    Returns:
        GroupedBasis: Validated grouped basis
    """
    elements, labels, notes = basis_elements(preset)
    key = (grouping or ("natural" if preset.strip().lower() == "mub3" else "chunk:2")).lower()
    if key == "natural":
        if preset.strip().lower() != "mub3":
            raise BasisError("The natural grouping is only defined for mub3")
        chosen = EX3_GROUPING
    elif key.startswith("chunk:"):
        try:
            chosen = chunk_grouping(len(elements), int(key.split(":", 1)[1]))
        except ValueError as e:
            raise BasisError(f"Bad chunk grouping {grouping!r}") from e
    elif key in GROUPING_PRESETS:
        chosen = GROUPING_PRESETS[key]
    else:
        raise BasisError(f"Unknown grouping preset {grouping!r}")
    if len(chosen.assignment) < len(elements):
        used = len(chosen.assignment)
        logger.warning("Grouping %s uses %d of %d elements of %s; dropping %s",
                       chosen.name, used, len(elements), preset, ", ".join(labels[used:]))
        elements = elements[:used]
        labels = labels[:used]
    elif len(chosen.assignment) > len(elements):
        raise BasisError(
            f"Grouping {chosen.name} needs {len(chosen.assignment)} elements, "
            f"basis {preset} has {len(elements)}"
        )
    basis = chosen.apply(elements, labels, basis_name=preset, notes=notes)
    if alphas:
        basis = basis.select(alphas)
    return basis
