"""
Reference Examples
Registry of the reference witness / PPT-state pairs (three d=3 examples),
their construction recipes and a reproduction check for each
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from entanglement_lab import (
    CertificateReport,
    block_positivity_min,
    certify_indecomposable,
    evaluate,
    validate_state,
)
from errors import UnknownExample
from matrix_core import CMatrix, DEFAULT_TOLERANCES, Tolerances, hermiticity_error
from operator_bases import GroupedBasis, mub_projectors_d3, resolve_basis
from positive_maps import RotationSet, cycle_rotation, identity_rotation
from witness_factory import (
    ProportionalityReport,
    Witness,
    m2_witness,
    proportionality,
    rescaled_witness,
    weighted_witness,
)

logger = logging.getLogger(__name__)

R3 = math.sqrt(3.0)
R5 = math.sqrt(5.0)

Entries = Dict[Tuple[int, int], complex]


def _from_entries(diag: List[complex], off: Entries, prefactor: float) -> CMatrix:
    """Build a 9x9 matrix from its diagonal and 1-indexed off-diagonal entries."""
    m = np.diag(np.asarray(diag, dtype=complex))
    for (r, c), value in off.items():
        m[r - 1, c - 1] = value
    return prefactor * m


@dataclass(frozen=True)
class ExampleRecipe:
    """How to rebuild a registered witness"""
    basis: str
    grouping: str
    alphas: Optional[Tuple[int, ...]]
    form: str
    rotation: np.ndarray
    L: Optional[int] = None
    signs: Optional[Tuple[int, ...]] = None
    weight_readings: Dict[str, float] = field(default_factory=dict)
    x: Optional[float] = None

    def grouped_basis(self, basis: Optional[str] = None) -> GroupedBasis:
        return resolve_basis(basis or self.basis, self.grouping, self.alphas)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "basis": self.basis,
            "grouping": self.grouping,
            "alphas": list(self.alphas) if self.alphas else None,
            "form": self.form,
            "rotation": self.rotation.tolist(),
            "L": self.L,
            "signs": list(self.signs) if self.signs else None,
            "weight_readings": dict(self.weight_readings),
            "x": self.x,
        }


@dataclass(frozen=True)
class ExampleBundle:
    """
    A reference witness / state pair.

    witness_display and state_display hold the matrices exactly as printed,
    prefactors included. witness_reference is the Hermitian matrix used for
    comparisons; it differs from the display only where an erratum is noted.
    """
    id: str
    title: str
    witness_display: CMatrix
    state_display: CMatrix
    witness_reference: CMatrix
    construction: ExampleRecipe
    constants: Dict[str, complex]
    errata: Tuple[str, ...] = ()


def _example3() -> ExampleBundle:
    z = 3 * (1 - 1j * R3)
    w_off = {(1, 5): z, (1, 9): z, (5, 9): z,
             (5, 1): z.conjugate(), (9, 1): z.conjugate(), (9, 5): z.conjugate()}
    witness = _from_entries([2, 2, 8, 8, 2, 2, 2, 8, 2], w_off, 1 / 6)
    r = -5 * (5 - 12j)
    s_off = {(1, 5): r, (1, 9): r, (5, 9): r,
             (5, 1): r.conjugate(), (9, 1): r.conjugate(), (9, 5): r.conjugate()}
    state = _from_entries([125, 125, 34, 34, 125, 125, 125, 34, 125], s_off, 1 / 579)
    recipe = ExampleRecipe(
        basis="gellmann:3",
        grouping="ex3",
        alphas=None,
        form="rescaled",
        rotation=cycle_rotation(3, 1),
        L=3,
        x=5 / 9,
    )
    return ExampleBundle(
        id="ex3",
        title="Mutually unbiased measurements from Gell-Mann matrices, L=3",
        witness_display=witness,
        state_display=state,
        witness_reference=witness,
        construction=recipe,
        constants={},
        errata=("state prefactor 1/579 does not match the diagonal sum 852; "
                "the state is renormalized by its trace",),
    )


def _example4() -> ExampleBundle:
    w_off: Entries = {}
    for r, c in ((1, 5), (1, 9), (5, 9)):
        w_off[(r, c)] = w_off[(c, r)] = 2
    for r, c in ((2, 6), (2, 7), (6, 7), (3, 4), (3, 8), (4, 8)):
        w_off[(r, c)] = w_off[(c, r)] = -4
    diag = [2 + R3, 5, 5 - R3, 5, 2 - R3, 5 + R3, 5 - R3, 5 + R3, 2]
    witness = _from_entries(diag, w_off, 1 / 6)
    s_off: Entries = {}
    for r, c in ((1, 5), (1, 9), (5, 9)):
        s_off[(r, c)] = s_off[(c, r)] = 1
    for r, c in ((2, 6), (2, 7), (6, 7), (3, 4), (3, 8), (4, 8)):
        s_off[(r, c)] = s_off[(c, r)] = 2
    state = _from_entries([3, 2, 2, 2, 3, 2, 2, 2, 3], s_off, 1 / 21)
    fam = mub_projectors_d3()
    recipe = ExampleRecipe(
        basis="mub3",
        grouping="ex4",
        alphas=(1, 2, 3, 5, 6, 7, 8),
        form="m2",
        rotation=identity_rotation(2),
        L=3,
        signs=(-1, -1, -1, -1, 1, 1, 1, 1),
        x=3 * (5 - 2 * R3) / 4,
    )
    return ExampleBundle(
        id="ex4",
        title="(N,2)-POVMs from the MUB-derived basis, N=7, L=3",
        witness_display=witness,
        state_display=state,
        witness_reference=witness,
        construction=recipe,
        constants={"u": fam.u, "v": fam.v, "omega": fam.omega},
        errata=("G22, G32 and G42 of the MUB-derived basis need half the printed prefactor",
                "G11 is not used: seven two-outcome POVMs with L=3"),
    )


def _example5() -> ExampleBundle:
    a = 15 * (1 - 1j) * (2 - 1j + R5)
    b = 15 * (1 - 1j) * (2 + 1j + R5)
    c = -30 * R5 * (2 + R5)
    d = 30 * (1 - 2j) * (2 + R5)
    off = {
        (1, 5): b.conjugate(), (1, 6): c, (1, 8): d.conjugate(), (1, 9): b.conjugate(),
        (2, 4): a.conjugate(), (2, 7): -30j,
        (3, 4): 30j, (3, 7): -a.conjugate(),
        (4, 2): a, (4, 3): -30j,
        (5, 1): b, (6, 1): c,
        (7, 2): 30j, (7, 3): -a.conjugate(),
        (8, 1): d, (9, 1): b,
    }
    witness = _from_entries([4] * 9, off, 1 / 6)
    corrected = dict(off)
    corrected[(3, 7)] = -a
    reference = _from_entries([4] * 9, corrected, 1 / 6)
    s_off = {(2, 4): 3 - 6j, (4, 2): 3 + 6j, (3, 7): -3 - 6j, (7, 3): -3 + 6j}
    state = _from_entries([10] * 9, s_off, 1 / 90)
    s = 1 + R5
    recipe = ExampleRecipe(
        basis="gellmann:3",
        grouping="ex5",
        alphas=(1,),
        form="weighted",
        rotation=cycle_rotation(5, -1),
        L=1,
        weight_readings={"total": 5 * s * s, "additional": 1 + 5 * s * s},
    )
    return ExampleBundle(
        id="ex5",
        title="(1,5)-POVM from Gell-Mann matrices with a boosted subtraction",
        witness_display=witness,
        state_display=state,
        witness_reference=reference,
        construction=recipe,
        constants={"A": a, "B": b, "C": c, "D": d},
        errata=("entry (3,7) is printed as -A*; Hermiticity requires -A",),
    )


_BUILDERS: Dict[str, Callable[[], ExampleBundle]] = {
    "ex3": _example3,
    "ex4": _example4,
    "ex5": _example5,
}


def list_examples() -> List[str]:
    return sorted(_BUILDERS)


def load_example(example_id: str) -> ExampleBundle:
    """
    Return the registered example.

    Raises:
        UnknownExample: For ids outside ex3, ex4, ex5
    """
    key = example_id.strip().lower()
    if key not in _BUILDERS:
        raise UnknownExample(f"Unknown example {example_id!r}; known: {', '.join(list_examples())}")
    bundle = _BUILDERS[key]()
    if hermiticity_error(bundle.witness_display) > 1e-12:
        logger.warning("%s: printed witness is not Hermitian; comparing against the corrected "
                       "matrix", bundle.id)
    return bundle


def build_example_witness(bundle: ExampleBundle, weight: Optional[float] = None,
                          basis: Optional[str] = None) -> Witness:
    """
    Run an example's recipe through the witness factory.

    Args:
        bundle: Registered example
        weight: Boost weight for the weighted form (defaults to the "total" reading)
        basis: Optional basis preset replacing the recipe's own

    Returns:
        Witness: Constructed witness
    """
    recipe = bundle.construction
    grouped = recipe.grouped_basis(basis)
    rotations = RotationSet.uniform(recipe.rotation, grouped.N)
    if recipe.form == "rescaled":
        return rescaled_witness(grouped, rotations, recipe.L)
    if recipe.form == "m2":
        return m2_witness(grouped, recipe.signs)
    if recipe.form == "weighted":
        w = recipe.weight_readings["total"] if weight is None else weight
        return weighted_witness(grouped, rotations, [w] * grouped.N)
    raise ValueError(f"Unsupported recipe form {recipe.form!r}")


@dataclass
class ReproductionReport:
    id: str
    comparison: ProportionalityReport
    matched: bool
    certificate: CertificateReport
    weight_reading: Optional[str] = None
    readings: Dict[str, Dict[str, float]] = field(default_factory=dict)
    unboosted_expectation: Optional[float] = None
    unboosted_detected: Optional[bool] = None
    errata: Tuple[str, ...] = ()

    @property
    def certified(self) -> bool:
        return self.matched and self.certificate.indecomposable_certified

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "comparison": self.comparison.to_dict(),
            "matched": self.matched,
            "certified": self.certified,
            "certificate": self.certificate.to_dict(),
            "weight_reading": self.weight_reading,
            "readings": self.readings,
            "unboosted_expectation": self.unboosted_expectation,
            "unboosted_detected": self.unboosted_detected,
            "errata": list(self.errata),
        }


def reproduce(example_id: str, check_block_positivity: bool = True, restarts: int = 50,
              iters: int = 500, seed: int = 0,
              tolerances: Tolerances = DEFAULT_TOLERANCES) -> ReproductionReport:
    """
    Rebuild a registered witness, compare it with the printed matrix and certify it.

    For the weighted example every weight reading is tried and the one whose
    witness is proportional to the printed matrix is kept. The state is always
    renormalized by its trace before certification.

    Args:
        example_id: ex3, ex4 or ex5
        check_block_positivity: Run the see-saw estimate and require it for certification
        restarts: See-saw restarts
        iters: See-saw sweeps per restart
        seed: See-saw seed
        tolerances: Tolerances for every verdict

    Returns:
        ReproductionReport: Comparison, certificate and example-specific extras
    """
    bundle = load_example(example_id)
    recipe = bundle.construction
    readings: Dict[str, Dict[str, float]] = {}
    chosen = None
    if recipe.form == "weighted":
        best: Optional[Tuple[str, Witness, ProportionalityReport]] = None
        for name, weight in sorted(recipe.weight_readings.items()):
            candidate = build_example_witness(bundle, weight)
            cmp = proportionality(candidate.matrix, bundle.witness_reference)
            readings[name] = cmp.to_dict()
            if best is None or cmp.max_deviation < best[2].max_deviation:
                best = (name, candidate, cmp)
        chosen, witness, comparison = best
    else:
        witness = build_example_witness(bundle)
        comparison = proportionality(witness.matrix, bundle.witness_reference)
    matched = comparison.matched()
    if not matched:
        logger.warning("%s: rebuilt witness deviates from the printed matrix by %.3e",
                       bundle.id, comparison.max_deviation)
    state = validate_state(bundle.state_display, renormalize=True, tolerances=tolerances)
    block_min = None
    if check_block_positivity:
        block_min = block_positivity_min(witness, restarts=restarts, iters=iters, seed=seed)
    certificate = certify_indecomposable(witness, state, block_min=block_min,
                                         tolerances=tolerances)
    report = ReproductionReport(
        id=bundle.id,
        comparison=comparison,
        matched=matched,
        certificate=certificate,
        weight_reading=chosen,
        readings=readings,
        errata=bundle.errata,
    )
    if recipe.form == "weighted":
        plain = build_example_witness(bundle, weight=1.0)
        report.unboosted_expectation = evaluate(plain, state)
        report.unboosted_detected = report.unboosted_expectation < -tolerances.detection
    return report
