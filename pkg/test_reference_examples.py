"""
Tests for the registered witness / PPT state examples
"""
import math

import numpy as np
import pytest

from entanglement_lab import evaluate, product_expectation, validate_state
from errors import UnknownExample
from matrix_core import hermiticity_error
from reference_examples import build_example_witness, list_examples, load_example, reproduce
from witness_factory import proportionality

R3 = math.sqrt(3)
R5 = math.sqrt(5)


def test_registry_ids():
    assert list_examples() == ["ex3", "ex4", "ex5"]
    assert load_example(" EX4 ").id == "ex4"
    with pytest.raises(UnknownExample):
        load_example("ex6")


def test_example3_rebuilds_printed_witness():
    bundle = load_example("ex3")
    cmp = proportionality(build_example_witness(bundle).matrix, bundle.witness_display)
    assert cmp.matched()
    assert cmp.scale == pytest.approx(12 + 6 * R3)


def test_example3_state_trace_erratum_and_expectation():
    bundle = load_example("ex3")
    assert np.trace(bundle.state_display).real == pytest.approx(852 / 579)
    state = validate_state(bundle.state_display, renormalize=True)
    value = evaluate(bundle.witness_display, state)
    assert value == pytest.approx((1866 - 1080 * R3) / 5112, rel=1e-9)
    assert value < 0


def test_example3_recipe_fails_on_mub_basis():
    bundle = load_example("ex3")
    cross = build_example_witness(bundle, basis="mub3")
    state = validate_state(bundle.state_display, renormalize=True)
    assert evaluate(cross, state) > 0


def test_example4_rebuilds_printed_witness_at_unit_scale():
    bundle = load_example("ex4")
    cmp = proportionality(build_example_witness(bundle).matrix, bundle.witness_display)
    assert cmp.matched()
    assert cmp.scale == pytest.approx(1.0)
    state = validate_state(bundle.state_display)
    assert evaluate(bundle.witness_display, state) == pytest.approx(-1 / 21)


def test_example5_printed_matrix_needs_hermitian_correction(caplog):
    with caplog.at_level("WARNING"):
        bundle = load_example("ex5")
    assert hermiticity_error(bundle.witness_display) > 1
    assert hermiticity_error(bundle.witness_reference) < 1e-12
    assert "not Hermitian" in caplog.text
    assert bundle.errata


def test_example5_weight_readings():
    bundle = load_example("ex5")
    s = 1 + R5
    total = build_example_witness(bundle, weight=5 * s * s)
    cmp = proportionality(total.matrix, bundle.witness_reference)
    assert cmp.matched()
    assert cmp.scale == pytest.approx(25 * s * s / 3)
    additional = build_example_witness(bundle, weight=1 + 5 * s * s)
    assert not proportionality(additional.matrix, bundle.witness_reference).matched()


def test_example5_expectation_and_product_value():
    bundle = load_example("ex5")
    state = validate_state(bundle.state_display)
    assert evaluate(bundle.witness_reference, state) == pytest.approx(-(3 + R5) / 3)
    a = np.array([1, 1, 0]) / math.sqrt(2)
    b = np.array([1, 0, 1]) / math.sqrt(2)
    assert product_expectation(bundle.witness_reference, a, b) < 0


def test_reproduce_example4_is_certified():
    report = reproduce("ex4", restarts=5, iters=100, seed=0)
    assert report.matched
    assert report.certificate.block_positive
    assert report.certified
    assert report.to_dict()["certified"] is True


def test_reproduce_example3_is_certified():
    report = reproduce("ex3", restarts=5, iters=100, seed=0)
    assert report.matched
    assert report.certificate.ppt
    assert report.certificate.detected
    assert report.certified


def test_reproduce_example5_is_matched_but_not_certified():
    report = reproduce("ex5", restarts=10, iters=100, seed=0)
    assert report.matched
    assert report.weight_reading == "total"
    assert set(report.readings) == {"additional", "total"}
    assert report.certificate.detected
    assert report.certificate.block_positive is False
    assert not report.certified
    assert report.unboosted_detected is False


def test_reproduce_without_block_check_leaves_field_empty():
    report = reproduce("ex4", check_block_positivity=False)
    assert report.certificate.block_positive is None
    assert report.certified
