"""
Main entry point for the witness toolkit
Command line interface: build symmetric measurements, positive maps and
entanglement witnesses, detect and certify PPT entangled states, reproduce
the registered examples. Every command writes one JSON report.
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config_manager import ConfigManager, RunConfig
from entanglement_lab import (
    DensityState,
    block_positivity_min,
    certify_indecomposable,
    evaluate,
    is_ppt,
    ppt_detection_search,
    validate_state,
)
from errors import ConfigError, InvalidState, WitnessLabError
from matrix_core import (
    CMatrix,
    Tolerances,
    dumps_json,
    load_json_file,
    matrix_from_json,
    matrix_to_json,
)
from operator_bases import GroupedBasis, basis_elements, resolve_basis
from positive_maps import (
    MapSpec,
    RotationSet,
    build_map,
    identity_rotation,
    parse_rotation_spec,
    positivity_probe,
)
from reference_examples import list_examples, load_example, reproduce
from symmetric_measurements import (
    SymmetricPovm,
    build_povm,
    build_povm_for_x,
    coincidence_bound_check,
    definition_report,
    is_informationally_complete,
    optimal_t,
    optimal_x,
    x_range,
)
from witness_factory import (
    CcnrSpec,
    Witness,
    ccnr_witness,
    choi_witness,
    m2_witness,
    rescaled_witness,
    weighted_witness,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NEGATIVE = 2

COMMON_FLAGS = ('tol', 'seed', 'report', 'log_level', 'config', 'handler')


def status(message: str) -> None:
    """Progress line on stderr; stdout carries only the JSON report"""
    print(message, file=sys.stderr)


# Argument helpers

def _int_list(text: Optional[str]) -> Optional[Tuple[int, ...]]:
    if text is None or text == "":
        return None
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as e:
        raise ConfigError(f"Expected comma separated integers, got {text!r}") from e


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as e:
        raise ConfigError(f"Expected comma separated numbers, got {text!r}") from e


def _basis_from(args: argparse.Namespace) -> GroupedBasis:
    return resolve_basis(args.basis, args.group, _int_list(args.alphas))


def _povm_from(basis: GroupedBasis, x: Any, tolerances: Tolerances) -> SymmetricPovm:
    """x is "opt" (largest PSD-admissible value) or a number"""
    if x is None or str(x).lower() == "opt":
        return build_povm(basis, optimal_t(basis), tolerances)
    try:
        value = float(x)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"--x must be a number or 'opt', got {x!r}") from e
    return build_povm_for_x(basis, value, tolerances)


def _rotations_from(spec: Any, M: int, N: int) -> RotationSet:
    """Rotation preset string, path to a JSON rotation file, or an already parsed document"""
    if spec is None:
        return RotationSet.uniform(identity_rotation(M), N)
    if isinstance(spec, str) and os.path.isfile(spec):
        spec = load_json_file(spec)
    return parse_rotation_spec(spec, M, N)


def _load_matrix_doc(path: str, key: str = "matrix") -> CMatrix:
    doc = load_json_file(path)
    if isinstance(doc, dict) and key in doc:
        doc = doc[key]
    return matrix_from_json(doc)


def _load_witness(path: str) -> Witness:
    return Witness.from_dict(load_json_file(path))


def _load_state(path: str, renormalize: bool, tolerances: Tolerances) -> DensityState:
    doc = load_json_file(path)
    if isinstance(doc, dict) and "state" in doc and isinstance(doc["state"], dict):
        doc = doc["state"]
    if isinstance(doc, dict) and "matrix" in doc:
        doc = doc["matrix"]
    return validate_state(matrix_from_json(doc), renormalize=renormalize, tolerances=tolerances)


# Commands

def cmd_povm_build(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    basis = _basis_from(args)
    povm = _povm_from(basis, args.x, cfg.tolerances)
    report = definition_report(povm)
    status(f"✓ Built ({povm.N},{povm.M})-POVM in d={povm.d} at x={povm.params.x:.12g}")
    result = {
        "basis": basis.name,
        "params": povm.params.to_dict(),
        "elements": [[matrix_to_json(e) for e in row] for row in povm.elements],
        "validation": report.to_dict(),
        "informationally_complete": is_informationally_complete(povm),
    }
    return result, EXIT_OK if report.holds(cfg.tolerances.psd) else EXIT_NEGATIVE


def cmd_povm_validate(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    basis = _basis_from(args)
    povm = _povm_from(basis, args.x, cfg.tolerances)
    report = definition_report(povm)
    ok = report.holds(cfg.tolerances.psd)
    result: Dict[str, Any] = {
        "basis": basis.name,
        "params": povm.params.to_dict(),
        "validation": report.to_dict(),
        "valid": ok,
        "informationally_complete": is_informationally_complete(povm),
    }
    if args.state:
        rho = _load_matrix_doc(args.state)
        L = povm.N if args.L is None else args.L
        check = coincidence_bound_check(povm, rho, L, cfg.tolerances)
        result["coincidence"] = {
            "L": L,
            "lhs": check.lhs,
            "rhs": check.rhs,
            "holds": check.holds,
            "equality_deviation": check.equality_deviation,
        }
        ok = ok and check.holds
    if ok:
        status("✓ Symmetry conditions hold")
    else:
        status("Warning: POVM validation failed")
    return result, EXIT_OK if ok else EXIT_NEGATIVE


def cmd_povm_optx(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    basis = _basis_from(args)
    rng = x_range(basis.d, basis.M)
    x_opt = optimal_x(basis)
    status(f"✓ x_opt = {x_opt:.12g} (range ({rng.low:.12g}, {rng.high:.12g}])")
    return {
        "basis": basis.name,
        "d": basis.d,
        "N": basis.N,
        "M": basis.M,
        "x_opt": x_opt,
        "t_opt": optimal_t(basis),
        "x_range": {"low": rng.low, "high": rng.high},
    }, EXIT_OK


def _map_spec_from_doc(doc: Dict[str, Any], cfg: RunConfig) -> MapSpec:
    if not isinstance(doc, dict):
        raise ConfigError("Map specification must be a JSON object")
    alphas = doc.get("alphas")
    basis = resolve_basis(doc.get("basis", "gellmann:3"), doc.get("grouping"),
                          tuple(alphas) if alphas else None)
    povm = _povm_from(basis, doc.get("x", "opt"), cfg.tolerances)
    rotations = _rotations_from(doc.get("rotations"), basis.M, basis.N)
    if "L" not in doc:
        raise ConfigError("Map specification needs L")
    return MapSpec.from_povm(povm, rotations, int(doc["L"]))


def cmd_map_build(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    spec = _map_spec_from_doc(load_json_file(args.spec), cfg)
    phi = build_map(spec, cfg.tolerances)
    status(f"✓ Built map with a={spec.a:.6g}, b={spec.b:.6g}")
    result: Dict[str, Any] = {
        "spec": spec.to_dict(),
        "choi": matrix_to_json(phi.choi),
        "trace_preservation_error": phi.trace_preservation_error(),
    }
    code = EXIT_OK
    if args.probe:
        probe = positivity_probe(phi, cfg.samples, cfg.seed, cfg.tolerances)
        result["probe"] = probe.to_dict()
        if probe.violation:
            status("Warning: positivity probe found a violation")
            code = EXIT_NEGATIVE
    return result, code


def _build_witness(args: argparse.Namespace, cfg: RunConfig) -> Witness:
    tolerances = cfg.tolerances
    if args.form == "ccnr":
        elements, _, _ = basis_elements(args.basis)
        d = elements[0].shape[0]
        ops = [np.eye(d, dtype=complex) / np.sqrt(d)] + list(elements)
        n = len(ops)
        if args.q == "identity":
            q = np.eye(n)
        elif args.q == "zero":
            q = np.zeros((n, n))
        else:
            q = np.asarray(load_json_file(args.q), dtype=float)
        return ccnr_witness(CcnrSpec(elements=ops, q=q), tolerances)

    basis = _basis_from(args)
    if args.form == "m2":
        signs = _int_list(args.signs)
        if signs is None:
            raise ConfigError("--signs is required for the m2 form")
        return m2_witness(basis, signs)

    rotations = _rotations_from(args.rotations, basis.M, basis.N)
    if args.form == "rescaled":
        if args.L is None:
            raise ConfigError("--L is required for the rescaled form")
        return rescaled_witness(basis, rotations, args.L, tolerances)
    if args.form == "weighted":
        if args.weights is None:
            raise ConfigError("--weights is required for the weighted form")
        weights = _float_list(args.weights)
        if len(weights) == 1:
            weights = weights * basis.N
        return weighted_witness(basis, rotations, weights, tolerances)
    if args.form == "choi":
        if args.L is None:
            raise ConfigError("--L is required for the choi form")
        povm = _povm_from(basis, args.x, tolerances)
        spec = MapSpec.from_povm(povm, rotations, args.L)
        w = choi_witness(build_map(spec, tolerances))
        w.recipe.update({"basis": basis.name, "L": args.L, "x": povm.params.x,
                         "rotations": rotations.to_dict()})
        return w
    raise ConfigError(f"Unknown witness form {args.form!r}")


def cmd_witness_build(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    w = _build_witness(args, cfg)
    if args.normalize:
        w = w.normalized()
    result = w.to_dict(cfg.tolerances.psd)
    if result["proper"]:
        status(f"✓ Built proper {w.form} witness (min eigenvalue {result['min_eigenvalue']:.6g})")
    else:
        status(f"Warning: {w.form} operator has no negative eigenvalue")
    return result, EXIT_OK


def cmd_detect(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    w = _load_witness(args.witness)
    state = _load_state(args.state, args.renormalize, cfg.tolerances)
    value = evaluate(w, state)
    detected = value < -cfg.tolerances.detection
    ppt = is_ppt(state, tolerances=cfg.tolerances)
    status(f"{'✓ Detected' if detected else 'Not detected'}: Tr(W rho) = {value:.12g}")
    return {
        "expectation": value,
        "detected": detected,
        "ppt": ppt.ppt,
        "ppt_min_eigenvalue": ppt.min_eigenvalue,
        "renormalized": state.renormalized,
        "original_trace": state.original_trace,
    }, EXIT_OK if detected else EXIT_NEGATIVE


def cmd_certify(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    w = _load_witness(args.witness)
    try:
        state: Any = _load_state(args.state, args.renormalize, cfg.tolerances)
    except InvalidState as e:
        status(f"Warning: invalid state: {e}")
        report = certify_indecomposable(w, _load_matrix_doc(args.state), renormalize=args.renormalize,
                                        tolerances=cfg.tolerances)
        return report.to_dict(), EXIT_INPUT_ERROR
    block_min = None
    if args.check_block_positivity:
        block_min = block_positivity_min(w, cfg.restarts, cfg.iters, cfg.seed)
    report = certify_indecomposable(w, state, block_min=block_min, tolerances=cfg.tolerances)
    if report.indecomposable_certified:
        status("✓ Witness certified indecomposable")
    else:
        status("Not certified")
    return report.to_dict(), EXIT_OK if report.indecomposable_certified else EXIT_NEGATIVE


def cmd_hunt_ppt(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    w = _load_witness(args.witness)
    state = ppt_detection_search(w, cfg.restarts, cfg.iters, cfg.seed, tolerances=cfg.tolerances)
    if state is None:
        status("Warning: no detected PPT state found (this does not prove decomposability)")
        return {"found": False, "state": None, "certificate": None}, EXIT_NEGATIVE
    report = certify_indecomposable(w, state, tolerances=cfg.tolerances)
    status(f"✓ Found PPT state with Tr(W rho) = {report.expectation:.6g}")
    return {
        "found": True,
        "state": {"matrix": matrix_to_json(state.matrix), "dims": list(state.dims)},
        "certificate": report.to_dict(),
    }, EXIT_OK if report.indecomposable_certified else EXIT_NEGATIVE


def cmd_example_list(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    examples = []
    for example_id in list_examples():
        bundle = load_example(example_id)
        examples.append({"id": bundle.id, "title": bundle.title,
                         "construction": bundle.construction.to_dict(),
                         "errata": list(bundle.errata)})
    return {"examples": examples}, EXIT_OK


def cmd_example_reproduce(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    status(f"Reproducing {args.example_id}...")
    report = reproduce(args.example_id, check_block_positivity=not args.skip_block_check,
                       restarts=cfg.restarts, iters=cfg.iters, seed=cfg.seed,
                       tolerances=cfg.tolerances)
    if report.certified:
        status(f"✓ {report.id} reproduced and certified")
    elif report.matched:
        status(f"Warning: {report.id} matches the printed witness but is not certified")
    else:
        status(f"Warning: {report.id} does not match the printed witness")
    return report.to_dict(), EXIT_OK if report.certified else EXIT_NEGATIVE


# Parser

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--tol', type=float, default=None,
                        help='Override every tolerance with this positive value')
    common.add_argument('--seed', type=int, default=None, help='Root random seed')
    common.add_argument('--report', default=None, help='Write the JSON report here instead of stdout')
    common.add_argument('--log-level', dest='log_level', default=None,
                        help='Logging level (DEBUG, INFO, WARNING, ...)')
    common.add_argument('--config', default=None, help='Path to a witnesslab.json config file')
    return common


def _add_basis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--basis', default='gellmann:3', help='gellmann:<d> or mub3')
    parser.add_argument('--group', default=None,
                        help='Grouping preset: ex3, ex4, ex5, natural or chunk:<M>')
    parser.add_argument('--alphas', default=None, help='Comma separated 1-based groups to keep')


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog='witnesslab',
        description='Symmetric measurements, positive maps and entanglement witnesses',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    povm = sub.add_parser('povm', help='Symmetric (N,M)-POVMs')
    povm_sub = povm.add_subparsers(dest='action', required=True)
    for name, handler in (('build', cmd_povm_build), ('validate', cmd_povm_validate)):
        p = povm_sub.add_parser(name, parents=[common])
        _add_basis_flags(p)
        p.add_argument('--x', default='opt', help="Value of x or 'opt'")
        if name == 'validate':
            p.add_argument('--state', default=None, help='Density matrix JSON for the coincidence bound')
            p.add_argument('--L', type=int, default=None, help='Number of POVMs in the bound')
        p.set_defaults(handler=handler)
    p = povm_sub.add_parser('optx', parents=[common])
    _add_basis_flags(p)
    p.set_defaults(handler=cmd_povm_optx)

    map_parser = sub.add_parser('map', help='Positive trace-preserving maps')
    map_sub = map_parser.add_subparsers(dest='action', required=True)
    p = map_sub.add_parser('build', parents=[common])
    p.add_argument('--spec', required=True, help='Map specification JSON')
    p.add_argument('--probe', action='store_true', help='Run the sampled positivity probe')
    p.set_defaults(handler=cmd_map_build)

    witness = sub.add_parser('witness', help='Entanglement witnesses')
    witness_sub = witness.add_subparsers(dest='action', required=True)
    p = witness_sub.add_parser('build', parents=[common])
    p.add_argument('--form', required=True, choices=['choi', 'rescaled', 'ccnr', 'm2', 'weighted'])
    _add_basis_flags(p)
    p.add_argument('--x', default='opt', help="x for the choi form, a number or 'opt'")
    p.add_argument('--L', type=int, default=None, help='Number of subtracted POVMs')
    p.add_argument('--rotations', default=None,
                   help='identity:<M>, cycle:<M>[:shift] or a rotation JSON file')
    p.add_argument('--q', default='identity', help="CCNR matrix: identity, zero or a JSON file")
    p.add_argument('--signs', default=None,
                   help='m2 signs, G_0 first; pass as --signs=-1,1,... for leading minus')
    p.add_argument('--weights', default=None, help='Comma separated weights (one value broadcasts)')
    p.add_argument('--normalize', action='store_true', help='Scale the largest diagonal entry to 1')
    p.set_defaults(handler=cmd_witness_build)

    for name, handler in (('detect', cmd_detect), ('certify', cmd_certify)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument('--witness', required=True, help='Witness JSON (bundle or bare matrix)')
        p.add_argument('--state', required=True, help='State JSON')
        p.add_argument('--renormalize', action='store_true', help='Divide the state by its trace')
        if name == 'certify':
            p.add_argument('--check-block-positivity', dest='check_block_positivity',
                           action='store_true', help='Require a see-saw block-positivity estimate')
            p.add_argument('--restarts', type=int, default=None)
            p.add_argument('--iters', type=int, default=None)
        p.set_defaults(handler=handler)

    p = sub.add_parser('hunt-ppt', parents=[common])
    p.add_argument('--witness', required=True, help='Witness JSON (bundle or bare matrix)')
    p.add_argument('--restarts', type=int, default=None)
    p.add_argument('--iters', type=int, default=None)
    p.set_defaults(handler=cmd_hunt_ppt)

    example = sub.add_parser('example', help='Registered witness / state pairs')
    example_sub = example.add_subparsers(dest='action', required=True)
    p = example_sub.add_parser('list', parents=[common])
    p.set_defaults(handler=cmd_example_list)
    p = example_sub.add_parser('reproduce', parents=[common])
    p.add_argument('example_id', help='ex3, ex4 or ex5')
    p.add_argument('--restarts', type=int, default=None)
    p.add_argument('--iters', type=int, default=None)
    p.add_argument('--skip-block-check', dest='skip_block_check', action='store_true',
                   help='Do not estimate block positivity')
    p.set_defaults(handler=cmd_example_reproduce)

    return parser


def _configure_logging(level_name: str) -> None:
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        raise ConfigError(f"Unknown log level {level_name!r}")
    logging.basicConfig(format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)
    logging.getLogger().setLevel(level)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    manager = ConfigManager(args.config)
    overrides = {
        'tol': args.tol,
        'seed': args.seed,
        'restarts': getattr(args, 'restarts', None),
        'iters': getattr(args, 'iters', None),
        'log_level': args.log_level.upper() if args.log_level else None,
    }
    command = " ".join(v for v in (args.command, getattr(args, 'action', None)) if v)
    options = {k: v for k, v in sorted(vars(args).items())
               if k not in COMMON_FLAGS and k not in overrides and k not in ('command', 'action')}
    return RunConfig.resolve(command, manager, overrides, options)


def _write_report(doc: Dict[str, Any], path: Optional[str]) -> None:
    text = dumps_json(doc)
    if path:
        with open(path, 'w') as f:
            f.write(text + "\n")
        status(f"✓ Report written to {path}")
    else:
        print(text)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, dispatch to one command and write its JSON report.

    Args:
        argv: Command line without the program name (defaults to sys.argv[1:])

    Returns:
        int: 0 on success, 2 on a negative verdict, 1 on malformed input
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT_ERROR

    handler: Callable[[argparse.Namespace, RunConfig], Tuple[Dict[str, Any], int]] = args.handler
    try:
        cfg = _resolve_config(args)
        _configure_logging(cfg.log_level)
        result, code = handler(args, cfg)
        result = dict(result)
        result['config'] = cfg.to_dict()
        result['exit_code'] = code
        _write_report(result, args.report)
        return code
    except (WitnessLabError, OSError, json.JSONDecodeError) as e:
        status(f"Error: {e}")
        return EXIT_INPUT_ERROR


def main():
    """
    Main function to run the witness toolkit from the command line
    """
    try:
        sys.exit(run(sys.argv[1:]))

    except KeyboardInterrupt:
        print("\n\nExiting...", file=sys.stderr)
        sys.exit(0)

    except Exception as e:
        print(f"\nError: {e}", file=sys.stderr)
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
