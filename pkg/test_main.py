"""
Tests for the command line interface
"""
import json

import numpy as np
import pytest

from config_manager import ENV_KEYS
from main import EXIT_INPUT_ERROR, EXIT_NEGATIVE, EXIT_OK, run
from matrix_core import dumps_json, matrix_to_json
from witness_factory import maximally_entangled, reduction_witness


@pytest.fixture(autouse=True)
def workspace(monkeypatch, tmp_path):
    for name in list(ENV_KEYS.values()) + ['WITNESSLAB_CONFIG']:
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def _write(path, doc):
    path.write_text(dumps_json(doc))
    return str(path)


def test_povm_build_rejects_x_outside_range(capsys):
    code = run(['povm', 'build', '--basis', 'gellmann:3', '--group', 'ex3', '--x', '2.0'])
    assert code == EXIT_INPUT_ERROR
    assert "outside the admissible range" in capsys.readouterr().err


def test_povm_build_at_optimum(capsys):
    assert run(['povm', 'build', '--group', 'ex3']) == EXIT_OK
    report = _stdout_json(capsys)
    assert report['params']['x'] == pytest.approx(5 / 9)
    assert len(report['elements']) == 4
    assert len(report['elements'][0]) == 3
    assert report['informationally_complete'] is True
    assert report['config']['command'] == 'povm build'
    assert report['config']['seed'] == 0


def test_povm_optx_is_deterministic(capsys):
    assert run(['povm', 'optx', '--group', 'ex3']) == EXIT_OK
    first = capsys.readouterr().out
    assert run(['povm', 'optx', '--group', 'ex3']) == EXIT_OK
    second = capsys.readouterr().out
    assert first == second
    report = json.loads(first)
    assert report['x_opt'] == pytest.approx(5 / 9)
    assert report['x_range']['high'] == pytest.approx(1.0)


def test_povm_validate_with_state(workspace, capsys):
    state = _write(workspace / "rho.json", matrix_to_json(np.eye(3) / 3))
    assert run(['povm', 'validate', '--group', 'ex3', '--state', state]) == EXIT_OK
    report = _stdout_json(capsys)
    assert report['valid'] is True
    assert report['coincidence']['L'] == 4
    assert report['coincidence']['lhs'] == pytest.approx(4 / 3)


def test_ccnr_identity_detects_max_entangled_state(workspace, capsys):
    w_path = str(workspace / "w.json")
    assert run(['witness', 'build', '--form', 'ccnr', '--q', 'identity',
                '--basis', 'gellmann:3', '--report', w_path]) == EXIT_OK
    capsys.readouterr()
    bundle = json.loads((workspace / "w.json").read_text())
    assert bundle['proper'] is True
    state = _write(workspace / "rho.json", matrix_to_json(maximally_entangled(3)))
    assert run(['detect', '--witness', w_path, '--state', state]) == EXIT_OK
    report = _stdout_json(capsys)
    assert report['expectation'] == pytest.approx(-2.0)
    assert report['detected'] is True
    assert report['ppt'] is False


def test_certify_npt_state_is_negative_verdict(workspace, capsys):
    w_path = _write(workspace / "w.json", reduction_witness(3).to_dict())
    state = _write(workspace / "rho.json", matrix_to_json(maximally_entangled(3)))
    assert run(['certify', '--witness', w_path, '--state', state]) == EXIT_NEGATIVE
    report = _stdout_json(capsys)
    assert report['indecomposable_certified'] is False


def test_certify_invalid_state_is_input_error(workspace, capsys):
    w_path = _write(workspace / "w.json", reduction_witness(2).to_dict())
    state = _write(workspace / "rho.json", matrix_to_json(np.diag([1.5, -0.5, 0.0, 0.0])))
    assert run(['certify', '--witness', w_path, '--state', state]) == EXIT_INPUT_ERROR
    report = _stdout_json(capsys)
    assert report['state_valid'] is False


def test_detect_rejects_non_finite_json(workspace, capsys):
    w_path = workspace / "w.json"
    w_path.write_text('{"rows": 1, "cols": 1, "entries": [[NaN, 0]]}')
    state = _write(workspace / "rho.json", matrix_to_json(np.eye(1)))
    assert run(['detect', '--witness', str(w_path), '--state', state]) == EXIT_INPUT_ERROR


def test_m2_witness_for_mub_basis(capsys):
    code = run(['witness', 'build', '--form', 'm2', '--basis', 'mub3', '--group', 'ex4',
                '--alphas', '1,2,3,5,6,7,8', '--signs=-1,-1,-1,-1,1,1,1,1'])
    assert code == EXIT_OK
    report = _stdout_json(capsys)
    assert report['proper'] is True
    assert report['recipe']['signs'] == [-1, -1, -1, -1, 1, 1, 1, 1]


def test_map_build_with_probe(workspace, capsys):
    spec = _write(workspace / "spec.json", {"basis": "gellmann:3", "grouping": "ex3",
                                            "x": "opt", "L": 3, "rotations": "cycle:3"})
    assert run(['map', 'build', '--spec', spec, '--probe']) == EXIT_OK
    report = _stdout_json(capsys)
    assert report['spec']['b'] == pytest.approx(2 / 3)
    assert report['probe']['violation'] is False
    assert report['trace_preservation_error'] < 1e-9


def test_hunt_ppt_without_result_is_negative(workspace, capsys):
    w_path = _write(workspace / "w.json", reduction_witness(2).to_dict())
    code = run(['hunt-ppt', '--witness', w_path, '--restarts', '2', '--iters', '3'])
    assert code == EXIT_NEGATIVE
    report = _stdout_json(capsys)
    assert report['found'] is False
    assert report['config']['restarts'] == 2


def test_example_list(capsys):
    assert run(['example', 'list']) == EXIT_OK
    report = _stdout_json(capsys)
    assert [e['id'] for e in report['examples']] == ['ex3', 'ex4', 'ex5']


def test_example_reproduce_ex4(workspace, capsys):
    out = workspace / "out.json"
    code = run(['example', 'reproduce', 'ex4', '--restarts', '3', '--iters', '50',
                '--report', str(out)])
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report['certified'] is True
    assert report['config']['command'] == 'example reproduce'


@pytest.mark.parametrize("argv", [
    ['povm', 'optx', '--tol', '0'],
    ['example', 'reproduce', 'ex9'],
    ['nonsense'],
    ['witness', 'build', '--form', 'rescaled', '--group', 'ex3'],
])
def test_input_errors_exit_one(argv, capsys):
    assert run(argv) == EXIT_INPUT_ERROR
