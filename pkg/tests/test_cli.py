import io
import json

import numpy as np
import pandas as pd
import pytest

from gaussof import cli
from gaussof.cli import EXIT_INVALID, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, InputDocument, main
from gaussof.covariance import CONVENTION, StandardFormParams, tmsv_covariance
from gaussof.epr import entanglement_of_squeezing
from gaussof.errors import InputDocumentError


def write_state(path, V, label='state'):
    document = V.to_dict()
    document['label'] = label
    path.write_text(json.dumps(document))
    return str(path)


def run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr()


def test_eof_of_tmsv_file(tmp_path, capsys):
    path = write_state(tmp_path / 'tmsv.json', tmsv_covariance(1.0))
    code, out = run(capsys, ['eof', '--input', path])
    assert code == EXIT_OK
    report = json.loads(out.out)
    assert report['ebits'] == pytest.approx(entanglement_of_squeezing(1.0), abs=1e-9)
    assert report['label'] == 'state'
    assert report['convention'] == CONVENTION
    assert 'residual' in report['tolerances']


def test_missing_convention_is_invalid(tmp_path, capsys):
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({'matrix': (0.5 * np.eye(4)).tolist()}))
    code, out = run(capsys, ['eof', '--input', str(path)])
    assert code == EXIT_INVALID
    assert json.loads(out.out)['error'] == 'InputDocumentError'


def test_unphysical_state_is_invalid(tmp_path, capsys):
    path = tmp_path / 'squeezed.json'
    path.write_text(json.dumps({'matrix': (0.25 * np.eye(4)).tolist(), 'convention': CONVENTION}))
    code, out = run(capsys, ['eof', '--input', str(path)])
    assert code == EXIT_INVALID
    assert json.loads(out.out)['error'] == 'UnphysicalStateError'


def test_usage_errors(capsys):
    assert run(capsys, [])[0] == EXIT_USAGE
    assert run(capsys, ['eof'])[0] == EXIT_USAGE
    assert run(capsys, ['eof', '--params', '2,2,1.5'])[0] == EXIT_USAGE
    assert run(capsys, ['eof', '--params', '2,2,1.5,0.5', '--tolerance', 'nonsense=1'])[0] == EXIT_USAGE


def test_validate_params(capsys):
    code, out = run(capsys, ['validate', '--params', '2,2,1.5,0.5'])
    assert code == EXIT_OK
    report = json.loads(out.out)
    assert report['validity']['is_physical']
    assert not report['ppt']['separable']


def test_canonical_of_separable_params(capsys):
    code, out = run(capsys, ['canonical', '--params', '2,2,0.5,0.5'])
    assert code == EXIT_OK
    report = json.loads(out.out)
    assert report['separable']
    assert report['canonical'] is None


def test_standard_form_text_output(tmp_path, capsys):
    path = write_state(tmp_path / 'tmsv.json', tmsv_covariance(0.5))
    code, out = run(capsys, ['standard-form', '--input', path, '--format', 'text'])
    assert code == EXIT_OK
    assert 'standard_form: ' in out.out


def test_epr_curve_csv(capsys):
    code, out = run(capsys, ['epr-curve', '--params', '2.5,1.5,1.2,0.9', '--theta-range', '0.1:0.7:7'])
    assert code == EXIT_OK
    frame = pd.read_csv(io.StringIO(out.out))
    assert list(frame.columns) == ['theta', 'lambda', 'in_range']
    assert len(frame) == 7
    assert np.all(frame['lambda'] >= np.cos(2 * frame['theta']) - 1e-12)


def test_probe_outside_range(capsys):
    code, out = run(capsys, ['probe', '--theta', '0.05', '--ebits', '2', '--seed', '1'])
    assert code == EXIT_INVALID
    assert json.loads(out.out)['error'] == 'OutsideConjectureRange'


def test_ensemble_check(capsys):
    code, out = run(capsys, ['ensemble-check', '--params', '2.5,1.5,1.2,0.9', '--samples', '20000', '--seed', '7',
                             '--dim', '30'])
    assert code == EXIT_OK
    report = json.loads(out.out)
    assert report['seed'] == 7
    assert report['realization']['count'] == 20000


def test_batch_jsonl(tmp_path, capsys):
    good = tmsv_covariance(0.5).to_dict()
    sym = StandardFormParams(2.0, 2.0, 1.5, 0.5).to_covariance().to_dict()
    bad = {'matrix': (0.5 * np.eye(4)).tolist(), 'convention': 'hbar2'}
    path = tmp_path / 'states.jsonl'
    path.write_text('\n'.join(json.dumps(d) for d in (good, sym, bad)) + '\n')
    code, out = run(capsys, ['batch', '--input', str(path), '--workers', '2'])
    assert code == EXIT_INVALID
    report = json.loads(out.out)
    assert report['summary']['count'] == 3
    assert report['summary']['failed'] == 1
    assert [r['status'] for r in report['results']] == ['ok', 'ok', 'error']


def test_batch_directory(tmp_path, capsys):
    write_state(tmp_path / 'a.json', tmsv_covariance(0.3), label='a')
    write_state(tmp_path / 'b.json', tmsv_covariance(0.6), label='b')
    code, out = run(capsys, ['batch', '--input', str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads(out.out)
    assert [r['label'] for r in report['results']] == ['a', 'b']
    assert report['summary']['ebits_max'] == pytest.approx(entanglement_of_squeezing(0.6), abs=1e-9)


def test_input_document_rejects_unknown_fields():
    with pytest.raises(InputDocumentError):
        InputDocument.from_dict({'matrix': np.eye(4).tolist(), 'convention': CONVENTION, 'hbar': 2})
    with pytest.raises(InputDocumentError):
        InputDocument.from_json('{not json')


def test_batch_keeps_going_after_numerical_failure(tmp_path, capsys, monkeypatch):
    """
    A ValueError or LinAlgError inside one entry fails that entry with the solver exit code only
    """
    real_eof = cli.eof

    def fragile_eof(V, tol):
        if V.entries[0, 0] > 1.5:
            raise np.linalg.LinAlgError('SVD did not converge')
        if V.entries[0, 0] > 1.0:
            raise ValueError('Canonical angle must lie in (0, pi/4]')
        return real_eof(V, tol=tol)

    monkeypatch.setattr(cli, 'eof', fragile_eof)
    path = tmp_path / 'states.jsonl'
    path.write_text('\n'.join(json.dumps(tmsv_covariance(r).to_dict()) for r in (0.3, 0.7, 1.0)) + '\n')
    code, out = run(capsys, ['batch', '--input', str(path)])
    assert code == EXIT_SOLVER
    report = json.loads(out.out)
    assert report['summary']['ok'] == 1
    assert [r['status'] for r in report['results']] == ['ok', 'error', 'error']
    assert [r.get('error') for r in report['results']] == [None, 'ValueError', 'LinAlgError']
    assert all(r['exit_code'] == EXIT_SOLVER for r in report['errors'])
