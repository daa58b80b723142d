"""
gaussof command line

    gaussof eof --input state.json
    gaussof canonical --params 2.2,1.6,1.1,0.8
    gaussof epr-curve --input state.json --theta-range 0.05:0.785398:20 --format csv
    gaussof probe --theta 0.785398 --ebits 1.0 --seed 42
    gaussof ensemble-check --input state.json --samples 100000 --seed 7
    gaussof batch --input states.jsonl --workers 4

Exit codes: 0 success, 1 usage, 2 invalid input or physics, 3 solver failure, 4 conjecture counterexample candidate
"""
import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from .canonical import canonical_reduce
from .covariance import CONVENTION, CovMat4, StandardFormParams, ppt_separability, reduce_to_standard_form, validate
from .ensemble import make_ensemble, verify_realization
from .epr import eof, in_epr_range, lambda_theta_gaussian
from .errors import (DegenerateBlockError, GaussofError, InputDocumentError, NotStandardBlockForm, NotSymmetricError,
                     NotSymplecticError, OutsideConjectureRange, SeparableStateError, UnphysicalStateError)
from .fock import DEFAULT_PROBE_DIM, conjecture_probe
from .tolerances import DEFAULT_TOLERANCES


log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_COUNTEREXAMPLE = 4

INVALID_INPUT_ERRORS = (InputDocumentError, NotSymmetricError, UnphysicalStateError, NotStandardBlockForm,
                        NotSymplecticError, DegenerateBlockError, OutsideConjectureRange)
FLOAT_FORMAT = '%.17g'


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_USAGE instead of argparse's 2, which is reserved for invalid input"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '{}: error: {}\n'.format(self.prog, message))


class InputDocument:
    """
    JSON covariance input:
        {"matrix": [[...], [...], [...], [...]], "mean": [...], "convention": "hbar1-vacuum-half", "label": "..."}
    """

    def __init__(self, matrix, mean=None, convention=CONVENTION, label=''):
        self.matrix = matrix
        self.mean = mean
        self.convention = convention
        self.label = label

    @classmethod
    def from_dict(cls, payload):
        if not isinstance(payload, dict):
            raise InputDocumentError('Input document must be a JSON object')
        unknown = set(payload) - {'matrix', 'mean', 'convention', 'label'}
        if unknown:
            raise InputDocumentError('Unknown input fields', details={'fields': sorted(unknown)})
        if 'convention' not in payload:
            raise InputDocumentError('Input document lacks the convention tag', details={'expected': CONVENTION})
        if payload['convention'] != CONVENTION:
            raise InputDocumentError('Unsupported convention', details={
                'convention': payload['convention'], 'expected': CONVENTION})
        matrix = payload.get('matrix')
        try:
            matrix = np.array(matrix, dtype=float)
        except (TypeError, ValueError):
            raise InputDocumentError('Matrix entries must be numbers')
        if matrix.shape != (4, 4):
            raise InputDocumentError('Matrix must be 4x4 row-major', details={'shape': list(matrix.shape)})
        mean = payload.get('mean')
        if mean is not None:
            try:
                mean = np.array(mean, dtype=float)
            except (TypeError, ValueError):
                raise InputDocumentError('Mean entries must be numbers')
            if mean.shape != (4,):
                raise InputDocumentError('Mean must have 4 entries', details={'shape': list(mean.shape)})
        return cls(matrix, mean=mean, label=str(payload.get('label', '')))

    @classmethod
    def from_json(cls, text):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as e:
            raise InputDocumentError('Input is not valid JSON', details={'error': str(e)})
        return cls.from_dict(payload)

    def covariance(self, tol=DEFAULT_TOLERANCES):
        return CovMat4(self.matrix, mean=self.mean, tol=tol)


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError('Object of type {} is not JSON serializable'.format(type(value).__name__))


def _dumps(payload):
    # float repr is the shortest string that round-trips (at most 17 significant digits)
    return json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)


def _emit(report, fmt, stream=None):
    stream = stream or sys.stdout
    if fmt == 'json':
        stream.write(_dumps(report) + '\n')
    elif fmt == 'csv':
        rows = report.get('rows') if isinstance(report.get('rows'), list) else None
        frame = pd.DataFrame(rows) if rows is not None else pd.json_normalize(json.loads(_dumps(report)))
        frame.to_csv(stream, index=False, float_format=FLOAT_FORMAT)
    else:
        for key, value in sorted(report.items()):
            if isinstance(value, (dict, list)):
                value = json.dumps(value, sort_keys=True, default=_jsonable)
            stream.write('{}: {}\n'.format(key, value))


def _parse_tolerances(items):
    overrides = {}
    for item in items or []:
        name, sep, value = item.partition('=')
        if not sep:
            raise UsageError('Tolerance override must look like NAME=VALUE, got {!r}'.format(item))
        try:
            overrides[name.strip()] = float(value)
        except ValueError:
            raise UsageError('Tolerance {} needs a numeric value, got {!r}'.format(name, value))
    try:
        return DEFAULT_TOLERANCES.override(**overrides)
    except ValueError as e:
        raise UsageError(str(e))


def _parse_params(text, tol):
    try:
        values = [float(x) for x in text.split(',')]
    except ValueError:
        raise UsageError('--params needs four numbers n,m,kx,kp, got {!r}'.format(text))
    if len(values) != 4:
        raise UsageError('--params needs four numbers n,m,kx,kp, got {!r}'.format(text))
    return StandardFormParams(*values, tol=tol)


def _parse_theta_range(text):
    try:
        lo, hi, steps = text.split(':')
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise UsageError('--theta-range must look like A:B:STEPS, got {!r}'.format(text))
    if not (0 < lo <= hi <= np.pi / 4 + 1e-12) or steps < 1:
        raise UsageError('--theta-range needs 0 < A <= B <= pi/4 and STEPS >= 1, got {!r}'.format(text))
    return np.linspace(lo, hi, steps)


def _read_text(path):
    if path == '-':
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise InputDocumentError('Cannot read input', details={'path': path, 'error': str(e)})


def _load_state(args, tol):
    """
    Covariance from --input or --params
    :return: (CovMat4, label)
    """
    if getattr(args, 'params', None):
        return _parse_params(args.params, tol).to_covariance(), 'params {}'.format(args.params)
    if not args.input:
        raise UsageError('one of --input or --params is required')
    document = InputDocument.from_json(_read_text(args.input))
    return document.covariance(tol=tol), document.label


def _base_report(command, tol, label=None, **extra):
    report = {'command': command, 'convention': CONVENTION, 'tolerances': tol.to_dict()}
    if label is not None:
        report['label'] = label
    report.update(extra)
    return report


def cmd_validate(args, tol):
    V, label = _load_state(args, tol)
    report = _base_report('validate', tol, label)
    report['validity'] = validate(V, tol=tol).to_dict()
    report['ppt'] = ppt_separability(V, tol=tol).to_dict()
    return report, EXIT_OK if report['validity']['is_physical'] else EXIT_INVALID


def cmd_standard_form(args, tol):
    V, label = _load_state(args, tol)
    params, transform = reduce_to_standard_form(V, tol=tol)
    report = _base_report('standard-form', tol, label)
    report['standard_form'] = params.to_dict()
    report['transform'] = transform
    return report, EXIT_OK


def cmd_canonical(args, tol):
    V, label = _load_state(args, tol)
    params, _ = reduce_to_standard_form(V, tol=tol)
    report = _base_report('canonical', tol, label)
    report['standard_form'] = params.to_dict()
    try:
        report['canonical'] = canonical_reduce(params, tol=tol).to_dict()
        report['separable'] = False
    except SeparableStateError:
        report['canonical'] = None
        report['separable'] = True
        report['r0'] = 0.0
    return report, EXIT_OK


def cmd_eof(args, tol):
    V, label = _load_state(args, tol)
    report = _base_report('eof', tol, label)
    report.update(eof(V, tol=tol).to_dict())
    return report, EXIT_OK


def cmd_epr_curve(args, tol):
    V, label = _load_state(args, tol)
    thetas = _parse_theta_range(args.theta_range)
    r0 = eof(V, tol=tol).r0
    rows = [{'theta': float(t), 'lambda': lambda_theta_gaussian(V, t), 'in_range': in_epr_range(r0, t)}
            for t in thetas]
    return _base_report('epr-curve', tol, label, r0=r0, rows=rows), EXIT_OK


def cmd_probe(args, tol):
    probe = conjecture_probe(args.theta, args.ebits, N=args.dim, restarts=args.restarts, seed=args.seed,
                             workers=args.workers)
    report = _base_report('probe', tol)
    report.update(probe.to_dict())
    if probe.counterexample:
        log.warning('[cmd_probe] re-verified counterexample candidate: margin {}'.format(probe.verified_margin))
        return report, EXIT_COUNTEREXAMPLE
    return report, EXIT_OK


def cmd_ensemble_check(args, tol):
    V, label = _load_state(args, tol)
    result = eof(V, tol=tol)
    report = _base_report('ensemble-check', tol, label, seed=args.seed, samples=args.samples)
    if result.separable:
        report.update({'separable': True, 'ensemble': None, 'realization': None})
        return report, EXIT_OK
    spec = make_ensemble(result.canonical, tol=tol)
    realization = verify_realization(spec, args.samples, args.seed, dim=args.dim, workers=args.workers)
    report.update({'separable': False, 'canonical': result.canonical.to_dict(), 'ensemble': spec.to_dict(),
                   'realization': realization.to_dict()})
    return report, EXIT_OK


def _exit_code_for(error):
    if isinstance(error, INVALID_INPUT_ERRORS):
        return EXIT_INVALID
    return EXIT_SOLVER


def _batch_entries(path):
    """
    Raw JSON texts from a directory of *.json files, or JSON Lines from a file or stdin ('-')
    """
    if path != '-' and Path(path).is_dir():
        return [(p.name, p.read_text(encoding='utf-8')) for p in sorted(Path(path).glob('*.json'))]
    lines = _read_text(path).splitlines()
    return [('line {}'.format(i + 1), line) for i, line in enumerate(lines) if line.strip()]


def _batch_one(index, source, text, tol):
    entry = {'index': index, 'source': source}
    try:
        document = InputDocument.from_json(text)
        entry['label'] = document.label
        result = eof(document.covariance(tol=tol), tol=tol)
    except GaussofError as e:
        entry.update({'status': 'error', 'exit_code': _exit_code_for(e), 'error': type(e).__name__,
                      'message': e.message})
        return entry
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        log.warning('[cmd_batch] {} failed: {}: {}'.format(source, type(e).__name__, e))
        entry.update({'status': 'error', 'exit_code': EXIT_SOLVER, 'error': type(e).__name__,
                      'message': str(e)})
        return entry
    entry.update({'status': 'ok', 'exit_code': EXIT_OK, 'ebits': result.ebits, 'r0': result.r0,
                  'separable': result.separable, 'nu_tilde_min': result.ppt.nu_tilde_min,
                  'canonical': result.canonical.to_dict() if result.canonical is not None else None})
    return entry


def cmd_batch(args, tol):
    entries = _batch_entries(args.input)
    jobs = [(i, source, text) for i, (source, text) in enumerate(entries)]
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as executor:
            results = list(executor.map(lambda job: _batch_one(*job, tol), jobs))
    else:
        results = [_batch_one(*job, tol) for job in jobs]

    report = _base_report('batch', tol, results=results)
    if not results:
        report['summary'] = {'count': 0, 'ok': 0, 'failed': 0}
        report['errors'] = []
        return report, EXIT_OK
    frame = pd.DataFrame(results)
    ok = frame[frame['status'] == 'ok']
    report['summary'] = {
        'count': len(frame),
        'ok': len(ok),
        'failed': len(frame) - len(ok),
        'separable': int(ok['separable'].sum()) if len(ok) else 0,
        'ebits_mean': float(ok['ebits'].mean()) if len(ok) else None,
        'ebits_max': float(ok['ebits'].max()) if len(ok) else None,
    }
    report['errors'] = [r for r in results if r['status'] == 'error']
    if args.format == 'csv':
        report['rows'] = frame.drop(columns=['canonical'], errors='ignore').to_dict(orient='records')
    return report, int(frame['exit_code'].max())


def _add_state_arguments(parser):
    parser.add_argument('--input', help='JSON input document, or - for stdin')
    parser.add_argument('--params', help='standard form n,m,kx,kp instead of --input')


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    common.add_argument('--format', choices=['json', 'csv', 'text'], default=None)
    common.add_argument('--tolerance', action='append', metavar='NAME=VALUE',
                        help='override a numerical tolerance ({})'.format(', '.join(DEFAULT_TOLERANCES.fields)))
    parser = _ArgumentParser(prog='gaussof', description='Entanglement of formation of two-mode Gaussian states')
    sub = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)
    sub.required = True

    p = sub.add_parser('validate', parents=[common], help='symplectic eigenvalues, purity and PPT verdict')
    _add_state_arguments(p)
    p.set_defaults(handler=cmd_validate, default_format='json')

    p = sub.add_parser('standard-form', parents=[common], help='reduce to (n, m, k_x, k_p)')
    _add_state_arguments(p)
    p.set_defaults(handler=cmd_standard_form, default_format='json')

    p = sub.add_parser('canonical', parents=[common], help='canonical form (r0, theta0, u, v, alpha0, beta0)')
    _add_state_arguments(p)
    p.set_defaults(handler=cmd_canonical, default_format='json')

    p = sub.add_parser('eof', parents=[common], help='entanglement of formation')
    _add_state_arguments(p)
    p.set_defaults(handler=cmd_eof, default_format='json')

    p = sub.add_parser('epr-curve', parents=[common], help='Lambda_theta over a grid of angles')
    _add_state_arguments(p)
    p.add_argument('--theta-range', default='{}:{}:32'.format(np.pi / 128, np.pi / 4), metavar='A:B:STEPS')
    p.set_defaults(handler=cmd_epr_curve, default_format='csv')

    p = sub.add_parser('probe', parents=[common],
                       help='numerical search against the squeezed-vacuum bound on Lambda_theta')
    p.add_argument('--theta', type=float, required=True)
    p.add_argument('--ebits', type=float, required=True, help='entanglement budget')
    p.add_argument('--dim', type=int, default=DEFAULT_PROBE_DIM, help='Fock levels per mode')
    p.add_argument('--restarts', type=int, default=64)
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--workers', type=int, default=1)
    p.set_defaults(handler=cmd_probe, default_format='json')

    p = sub.add_parser('ensemble-check', parents=[common], help='Monte Carlo check of the optimal decomposition')
    _add_state_arguments(p)
    p.add_argument('--samples', type=int, default=100000)
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--dim', type=int, default=40, help='Fock levels per mode for the member entanglement check')
    p.add_argument('--workers', type=int, default=1)
    p.set_defaults(handler=cmd_ensemble_check, default_format='json')

    p = sub.add_parser('batch', parents=[common], help='eof over many input documents')
    p.add_argument('--input', required=True, help='directory of *.json, JSON Lines file, or - for stdin')
    p.add_argument('--workers', type=int, default=1)
    p.set_defaults(handler=cmd_batch, default_format='json')
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    args.format = args.format or args.default_format
    try:
        tol = _parse_tolerances(args.tolerance)
        report, code = args.handler(args, tol)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write('gaussof: error: {}\n'.format(e))
        return EXIT_USAGE
    except GaussofError as e:
        code = _exit_code_for(e)
        log.debug('[main] {} failed with {}'.format(args.command, type(e).__name__))
        sys.stderr.write('gaussof {}: {}: {}\n'.format(args.command, type(e).__name__, e))
        _emit({'command': args.command, 'error': type(e).__name__, 'message': e.message,
               'details': json.loads(_dumps(e.details)), 'exit_code': code}, 'json')
        return code
    _emit(report, args.format)
    return code


if __name__ == '__main__':
    sys.exit(main())
