import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .analysis import autocorrelation, histogram, variance_decompose, variance_vs_power
from .constants import (
    DEFAULT_BINS, DEFAULT_K_MAX, DEFAULT_QUANTIZE_BITS, MC_ESTIMATOR, MODEL_NAMES,
    OUTPUT_FORMATS, SWEEP_COLUMNS, VERSION,
)
from .errors import ConfigError, CvqkdError, DomainError
from .keyrate import SystemParams, key_rate, mutual_information
from .montecarlo import estimate_mi, simulate_batch, simulate_channel
from .noise import NoiseModelKind
from .parsers import format_float, parse_distances, parse_float, parse_list, \
    preprocess_negative_infinity
from .report import emit, render_csv, render_json, write_table
from .traces import read_trace, synthesize_trace, write_trace
from core.config import RunConfig, SweepConfig
from core.engine import SweepEngine

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2


class _ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors raised as ConfigError (exit code 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _float(text: str) -> float:
    try:
        return parse_float(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _add_output_args(p: argparse.ArgumentParser, default_fmt: str) -> None:
    p.add_argument('--format', dest='fmt', choices=OUTPUT_FORMATS, default=default_fmt,
                   help=f'Output format (default: {default_fmt})')
    p.add_argument('--output', '-o', type=Path,
                   help='Write results to this file instead of stdout')


def _add_physics_args(p: argparse.ArgumentParser, defaults: bool) -> None:
    """Physical parameter flags; without defaults, unset flags stay None."""
    d = SweepConfig() if defaults else None
    p.add_argument('--f', type=_float, default=d and d.f,
                   help='Reconciliation efficiency f')
    p.add_argument('--eta', type=_float, default=d and d.eta,
                   help='Detector efficiency eta_B')
    p.add_argument('--nu', type=_float, default=d and d.nu,
                   help='Detector electronic noise nu_B (SNU)')
    p.add_argument('--alpha', type=_float, default=d and d.alpha,
                   help='Fiber attenuation in dB/km')
    p.add_argument('--xi-const', dest='xi_const', type=_float, default=d and d.xi_const,
                   help='Excess noise model: xi_A = xi_const + xi_slope * V_A')
    p.add_argument('--xi-slope', dest='xi_slope', type=_float, default=d and d.xi_slope,
                   help='Excess noise model: xi_A = xi_const + xi_slope * V_A')


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog='cvqkd',
        description='CV-QKD key rates under trusted, untrusted and calibrated detector noise, '
                    'and homodyne trace analysis')
    parser.add_argument('--debug', action='store_true',
                        help='Enable debug logging')
    parser.add_argument('--version', action='version', version=f'%(prog)s {VERSION}')
    sub = parser.add_subparsers(dest='verb', required=True, metavar='VERB')

    # --- point ---
    p = sub.add_parser('point', help='Key rate at one parameter point')
    p.add_argument('--model', required=True, help=f"Noise model: {', '.join(MODEL_NAMES)}")
    p.add_argument('--va', type=_float, required=True, help='Modulation variance V_A (SNU)')
    p.add_argument('--L', dest='length_km', type=_float, required=True,
                   help='Fiber length in km')
    _add_physics_args(p, defaults=True)
    _add_output_args(p, 'json')

    # --- sweep ---
    s = sub.add_parser('sweep', help='Optimized key rate versus distance from a config file')
    s.add_argument('config', type=Path, nargs='?',
                   help='key = value recipe (built-in defaults when omitted)')
    s.add_argument('--models', help='Comma-separated noise models')
    s.add_argument('--distances', help='Distances in km, e.g. "1:150" or "10, 50, 100"')
    _add_physics_args(s, defaults=False)
    s.add_argument('--v-min', dest='v_min', type=_float, help='Lower V_A bracket')
    s.add_argument('--v-max', dest='v_max', type=_float, help='Upper V_A bracket')
    s.add_argument('--grid-size', dest='grid_size', type=int, help='Coarse grid points')
    s.add_argument('--refine-iterations', dest='refine_iterations', type=int,
                   help='Golden-section iterations')
    s.add_argument('--workers', type=int, help='Number of parallel workers')
    _add_output_args(s, 'csv')

    # --- mc-validate ---
    m = sub.add_parser('mc-validate', help='Monte Carlo check of the mutual information')
    m.add_argument('--va', type=_float, nargs='+', required=True,
                   help='One or more modulation variances V_A')
    m.add_argument('--xi-tot', dest='xi_tot', type=_float,
                   help='Total noise (SNU); otherwise derived from --model and physics flags')
    m.add_argument('--model', default='trusted', help='Noise model when --xi-tot is not given')
    m.add_argument('--L', dest='length_km', type=_float, default=0.0, help='Fiber length in km')
    _add_physics_args(m, defaults=True)
    m.add_argument('--n', type=int, default=1_000_000, help='Samples per point')
    m.add_argument('--seed', type=int, default=0, help='Base seed; row i uses seed + i')
    _add_output_args(m, 'csv')

    # --- analyze ---
    a = sub.add_parser('analyze', help='Variance decomposition, QCNR, autocorrelation, histogram')
    a.add_argument('traces', type=Path, nargs='+', help='Signal trace files')
    a.add_argument('--dark', type=Path, required=True, help='Trace recorded with the LO off')
    a.add_argument('--k-max', dest='k_max', type=int, default=DEFAULT_K_MAX,
                   help=f'Largest autocorrelation lag (default: {DEFAULT_K_MAX})')
    a.add_argument('--bins', type=int, default=DEFAULT_BINS,
                   help=f'Histogram bins (default: {DEFAULT_BINS})')
    a.add_argument('--linearity', action='store_true',
                   help='Fit sigma_T^2 against each trace\'s lo_power_mw')
    a.add_argument('--workers', type=int, default=1, help='Threads for autocorrelation lags')
    a.add_argument('--output-dir', dest='output_dir', type=Path,
                   help='Write per-trace autocorrelation and histogram CSVs here')
    _add_output_args(a, 'csv')

    # --- synth ---
    y = sub.add_parser('synth', help='Write a synthetic AR(1) + vacuum-noise trace')
    y.add_argument('--n', type=int, required=True, help='Number of samples')
    y.add_argument('--phi', type=_float, default=0.0, help='AR(1) coefficient in [0, 1)')
    y.add_argument('--qcnr', type=_float, required=True, help='QCNR in dB, or -inf')
    y.add_argument('--sigma-e2', dest='sigma_e2', type=_float, default=1.0,
                   help='Electrical noise variance')
    y.add_argument('--bits', type=int, default=DEFAULT_QUANTIZE_BITS,
                   help=f'Quantizer bits (default: {DEFAULT_QUANTIZE_BITS})')
    y.add_argument('--no-quantize', dest='no_quantize', action='store_true',
                   help='Keep full-precision samples')
    y.add_argument('--full-scale', dest='full_scale', type=_float,
                   help='Quantizer full scale (default: 5 sigma_T)')
    y.add_argument('--seed', type=int, default=0, help='Random seed')
    y.add_argument('--lo-power', dest='lo_power', type=_float, default=0.0,
                   help='LO power in mW recorded in the metadata')
    y.add_argument('--label', default='', help='Label recorded in the metadata')
    y.add_argument('--binary', action='store_true', help='Write an f64le body')
    y.add_argument('--output', '-o', type=Path, required=True, help='Trace file to write')
    return parser


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    argv = sys.argv[1:] if argv is None else list(argv)
    return build_parser().parse_args(preprocess_negative_infinity(argv))


def _system_params(args, v_a: float) -> SystemParams:
    return SystemParams(
        v_a=v_a,
        length_km=args.length_km,
        f_rec=args.f,
        eta_b=args.eta,
        nu_b=args.nu,
        attenuation_db_per_km=args.alpha,
        xi_const=args.xi_const,
        xi_slope=args.xi_slope,
    )


def run_point(args) -> None:
    run = RunConfig('point', output=args.output, fmt=args.fmt)
    kind = NoiseModelKind.parse(args.model)
    params = _system_params(args, args.va)
    result = key_rate(params, kind)
    record = result.as_dict()
    record.update(length_km=args.length_km, f=args.f, eta=args.eta, nu=args.nu,
                  alpha=args.alpha, xi_a=params.xi_a)
    if run.fmt == 'json':
        emit(render_json(record), run.output)
    else:
        emit(render_csv(sorted(record), [record], {'version': VERSION}), run.output)


def run_sweep(args) -> None:
    config = SweepConfig.load(args.config) if args.config else SweepConfig()
    overrides = {key: getattr(args, key) for key in
                 ('f', 'eta', 'nu', 'alpha', 'xi_const', 'xi_slope', 'v_min', 'v_max',
                  'grid_size', 'refine_iterations', 'workers')}
    if args.models is not None:
        overrides['models'] = parse_list(args.models)
    if args.distances is not None:
        overrides['distances'] = parse_distances(args.distances)
    config.update(**overrides)
    run = RunConfig('sweep', sweep=config, output=args.output, fmt=args.fmt)
    spec = config.to_spec()

    def progress_callback(current, total, label):
        logger.debug("[%d/%d] %s", current, total, label)

    rows = SweepEngine(max_workers=config.workers).run(spec, progress_callback=progress_callback)
    meta = spec.metadata()
    if args.config:
        meta['config'] = args.config.name
    if run.fmt == 'json':
        emit(render_json({'metadata': meta, 'rows': [r.as_dict() for r in rows]}), run.output)
    else:
        emit(render_csv(SWEEP_COLUMNS, [r.as_dict() for r in rows], meta), run.output)


def run_mc_validate(args) -> None:
    run = RunConfig('mc-validate', output=args.output, fmt=args.fmt)
    kind = NoiseModelKind.parse(args.model)
    rows = []
    for i, v_a in enumerate(args.va):
        seed = args.seed + i
        if args.xi_tot is not None:
            batch = simulate_channel(v_a, args.xi_tot, args.n, seed)
        else:
            batch = simulate_batch(_system_params(args, v_a), kind, args.n, seed)
        analytic = mutual_information(v_a + 1.0, batch.xi_tot)
        estimate = estimate_mi(batch)
        rel_error = abs(estimate.bits - analytic) / analytic if analytic > 0 else float('nan')
        rows.append({
            'v_a': v_a,
            'xi_tot': batch.xi_tot,
            'n': args.n,
            'seed': seed,
            'analytic_mi': analytic,
            'empirical_mi': estimate.bits,
            'rel_error': rel_error,
            'saturated': estimate.saturated,
        })
    meta = {'version': VERSION, 'estimator': MC_ESTIMATOR,
            'rng': f'numpy {np.__version__} PCG64, streams keyed by (seed, chunk)',
            'channel': 'input-referred y = x + n, Var(n) = 1 + xi_tot'}
    columns = ['v_a', 'xi_tot', 'n', 'seed', 'analytic_mi', 'empirical_mi', 'rel_error',
               'saturated']
    if run.fmt == 'json':
        emit(render_json({'metadata': meta, 'rows': rows}), run.output)
    else:
        emit(render_csv(columns, rows, meta), run.output)


def run_analyze(args) -> None:
    run = RunConfig('analyze', output=args.output, fmt=args.fmt)
    dark = read_trace(args.dark)
    traces = [(path, read_trace(path)) for path in args.traces]
    rows = []
    for path, trace in traces:
        stats = variance_decompose(trace, dark)
        acf = autocorrelation(trace, args.k_max, max_workers=args.workers)
        hist = histogram(trace, args.bins)
        rows.append({
            'trace': path.name,
            'label': trace.meta.label,
            'lo_power_mw': trace.meta.lo_power_mw,
            'n': trace.n,
            'mean': stats.mean,
            'sigma_t2': stats.sigma_t2,
            'sigma_e2': stats.sigma_e2,
            'sigma_q2': stats.sigma_q2,
            'qcnr_db': stats.qcnr_db,
            'r1': float(acf.r[1]) if args.k_max >= 1 else float('nan'),
            'white_noise_band': acf.white_noise_band,
            'fit_mean': hist.fit_mean,
            'fit_variance': hist.fit_variance,
            'calibration_drift': stats.calibration_drift,
        })
        if args.output_dir:
            source = trace.meta.extra.get('noise_model', 'measured')
            write_table(args.output_dir / f"{path.stem}.autocorr.csv", ['lag', 'r'],
                        ({'lag': int(k), 'r': float(r)} for k, r in zip(acf.lags, acf.r)),
                        {'trace': path.name, 'n': str(acf.n),
                         'white_noise_band': format_float(acf.white_noise_band),
                         'source': source})
            write_table(args.output_dir / f"{path.stem}.hist.csv",
                        ['bin_center', 'probability'],
                        ({'bin_center': float(c), 'probability': float(p)}
                         for c, p in zip(hist.bin_centers, hist.probability)),
                        {'trace': path.name, 'fit_mean': format_float(hist.fit_mean),
                         'fit_variance': format_float(hist.fit_variance), 'source': source})

    payload = {'metadata': {'version': VERSION, 'dark': args.dark.name}, 'traces': rows}
    if args.linearity:
        fit = variance_vs_power([(t.meta.lo_power_mw, t) for _, t in traces], dark)
        payload['linearity'] = {
            'slope': fit.slope, 'intercept': fit.intercept, 'r_squared': fit.r_squared,
            'points': [{'power_mw': p.power_mw, 'sigma_t2': p.stats.sigma_t2,
                        'residual': float(res)} for p, res in zip(fit.points, fit.residuals)],
        }
        if args.output_dir:
            write_table(args.output_dir / 'linearity.csv', ['power_mw', 'sigma_t2'],
                        payload['linearity']['points'],
                        {'slope': format_float(fit.slope),
                         'intercept': format_float(fit.intercept),
                         'r_squared': format_float(fit.r_squared)})

    if run.fmt == 'json':
        emit(render_json(payload), run.output)
    else:
        meta = dict(payload['metadata'])
        if args.linearity:
            lin = payload['linearity']
            meta.update(slope=format_float(lin['slope']),
                        intercept=format_float(lin['intercept']),
                        r_squared=format_float(lin['r_squared']))
        emit(render_csv(list(rows[0]), rows, meta), run.output)


def run_synth(args) -> None:
    trace = synthesize_trace(
        n=args.n,
        sigma_e2=args.sigma_e2,
        phi=args.phi,
        qcnr_db=args.qcnr,
        quantize_bits=None if args.no_quantize else args.bits,
        full_scale=args.full_scale,
        seed=args.seed,
        lo_power_mw=args.lo_power,
        label=args.label,
    )
    write_trace(trace, args.output, fmt='f64le' if args.binary else 'text')
    logger.info("wrote %d samples to %s", trace.n, args.output)


VERB_HANDLERS = {
    'point': run_point,
    'sweep': run_sweep,
    'mc-validate': run_mc_validate,
    'analyze': run_analyze,
    'synth': run_synth,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for the CLI application.
    Returns 0 on success, 1 on usage/config errors, 2 on physics domain errors.
    """
    try:
        args = parse_arguments(argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.INFO,
        format='%(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )

    try:
        VERB_HANDLERS[args.verb](args)
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except (CvqkdError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK
