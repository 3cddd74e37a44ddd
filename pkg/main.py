# main.py - hyperpca command line: synth, reduce, eigen, bench, report
# Settings precedence: flags > --config file > HYPERPCA_* env > defaults

import argparse
import math
import sys

from config.settings import SETTING_KEYS, configure_logging, resolve_settings
from models.bench import ImageDesc, PlatformDesc
from models.execution import ExecPlan
from models.linalg import JacobiConfig
from parallel.pool import close_pool
from platform_presets import IMAGES, PLATFORMS, get_platform_by_key, published_baseline_ms
from services.bench_service import (
    REPORT_FORMATS, build_report, emit_report, external_run, flop_estimate, image_of,
    load_reports, local_platform, make_run, output_digest, render_report, run_benchmark,
    run_pipeline, scaling_grid, scaling_ratio,
)
from services.jacobi_service import jacobi_eigen
from services.pca_service import explained_variance, project
from services.summary_service import format_bench_runs, format_eigen_summary, print_section
from services.synthetic_service import builtin_signatures, synthesize
from services.validation_service import validate_cli_config
from storage.cube_io import cube_paths, ensure_parent, load_cube, load_signatures_csv, save_cube, save_signatures_csv
from storage.exports import (
    render_band_pgm, save_band_means_csv, save_eigen_csv, save_history_csv, save_projection,
)
from utils.errors import HyperPcaError
from utils.matrix_parser import RAW_DTYPES, load_matrix, load_matrix_raw

STRATEGIES = ('classical', 'cyclic', 'parallel')


def _one_line(error):
    text = str(error).strip()
    return text.splitlines()[0] if text else error.__class__.__name__


def _pcs_list(text):
    try:
        values = [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"principal component counts must be >= 1, got {text!r}")
    return values


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _snr(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'inf', got {text!r}")
    if math.isnan(value) or value == -math.inf:
        raise argparse.ArgumentTypeError("SNR must be finite or inf")
    return value


def _plan(settings):
    return ExecPlan(workers=settings['workers'], mode=settings['mode'], chunk=settings['chunk'])


def _jacobi_config(settings, strategy, record_history=False, normalize_signs=False):
    return JacobiConfig(
        strategy=strategy,
        epsilon_rel=settings['epsilon'],
        max_sweeps=settings['max_sweeps'],
        precision=settings['precision'],
        record_history=record_history,
        normalize_signs=normalize_signs,
    )


# ─────────────────────────────────────────────────
# Subcommands
# ─────────────────────────────────────────────────

def cmd_synth(args, settings):
    """Generate a synthetic mixed cube and write <out>.hdr.json + <out>.raw."""
    plan = _plan(settings)
    if args.signatures:
        sigs = load_signatures_csv(args.signatures)
    else:
        sigs = builtin_signatures(args.bands, max(args.endmembers, args.library_size), settings['seed'])
    if sigs.bands != args.bands:
        raise ValueError(f"signature file has {sigs.bands} bands, --bands is {args.bands}")

    scene = synthesize(sigs, args.width, args.height, args.endmembers, args.snr_db, settings['seed'], plan.workers)
    header_path, data_path = cube_paths(args.out)
    ensure_parent(data_path)
    save_cube(scene.cube, header_path, data_path)
    if args.save_signatures:
        save_signatures_csv(sigs, args.save_signatures)
        print(f"✓ Signatures: {args.save_signatures}")

    print(f"✓ Header: {header_path}")
    print(f"✓ Data:   {data_path} ({scene.cube.header().data_bytes} bytes)")
    snr = scene.empirical_snr_db
    print(f"✓ Empirical SNR: {'inf' if math.isinf(snr) else f'{snr:.2f}'} dB "
          f"(endmembers {', '.join(str(i) for i in scene.endmember_ids)})")
    return 0


def cmd_reduce(args, settings):
    """Full pipeline on a cube: scores, eigen CSV, band means, report, optional PC1 image."""
    plan = _plan(settings)
    cfg = _jacobi_config(settings, args.strategy, record_history=bool(args.history),
                         normalize_signs=args.normalize_signs)
    cube = load_cube(*cube_paths(args.input))
    if not 1 <= args.pcs <= cube.bands:
        raise ValueError(f"--pcs must be in 1..{cube.bands}, got {args.pcs}")

    result = run_pipeline(cube, args.pcs, cfg, plan, args.blocked)
    projection = result.projection
    if args.raw_projection:
        projection = project(result.centered, result.eig, args.pcs, plan, cfg.precision, raw=True)

    out = args.out or args.input
    ensure_parent(out + '.scores.raw')
    json_path, raw_path = save_projection(projection, out)
    save_eigen_csv(result.eig, f"{out}.eigen.csv")
    save_band_means_csv(result.centered.band_means, f"{out}.means.csv")
    if args.history:
        save_history_csv(result.eig.history or [], f"{out}.history.csv")
    if args.render_pc1:
        render_band_pgm(projection.scores[0], cube.width, cube.height, f"{out}.pc1.pgm")

    platform = local_platform(plan.workers)
    run = make_run(args.pcs, result.stage_ms, platform, result.eig.sweeps_used, result.eig.rotations_used,
                   output_digest(result.eig.eigenvalues, projection.scores))
    report = build_report([run], platform, image_of(cube, args.input), cfg, plan,
                          flop_estimate(cube.pixels, cube.bands, args.pcs))
    emit_report(report, f"{out}.report.json", 'json')

    print_section(f"PCA of {args.input} ({cube.width} x {cube.height} x {cube.bands})",
                  format_eigen_summary(result.eig))
    print(f"✓ Explained variance ({args.pcs} PCs): {explained_variance(result.eig, args.pcs):.6f}")
    print(f"✓ Scores: {raw_path} (+ {json_path})")
    print(f"✓ Eigenvalues: {out}.eigen.csv")
    if args.render_pc1:
        print(f"✓ PC1 image: {out}.pc1.pgm")
    return 0


def cmd_eigen(args, settings):
    """Jacobi eigendecomposition of a standalone symmetric matrix."""
    if args.raw:
        if not args.dim:
            raise ValueError("--raw needs --dim")
        matrix = load_matrix_raw(args.raw, args.dim, args.raw_dtype)
    elif args.matrix:
        matrix = load_matrix(args.matrix)
    else:
        raise ValueError("give a matrix (inline text or CSV path) or --raw PATH --dim M")

    cfg = _jacobi_config(settings, args.strategy, normalize_signs=args.normalize_signs)
    eig = jacobi_eigen(matrix, cfg, _plan(settings))
    print(format_eigen_summary(eig, limit=args.limit))
    if args.vectors:
        print("\nEigenvectors (columns):")
        for row in eig.eigenvectors:
            print("  " + "  ".join(f"{float(v):>12.8f}" for v in row))
    if args.out:
        ensure_parent(args.out)
        save_eigen_csv(eig, args.out)
        print(f"✓ Eigenvalues: {args.out}")
    return 0


def _bench_platform(args, workers):
    if args.preset:
        base = get_platform_by_key(args.preset)['platform']
    elif args.cores or args.freq_mhz:
        base = PlatformDesc(name=args.platform_name or 'local', cores=args.cores or workers,
                            freq_mhz=args.freq_mhz or local_platform(workers).freq_mhz)
    else:
        base = local_platform(workers, args.platform_name)
    updates = {k: v for k, v in (('name', args.platform_name), ('cores', args.cores),
                                  ('freq_mhz', args.freq_mhz)) if v}
    return PlatformDesc(**{**base.model_dump(), **updates}) if updates else base


def cmd_bench(args, settings):
    """Time the pipeline per stage and write a report."""
    plan = _plan(settings)
    cfg = _jacobi_config(settings, args.strategy)
    platform = _bench_platform(args, plan.workers)

    if args.grid:
        reports = scaling_grid(args.grid, cfg, plan, platform, seed=settings['seed'])
        for report in reports:
            print(format_bench_runs(report))
        ratio = scaling_ratio([r.runs[0] for r in reports])
        print(f"\n✓ Covariance + eigen time, last / first image: {ratio:.2f}")
    elif args.input:
        cube = load_cube(*cube_paths(args.input))
        runs = run_benchmark(cube, args.pcs, cfg, plan, platform, args.blocked, args.baseline_ms)
        reports = build_report(runs, platform, image_of(cube, args.name), cfg, plan,
                               flop_estimate(cube.pixels, cube.bands, max(args.pcs)))
        print_section("BENCHMARK", format_bench_runs(reports))
        if reports.flops.advisory:
            print(f"⚠️  {reports.flops.advisory}")
    else:
        raise ValueError("bench needs --input STEM or --grid spatial|spectral")

    out = args.out or f"bench.{'md' if args.format == 'markdown' else args.format}"
    emit_report(reports, out, args.format)
    print(f"✓ Report: {out}")
    return 0


def _parse_image(text):
    key = text.strip().lower()
    if key in IMAGES:
        return IMAGES[key]
    parts = key.replace(' ', '').split('x')
    if len(parts) == 3 and all(p.isdigit() for p in parts):
        return ImageDesc(width=int(parts[0]), height=int(parts[1]), bands=int(parts[2]))
    raise ValueError(f"unknown image '{text}' (use {', '.join(IMAGES)} or WxHxB)")


def parse_external(text):
    """
    "platform,image,time_ms[,cores,freq_mhz[,cps_decimals]]" -> BenchReport.

    A preset platform key fills in missing hardware fields and its CPS rounding.
    """
    fields = [f.strip() for f in text.split(',')]
    if len(fields) < 3:
        raise ValueError(f"external timing needs platform,image,time_ms: {text!r}")
    name, image, total_ms = fields[0], _parse_image(fields[1]), float(fields[2])

    platform = PLATFORMS[name.lower()]['platform'] if name.lower() in PLATFORMS else None
    updates = {}
    if len(fields) > 3 and fields[3]:
        updates['cores'] = int(fields[3])
    if len(fields) > 4 and fields[4]:
        updates['freq_mhz'] = float(fields[4])
    if len(fields) > 5 and fields[5]:
        updates['cps_decimals'] = int(fields[5])
    if platform is None:
        if 'freq_mhz' not in updates:
            raise ValueError(f"external platform '{name}' is not a preset; give cores and freq_mhz")
        platform = PlatformDesc(name=name, cores=updates.pop('cores', 1), **updates)
    elif updates:
        platform = PlatformDesc(**{**platform.model_dump(), **updates})
    return build_report([external_run(total_ms, platform)], platform, image)


def published_reports():
    """Reference runs of every preset, with speedup over the sequential CPU where known."""
    reports = []
    for key, preset in PLATFORMS.items():
        for image_key, total_ms in preset['published']:
            baseline = None if key == 'i7-4790' else published_baseline_ms(image_key)
            run = external_run(total_ms, preset['platform'], baseline_ms=baseline)
            reports.append(build_report([run], preset['platform'], IMAGES[image_key]))
    return reports


def cmd_report(args, settings):
    """Merge report files, external timings and published runs into one table."""
    reports = []
    for path in args.inputs:
        reports.extend(load_reports(path))
    for text in args.external or []:
        reports.append(parse_external(text))
    if args.published:
        reports.extend(published_reports())

    if args.out:
        emit_report(reports, args.out, args.format)
        print(f"✓ Report: {args.out} ({sum(len(r.runs) for r in reports)} rows)")
    else:
        print(render_report(reports, args.format), end='')
    return 0


# ─────────────────────────────────────────────────
# Argument parsing
# ─────────────────────────────────────────────────

def _shared_flags():
    shared = argparse.ArgumentParser(add_help=False)
    group = shared.add_argument_group('shared settings')
    group.add_argument('--workers', type=int, help='worker threads (env HYPERPCA_WORKERS; default: CPU count)')
    group.add_argument('--mode', choices=('deterministic', 'fast'),
                       help='deterministic: bit-identical results for any worker count; fast: completion-order reductions')
    group.add_argument('--seed', type=int, help='seed for every random draw (default 1)')
    group.add_argument('--config', help='key=value settings file (bare or HYPERPCA_ keys)')
    group.add_argument('--epsilon', type=float, help='Jacobi stop factor relative to the largest initial off-diagonal entry')
    group.add_argument('--max-sweeps', dest='max_sweeps', type=int, help='Jacobi sweep cap before giving up')
    group.add_argument('--chunk', type=int, help='pixels per task in deterministic mode')
    group.add_argument('--precision', choices=('double', 'single'),
                       help='double: float64 accumulators; single: float32 throughout')
    group.add_argument('--log-level', dest='log_level', help='DEBUG, INFO, WARNING, ERROR or CRITICAL')
    return shared


def build_parser():
    shared = _shared_flags()
    parser = argparse.ArgumentParser(prog='hyperpca', description='PCA of hyperspectral cubes with Jacobi eigendecomposition')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('synth', parents=[shared], help='generate a synthetic cube')
    p.add_argument('--width', type=int, required=True, help='samples per line')
    p.add_argument('--height', type=int, required=True, help='lines')
    p.add_argument('--bands', type=int, required=True, help='spectral bands')
    p.add_argument('--endmembers', type=int, default=10, help='signatures mixed per scene (default 10)')
    p.add_argument('--snr-db', dest='snr_db', type=_snr, default=70.0, help="noise level in dB, or 'inf' for none (default 70)")
    p.add_argument('--signatures', help='signature CSV (first row: band count; then name + values)')
    p.add_argument('--library-size', dest='library_size', type=int, default=10,
                   help='built-in signatures to draw when no --signatures file is given (default 10)')
    p.add_argument('--save-signatures', dest='save_signatures', help='also write the signature library to this CSV')
    p.add_argument('--out', required=True, help='output stem: writes STEM.hdr.json and STEM.raw')
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser('reduce', parents=[shared], help='run the PCA pipeline on a cube')
    p.add_argument('--input', required=True, help='cube stem (STEM.hdr.json + STEM.raw)')
    p.add_argument('--pcs', type=int, default=1, help='principal components to project (default 1)')
    p.add_argument('--strategy', choices=STRATEGIES, default='cyclic', help='Jacobi pivot strategy (default cyclic)')
    p.add_argument('--blocked', type=_positive_int, help='compute the covariance as a sum over N pixel chunks')
    p.add_argument('--out', help='output stem (default: the input stem)')
    p.add_argument('--render-pc1', dest='render_pc1', action='store_true', help='write the first component as STEM.pc1.pgm')
    p.add_argument('--raw-projection', dest='raw_projection', action='store_true',
                   help='project the original values instead of the centered ones')
    p.add_argument('--normalize-signs', dest='normalize_signs', action='store_true',
                   help='make the largest entry of each eigenvector positive')
    p.add_argument('--history', action='store_true', help='write per-sweep off-diagonal norms to STEM.history.csv')
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser('eigen', parents=[shared], help='eigendecomposition of a symmetric matrix')
    p.add_argument('matrix', nargs='?', help='inline matrix such as "1,1;1,3", or a CSV file')
    p.add_argument('--raw', help='raw little-endian row-major matrix file')
    p.add_argument('--dim', type=int, help='matrix dimension for --raw')
    p.add_argument('--raw-dtype', dest='raw_dtype', choices=tuple(RAW_DTYPES), default='f64', help='element type for --raw (default f64)')
    p.add_argument('--strategy', choices=STRATEGIES, default='cyclic', help='Jacobi pivot strategy (default cyclic)')
    p.add_argument('--normalize-signs', dest='normalize_signs', action='store_true',
                   help='make the largest entry of each eigenvector positive')
    p.add_argument('--vectors', action='store_true', help='also print the eigenvectors')
    p.add_argument('--limit', type=int, default=20, help='eigenvalues listed (default 20)')
    p.add_argument('--out', help='write the eigenvalue CSV here')
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser('bench', parents=[shared], help='time the pipeline per stage')
    p.add_argument('--input', help='cube stem to benchmark')
    p.add_argument('--grid', choices=('spatial', 'spectral'), help='benchmark the synthetic size grid instead')
    p.add_argument('--pcs', type=_pcs_list, default=[1, 3, 5], help='component counts, one run each (default 1,3,5)')
    p.add_argument('--strategy', choices=STRATEGIES, default='cyclic', help='Jacobi pivot strategy (default cyclic)')
    p.add_argument('--blocked', type=_positive_int, help='compute the covariance as a sum over N pixel chunks')
    p.add_argument('--format', choices=REPORT_FORMATS, default='json', help='report format (default json)')
    p.add_argument('--out', help='report path (default bench.json / bench.csv / bench.md)')
    p.add_argument('--name', help='image label in the report')
    p.add_argument('--preset', help=f"platform preset: {', '.join(PLATFORMS)}")
    p.add_argument('--platform-name', dest='platform_name', help='platform label in the report')
    p.add_argument('--cores', type=int, help='cores for CPS/(core x MHz) (default: --workers)')
    p.add_argument('--freq-mhz', dest='freq_mhz', type=float, help='clock for normalized CPS (default: read from the host)')
    p.add_argument('--baseline-ms', dest='baseline_ms', type=float, help='sequential reference time; adds speedup')
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser('report', parents=[shared], help='merge reports into one comparison table')
    p.add_argument('inputs', nargs='*', help='report JSON files')
    p.add_argument('--external', action='append',
                   help='"platform,image,time_ms[,cores,freq_mhz[,cps_decimals]]"; platform is a preset key or a name '
                        'with cores and freq_mhz; cps_decimals rounds CPS before normalizing (the gtx680 '
                        'preset rounds to 2, as its published figures do); repeatable')
    p.add_argument('--published', action='store_true', help='include the published reference runs of every preset')
    p.add_argument('--format', choices=REPORT_FORMATS, default='markdown', help='output format (default markdown)')
    p.add_argument('--out', help='write here instead of printing')
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == 'report' and not (args.inputs or args.external or args.published):
        parser.error("report needs at least one input file, --external timing or --published")

    try:
        settings = resolve_settings({k: getattr(args, k, None) for k in SETTING_KEYS}, args.config)
    except (OSError, ValueError) as e:
        print(f"❌ Error: {_one_line(e)}", file=sys.stderr)
        return 2
    result = validate_cli_config(settings)
    if not result['valid']:
        print(f"❌ Invalid settings: {'; '.join(result['errors'])}", file=sys.stderr)
        return 2
    settings = result['data']
    configure_logging(settings['log_level'])

    try:
        return args.func(args, settings)
    except KeyboardInterrupt:
        print("\n\n👋 Exiting...\n")
        return 130
    except (HyperPcaError, ValueError, KeyError, OSError) as e:
        print(f"❌ Error: {_one_line(e)}", file=sys.stderr)
        return 1
    finally:
        close_pool()


if __name__ == "__main__":
    sys.exit(main())
