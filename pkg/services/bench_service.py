# services/bench_service.py
# Stage timings, FLOP model, cubes-per-second figures and benchmark reports

import csv
import hashlib
import io
import json
import logging
import platform as host
import time
from dataclasses import dataclass

import numpy as np
from pydantic import ValidationError

from models.bench import BenchReport, BenchRun, FlopEstimate, ImageDesc, PlatformDesc
from models.cube import CenteredCube, Projection
from models.execution import ExecPlan
from models.linalg import EigenDecomposition, JacobiConfig, SymMatrix
from services.jacobi_service import jacobi_eigen
from services.pca_service import covariance, covariance_blocked, mean_center, project
from services.synthetic_service import builtin_signatures, generate_synthetic
from storage.cube_io import ensure_parent
from utils.errors import CubeFormatError, CubeIOError, StageError

logger = logging.getLogger(__name__)

DEFAULT_PCS = (1, 3, 5)

COVARIANCE_ADVISORY = (
    "covariance count 2*N^2*M^2 is the published formula; "
    "the arithmetic cost of X^T X is about 2*N*M^2 (see covariance_corrected)"
)

# Synthetic size grids of the experimental protocol: (width, height, bands)
SPATIAL_GRID = [(s, s, 50) for s in (100, 200, 300, 400, 500)]
SPECTRAL_GRID = [(300, 300, b) for b in (20, 30, 50, 100, 200)]

FALLBACK_FREQ_MHZ = 1000.0

REPORT_FORMATS = ('json', 'csv', 'markdown')


# ─────────────────────────────────────────────────
# Figures of merit
# ─────────────────────────────────────────────────

def flop_estimate(n_pixels, n_bands, e_vectors):
    """
    Operation counts per stage, with the covariance count as published
    and a corrected one alongside.
    """
    if n_pixels < 1 or n_bands < 1 or e_vectors < 1:
        raise ValueError(f"N, M and e must be >= 1, got N={n_pixels}, M={n_bands}, e={e_vectors}")
    n, m, e = int(n_pixels), int(n_bands), int(e_vectors)

    mean_removal = 2 * n * m + m
    cov = 2 * n ** 2 * m ** 2
    eigen = 4 * m ** 3
    projection = e * n * (2 * m - 1)
    cov_corrected = 2 * n * m ** 2 + m ** 2

    return FlopEstimate(
        mean_removal=mean_removal,
        covariance=cov,
        eigen=eigen,
        projection=projection,
        total=mean_removal + cov + eigen + projection,
        covariance_corrected=cov_corrected,
        total_corrected=mean_removal + cov_corrected + eigen + projection,
        advisory=COVARIANCE_ADVISORY,
    )


def cps(total_ms):
    """Cubes per second: 1000 / total_ms."""
    if not total_ms > 0:
        raise ValueError(f"total time must be > 0 ms, got {total_ms}")
    return 1000.0 / total_ms


def cps_normalized(total_ms, platform, per_core=True):
    """
    CPS / (cores x MHz), or CPS / MHz when per_core is False.

    Platforms with cps_decimals round CPS before dividing, as their
    published figures do.
    """
    value = cps(total_ms)
    if platform.cps_decimals is not None:
        value = round(value, platform.cps_decimals)
    if per_core:
        return value / (platform.cores * platform.freq_mhz)
    return value / platform.freq_mhz


def output_digest(eigenvalues, scores):
    """SHA-256 over eigenvalues and scores as little-endian float64."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(eigenvalues, dtype='<f8').tobytes())
    digest.update(np.ascontiguousarray(scores, dtype='<f8').tobytes())
    return digest.hexdigest()


def _read_cpu_mhz():
    try:
        with open('/proc/cpuinfo', 'r', encoding='utf-8') as f:
            speeds = [float(line.split(':', 1)[1]) for line in f if line.lower().startswith('cpu mhz')]
    except (OSError, ValueError):
        return None
    return max(speeds) if speeds else None


def local_platform(workers=None, name=None):
    """Descriptor for this machine: one core per worker at the fastest reported clock."""
    freq = _read_cpu_mhz()
    if freq is None:
        logger.warning("CPU frequency unknown; assuming %.0f MHz for normalized CPS", FALLBACK_FREQ_MHZ)
        freq = FALLBACK_FREQ_MHZ
    return PlatformDesc(
        name=name or f"local ({host.machine() or 'host'})",
        cores=workers or 1,
        freq_mhz=freq,
    )


# ─────────────────────────────────────────────────
# Timed pipeline
# ─────────────────────────────────────────────────

def _timed(stage, fn, *args, **kwargs):
    start = time.perf_counter_ns()
    try:
        result = fn(*args, **kwargs)
    except Exception as e:
        raise StageError(stage, e) from e
    return result, (time.perf_counter_ns() - start) / 1e6


@dataclass
class PipelineResult:
    centered: CenteredCube
    cov: SymMatrix
    eig: EigenDecomposition
    projection: Projection
    stage_ms: tuple


def run_pipeline(cube, p, cfg=None, plan=None, splits=None):
    """
    Mean removal, covariance (blocked when splits is set), Jacobi and
    projection onto p components, each stage timed on its own.

    Raises:
        StageError: naming the stage that failed
    """
    cfg = cfg or JacobiConfig()
    plan = plan or ExecPlan()
    x, t1 = _timed('mean_removal', mean_center, cube, plan, cfg.precision)
    if splits is not None:
        c, t2 = _timed('covariance', covariance_blocked, x, splits, plan, cfg.precision)
    else:
        c, t2 = _timed('covariance', covariance, x, plan, cfg.precision)
    eig, t3 = _timed('eigen', jacobi_eigen, c, cfg, plan)
    projection, t4 = _timed('projection', project, x, eig, p, plan, cfg.precision)
    return PipelineResult(centered=x, cov=c, eig=eig, projection=projection, stage_ms=(t1, t2, t3, t4))


def make_run(pcs, stage_ms, platform, sweeps_used=0, rotations_used=0, digest=None, baseline_ms=None):
    """BenchRun from four stage times; total is their sum."""
    total_ms = sum(stage_ms)
    return BenchRun(
        pcs=pcs,
        stage1_ms=stage_ms[0], stage2_ms=stage_ms[1], stage3_ms=stage_ms[2], stage4_ms=stage_ms[3],
        total_ms=total_ms,
        cps=cps(total_ms),
        cps_per_core_mhz=cps_normalized(total_ms, platform, per_core=True),
        cps_per_mhz=cps_normalized(total_ms, platform, per_core=False),
        sweeps_used=sweeps_used,
        rotations_used=rotations_used,
        output_digest=digest,
        speedup=baseline_ms / total_ms if baseline_ms else None,
    )


def external_run(total_ms, platform, pcs=1, baseline_ms=None):
    """Run entered from a published or foreign measurement: total only."""
    return BenchRun(
        pcs=pcs,
        total_ms=total_ms,
        cps=cps(total_ms),
        cps_per_core_mhz=cps_normalized(total_ms, platform, per_core=True),
        cps_per_mhz=cps_normalized(total_ms, platform, per_core=False),
        speedup=baseline_ms / total_ms if baseline_ms else None,
        source='external',
    )


def run_benchmark(cube, pcs_list=DEFAULT_PCS, cfg=None, plan=None, platform=None,
                  splits=None, baseline_ms=None):
    """
    Run the four stages once per entry of pcs_list and time each one.

    Stage times cover the stage call only; loading and writing files is
    never inside a timed region.

    Args:
        cube: HyperCube
        pcs_list: principal component counts, one full run each
        cfg: JacobiConfig (precision also selects the stage accumulators)
        plan: ExecPlan
        platform: PlatformDesc for normalized CPS (default: local_platform)
        splits: use covariance_blocked with this many chunks
        baseline_ms: sequential reference time; fills in speedup

    Returns:
        list of BenchRun, in pcs_list order

    Raises:
        StageError: a stage failed (the original error is the cause)
    """
    cfg = cfg or JacobiConfig()
    plan = plan or ExecPlan()
    platform = platform or local_platform(plan.workers)
    pcs_list = list(pcs_list)
    if not pcs_list:
        raise ValueError("pcs_list is empty")
    for p in pcs_list:
        if not 1 <= p <= cube.bands:
            raise ValueError(f"pcs must be in 1..{cube.bands}, got {p}")

    runs = []
    for p in pcs_list:
        result = run_pipeline(cube, p, cfg, plan, splits)
        digest = output_digest(result.eig.eigenvalues, result.projection.scores)
        run = make_run(p, result.stage_ms, platform, result.eig.sweeps_used,
                       result.eig.rotations_used, digest, baseline_ms)
        logger.debug("bench pcs=%d: %.3f / %.3f / %.3f / %.3f ms (total %.3f)", p, *result.stage_ms, run.total_ms)
        runs.append(run)
    return runs


def build_report(runs, platform, image, cfg=None, plan=None, flops=None):
    return BenchReport(
        platform=platform,
        image=image,
        runs=list(runs),
        strategy=cfg.strategy if cfg else None,
        workers=plan.workers if plan else None,
        mode=plan.mode if plan else None,
        flops=flops,
    )


def image_of(cube, name=None):
    return ImageDesc(width=cube.width, height=cube.height, bands=cube.bands, name=name)


# ─────────────────────────────────────────────────
# Scaling grids
# ─────────────────────────────────────────────────

def scaling_grid(kind, cfg=None, plan=None, platform=None, seed=1, endmembers=10, snr_db=70.0, sizes=None):
    """
    Benchmark synthetic cubes over a size grid, one report per image.

    kind 'spatial' grows the image at 50 bands; 'spectral' grows the bands
    at 300 x 300. `sizes` replaces the grid with custom (width, height, bands).
    """
    if sizes is None:
        if kind == 'spatial':
            sizes = SPATIAL_GRID
        elif kind == 'spectral':
            sizes = SPECTRAL_GRID
        else:
            raise ValueError(f"unknown grid '{kind}' (expected spatial or spectral)")
    plan = plan or ExecPlan()
    platform = platform or local_platform(plan.workers)

    reports = []
    for width, height, bands in sizes:
        sigs = builtin_signatures(bands, max(endmembers, 1), seed)
        cube = generate_synthetic(sigs, width, height, min(endmembers, sigs.count), snr_db, seed, plan.workers)
        runs = run_benchmark(cube, (1,), cfg, plan, platform)
        image = image_of(cube)
        logger.info("grid %s: %s total %.2f ms", kind, image.label, runs[0].total_ms)
        reports.append(build_report(runs, platform, image, cfg, plan, flop_estimate(cube.pixels, bands, 1)))
    return reports


def scaling_ratio(runs):
    """Covariance + eigen time of the last run over that of the first."""
    runs = list(runs)
    if len(runs) < 2:
        raise ValueError("need at least two runs")
    first = runs[0].stage2_ms + runs[0].stage3_ms
    last = runs[-1].stage2_ms + runs[-1].stage3_ms
    if first <= 0:
        raise ValueError("first run has no covariance/eigen time")
    return last / first


# ─────────────────────────────────────────────────
# Report files
# ─────────────────────────────────────────────────

CSV_FIELDS = [
    'platform', 'image', 'pcs', 'stage1_ms', 'stage2_ms', 'stage3_ms', 'stage4_ms', 'total_ms',
    'cores', 'freq_mhz', 'cps', 'cps_per_core_mhz', 'cps_per_mhz',
    'sweeps_used', 'rotations_used', 'speedup', 'source', 'output_digest',
]


def _ms(value):
    return '' if value is None else f"{value:.3f}"


def _rows(reports):
    for report in reports:
        for run in report.runs:
            yield report, run


def _render_csv(reports):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(CSV_FIELDS)
    for report, run in _rows(reports):
        writer.writerow([
            report.platform.name, report.image.label, run.pcs,
            _ms(run.stage1_ms), _ms(run.stage2_ms), _ms(run.stage3_ms), _ms(run.stage4_ms), _ms(run.total_ms),
            report.platform.cores, f"{report.platform.freq_mhz:g}",
            f"{run.cps:.2f}", f"{run.cps_per_core_mhz:.3e}", f"{run.cps_per_mhz:.3e}",
            run.sweeps_used, run.rotations_used,
            '' if run.speedup is None else f"{run.speedup:.2f}",
            run.source, run.output_digest or '',
        ])
    return buffer.getvalue()


def _render_markdown(reports):
    lines = [
        "| Platform | Image | #PCs | Time (ms) | Cores | Frequency (MHz) | CPS | CPS/(Core × MHz) | CPS/MHz |",
        "|---|---|---|---|---|---|---|---|---|",
    ]
    for report, run in _rows(reports):
        time_cell = _ms(run.total_ms)
        if run.speedup is not None:
            time_cell += f" ({run.speedup:.2f})"
        lines.append(
            f"| {report.platform.name} | {report.image.label} | {run.pcs} | {time_cell} "
            f"| {report.platform.cores} | {report.platform.freq_mhz:g} | {run.cps:.2f} "
            f"| {run.cps_per_core_mhz:.3e} | {run.cps_per_mhz:.3e} |"
        )
    notes = sorted({report.notes for report in reports if report.notes})
    if notes:
        lines.append("")
        lines.extend(f"_{note}_" for note in notes)
    return "\n".join(lines) + "\n"


def render_report(reports, fmt='json'):
    """Text of one report or a list of reports in json, csv or markdown."""
    single = isinstance(reports, BenchReport)
    reports = [reports] if single else list(reports)
    if not reports:
        raise ValueError("no reports to render")
    if fmt == 'json':
        if single:
            return reports[0].model_dump_json(indent=2) + "\n"
        return json.dumps([r.model_dump(mode='json') for r in reports], indent=2) + "\n"
    if fmt == 'csv':
        return _render_csv(reports)
    if fmt == 'markdown':
        return _render_markdown(reports)
    raise ValueError(f"unknown report format '{fmt}' (expected one of {', '.join(REPORT_FORMATS)})")


def emit_report(reports, path, fmt='json'):
    """Write render_report() output to path; returns the text."""
    text = render_report(reports, fmt)
    try:
        ensure_parent(path)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
    except OSError as e:
        raise CubeIOError(f"cannot write {path}: {e.strerror or e}") from e
    logger.debug("report written: %s (%s)", path, fmt)
    return text


def load_reports(path):
    """Read a report JSON file holding one report object or an array of them."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            payload = json.load(f)
    except OSError as e:
        raise CubeIOError(f"cannot read {path}: {e.strerror or e}") from e
    except json.JSONDecodeError as e:
        raise CubeFormatError(f"{path}: not valid JSON ({e.msg} at line {e.lineno})") from e

    items = payload if isinstance(payload, list) else [payload]
    try:
        return [BenchReport.model_validate(item) for item in items]
    except ValidationError as e:
        error = e.errors()[0]
        field = '.'.join(str(x) for x in error['loc'])
        raise CubeFormatError(f"{path}: {field}: {error['msg']}") from e
