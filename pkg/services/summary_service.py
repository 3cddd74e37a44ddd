# services/summary_service.py
# Console summaries: eigenvalue tables and benchmark run tables

import numpy as np

BANNER = "=" * 80


def format_eigen_summary(eig, limit=10):
    """
    Eigenvalues with explained and cumulative variance, largest first.

    Only the first `limit` rows are listed; the footer gives the solver counts.
    """
    values = np.clip(eig.eigenvalues.astype(np.float64), 0.0, None)
    total = float(values.sum())
    output = [f"{'#':>4}  {'eigenvalue':>16}  {'explained':>10}  {'cumulative':>10}"]

    cumulative = 0.0
    for k, value in enumerate(eig.eigenvalues[:limit]):
        share = values[k] / total if total > 0 else 0.0
        cumulative += share
        output.append(f"{k + 1:>4}  {float(value):>16.8g}  {share:>10.6f}  {cumulative:>10.6f}")
    if eig.dim > limit:
        output.append(f"  ... {eig.dim - limit} more")

    output.append(
        f"\n✓ {eig.strategy} Jacobi: {eig.sweeps_used} sweeps, {eig.rotations_used} rotations"
    )
    return '\n'.join(output)


def format_bench_runs(report):
    """One line per run: stage times, total, CPS and normalized CPS."""
    output = [
        f"{report.platform.name} | {report.image.label} | "
        f"{report.platform.cores} cores @ {report.platform.freq_mhz:g} MHz",
        f"{'PCs':>4} {'stage1':>10} {'stage2':>10} {'stage3':>10} {'stage4':>10} "
        f"{'total ms':>10} {'CPS':>8} {'CPS/(core×MHz)':>15} {'sweeps':>7}",
    ]
    for run in report.runs:
        stages = ' '.join('-'.rjust(10) if s is None else f"{s:>10.3f}" for s in run.stages)
        line = (
            f"{run.pcs:>4} {stages} {run.total_ms:>10.3f} {run.cps:>8.2f} "
            f"{run.cps_per_core_mhz:>15.3e} {run.sweeps_used:>7}"
        )
        if run.speedup is not None:
            line += f"  ({run.speedup:.2f}x)"
        output.append(line)
    return '\n'.join(output)


def print_section(title, body):
    print("\n" + BANNER)
    print(title)
    print(BANNER)
    print(body)
