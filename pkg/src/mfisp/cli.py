"""Command-line interface: plan -> simulate -> reconstruct -> evaluate, plus diagnostics.

Exit codes: 0 ok, 1 I/O, parse or usage, 2 planning, 3 simulation,
4 reconstruction.  ``MFISP_NUM_THREADS`` caps the BLAS/OpenMP thread pools.
"""

import os

if os.environ.get("MFISP_NUM_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["MFISP_NUM_THREADS"])

import csv
import json
import logging
import sys

import click
import numpy as np

from . import fbbasis, forward, freqplan, kmatrix, pipeline, specfun
from .errors import MfispError, PlanError, StageError, UsageError

EXIT_OK, EXIT_IO, EXIT_PLAN, EXIT_SIMULATE, EXIT_RECONSTRUCT = 0, 1, 2, 3, 4
STAGE_CODES = {"plan": EXIT_PLAN, "simulate": EXIT_SIMULATE, "reconstruct": EXIT_RECONSTRUCT}


class InputError(click.ClickException):
    exit_code = EXIT_IO


def _fmt(x):
    return f"{x:.17g}"


def _read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {what} file {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} file {path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _write_json(path, doc):
    text = json.dumps(doc, indent=1)
    if path in (None, "-"):
        click.echo(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from exc


def _write_rows(path, header, rows):
    fh = sys.stdout if path in (None, "-") else None
    try:
        if fh is None:
            fh = open(path, "w", newline="")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from exc
    finally:
        if fh is not None and fh is not sys.stdout:
            fh.close()


def _load_plan(path):
    try:
        return freqplan.FrequencyPlan.from_dict(_read_json(path, "plan"))
    except PlanError as exc:
        raise InputError(f"plan file {path}: {exc}") from exc


def _load_measurements(path):
    try:
        return forward.parse_measurements(_read_json(path, "measurement"))
    except UsageError as exc:
        raise InputError(f"measurement file {path}: {exc}") from exc


def _load_expansion(path):
    try:
        return fbbasis.FBExpansion.from_dict(_read_json(path, "coefficient"))
    except UsageError as exc:
        raise InputError(f"coefficient file {path}: {exc}") from exc


def _read_grid_csv(path, grid):
    """Complex field from a (r, theta, re, im) CSV written on ``grid``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read grid file {path}: {exc.strerror}") from exc
    if not rows or rows[0] != ["r", "theta", "re", "im"]:
        raise InputError(f"grid file {path}: line 1: expected header r,theta,re,im")
    body = rows[1:]
    if len(body) != grid.r.size * grid.theta.size:
        raise InputError(f"grid file {path}: {len(body)} rows, grid needs {grid.r.size * grid.theta.size}")
    data = np.empty((len(body), 4))
    for i, row in enumerate(body):
        try:
            if len(row) != 4:
                raise ValueError(f"{len(row)} fields")
            data[i] = [float(v) for v in row]
        except ValueError as exc:
            raise InputError(f"grid file {path}: line {i + 2}: {exc}") from exc
    rr, tt = grid.mesh()
    if not (np.allclose(data[:, 0], rr.ravel(), atol=1e-12) and np.allclose(data[:, 1], tt.ravel(), atol=1e-12)):
        raise InputError(f"grid file {path}: nodes do not match the requested grid")
    return (data[:, 2] + 1j * data[:, 3]).reshape(grid.shape)


def _run(fn):
    """Translate library errors into exit codes."""
    try:
        return fn()
    except StageError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(STAGE_CODES[exc.stage])
    except MfispError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(EXIT_IO)


def _plan_options(f):
    opts = [
        click.option("--M", "M", type=click.IntRange(0), default=3, show_default=True, help="Largest angular order."),
        click.option("--N", "N", type=click.IntRange(1), default=3, show_default=True, help="Radial indices per order."),
        click.option("--R0", "R0", type=float, default=1.0, show_default=True, help="Source disc radius."),
        click.option("--R", "R", type=float, default=1.5, show_default=True, help="Measurement radius."),
        click.option("--delta-k", type=float, default=None, help="Frequency perturbation bound."),
        click.option("--auto-delta", is_flag=True, help="Compute delta-k automatically (the default)."),
        click.option("--allow-wide", is_flag=True, help="Accept delta-k above 1/R0."),
        click.option("--fast-lemma1", is_flag=True, help="Evaluate the perturbation bound at index (0,1) only."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _grid_options(f):
    f = click.option("--n-theta", type=click.IntRange(8), default=256, show_default=True)(f)
    return click.option("--n-r", type=click.IntRange(4), default=160, show_default=True)(f)


def _check_delta(delta_k, auto_delta):
    if delta_k is not None and auto_delta:
        raise click.UsageError("--delta-k and --auto-delta are mutually exclusive")


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
def main(verbose):
    """Multi-frequency inverse source reconstruction on a disc."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)


@main.command("plan")
@_plan_options
@click.option("--c", "c", type=float, default=1.0, show_default=True, help="Wave speed.")
@click.option("--report-omega", is_flag=True, help="Also print omega = c k for each frequency.")
@click.option("-o", "--output", default="-", help="plan.json path (stdout by default).")
def cmd_plan(M, N, R0, R, delta_k, auto_delta, allow_wide, fast_lemma1, c, report_omega, output):
    """Compute the reduced frequency set and its assignment."""
    _check_delta(delta_k, auto_delta)
    if not c > 0:
        raise click.UsageError("--c must be positive")
    cfg = pipeline.ExperimentConfig(M=M, N=N, R0=R0, R=R, delta_k=delta_k, allow_wide=allow_wide,
                                    fast_lemma1=fast_lemma1)
    plan = _run(lambda: pipeline.make_plan(cfg))
    _write_json(output, plan.to_dict())
    click.echo(f"delta_k={_fmt(plan.delta_k)} |Q_s|={plan.q_s.size} gated={plan.theorem2_gated}", err=True)
    if report_omega:
        for k in plan.q_s:
            click.echo(f"k={_fmt(k)} omega={_fmt(c * k)}", err=True)


@main.command("simulate")
@click.option("--plan", "plan_path", required=True, help="plan.json from the plan command.")
@click.option("--source", default="eq44", show_default=True,
              help="eq44, smooth522, discont523, or a coefficient JSON file.")
@click.option("--boundary-samples", "P", type=int, default=200, show_default=True)
@click.option("--noise", type=click.FloatRange(0), default=0.0, show_default=True, help="Relative noise level.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--forward", "engine", type=click.Choice(pipeline.ENGINES), default="sve", show_default=True)
@click.option("--strict", is_flag=True, help="Fail instead of warning on an under-resolved grid.")
@_grid_options
@click.option("-o", "--output", required=True, help="measurements.json path.")
def cmd_simulate(plan_path, source, P, noise, seed, engine, strict, n_r, n_theta, output):
    """Simulate one boundary measurement per planned frequency."""
    plan = _load_plan(plan_path)
    if source in forward.SOURCE_NAMES:
        src = source
    else:
        src = forward.FBSource(_load_expansion(source), name=source)
    cfg = pipeline.ExperimentConfig(M=plan.M, N=plan.N, R0=plan.R0, R=plan.R, source=src, P=P, noise=noise,
                                    seed=seed, forward=engine, strict=strict, n_r=n_r, n_theta=n_theta)

    def go():
        try:
            cfg.validate()
            spec = cfg.make_source()
        except UsageError as exc:
            raise StageError("simulate", exc) from exc
        meas = pipeline.simulate(spec, plan.q_s, cfg)
        if noise > 0:
            meas = pipeline.add_noise(meas, noise, seed)
        return meas

    meas = _run(go)
    try:
        forward.save_measurements(output, meas.values())
    except OSError as exc:
        raise InputError(f"cannot write {output}: {exc.strerror}") from exc


@main.command("reconstruct")
@click.option("--plan", "plan_path", required=True)
@click.option("--measurements", "meas_path", required=True)
@click.option("--rule", type=click.Choice(("trapezoid", "simpson")), default="trapezoid", show_default=True)
@click.option("--symmetrize", is_flag=True, help="Enforce a real-valued source.")
@click.option("--dump-k", type=click.Path(dir_okay=False), default=None, help="Write K blocks and margins as CSV.")
@click.option("--grid-csv", type=click.Path(dir_okay=False), default=None, help="Write the source on the polar grid.")
@_grid_options
@click.option("-o", "--output", required=True, help="coeffs.json path.")
def cmd_reconstruct(plan_path, meas_path, rule, symmetrize, dump_k, grid_csv, n_r, n_theta, output):
    """Recover Fourier-Bessel coefficients from measurements."""
    plan = _load_plan(plan_path)
    meas = {m.k: m for m in _load_measurements(meas_path)}
    exp, K, violations = _run(lambda: pipeline.reconstruct(plan, meas, rule, symmetrize))
    for k, m, top in violations:
        click.echo(f"warning: order {m} at k={_fmt(k)} exceeds bandwidth bound {top}", err=True)
    margins = kmatrix.dominance_report(K)
    click.echo(f"min dominance margin {_fmt(float(margins.min()))}", err=True)
    _write_json(output, exp.to_dict())
    try:
        if dump_k:
            kmatrix.write_csv(dump_k, K)
        if grid_csv:
            grid = fbbasis.PolarGrid(plan.R0, n_r, n_theta)
            fbbasis.write_field_csv(grid_csv, grid, fbbasis.synthesize(exp, grid))
    except OSError as exc:
        raise InputError(f"cannot write output: {exc.strerror}") from exc


@main.command("evaluate")
@click.option("--coeffs", "coeffs_path", default=None, help="Recovered coeffs.json.")
@click.option("--recon-csv", default=None, help="Recovered source as grid CSV (alternative to --coeffs).")
@click.option("--source", default=None, help="True source: a name, or coefficient JSON.")
@click.option("--truth-csv", default=None, help="True source as grid CSV (alternative to --source).")
@click.option("--M", "M", type=click.IntRange(0), default=None, help="Projection space (default: from --coeffs).")
@click.option("--N", "N", type=click.IntRange(1), default=None)
@click.option("--R0", "R0", type=float, default=1.0, show_default=True)
@_grid_options
@click.option("-o", "--output", default="-", help="metrics.json path (stdout by default).")
def cmd_evaluate(coeffs_path, recon_csv, source, truth_csv, M, N, R0, n_r, n_theta, output):
    """Relative L2 errors of a reconstruction."""
    if (coeffs_path is None) == (recon_csv is None):
        raise click.UsageError("give exactly one of --coeffs and --recon-csv")
    if (source is None) == (truth_csv is None):
        raise click.UsageError("give exactly one of --source and --truth-csv")
    recon_exp = _load_expansion(coeffs_path) if coeffs_path else None
    if recon_exp is not None:
        R0 = recon_exp.R0
        M = recon_exp.M if M is None else M
        N = recon_exp.N if N is None else N
    if M is None or N is None:
        raise click.UsageError("--M and --N are required with --recon-csv")
    grid = fbbasis.PolarGrid(R0, n_r, n_theta)

    def go():
        if truth_csv:
            truth = _read_grid_csv(truth_csv, grid)
        elif source in forward.SOURCE_NAMES:
            truth = forward.named_source(source).sample(grid)
        else:
            truth = fbbasis.synthesize(_load_expansion(source), grid)
        recon = fbbasis.synthesize(recon_exp, grid) if recon_exp else _read_grid_csv(recon_csv, grid)
        proj = fbbasis.synthesize(fbbasis.project(truth, grid, M, N), grid)
        return pipeline.error_metrics(truth, recon, proj, grid)

    total, proj, space = _run(go)
    _write_json(output, {"rel_err_total": total, "rel_err_projection": proj, "rel_err_in_space": space,
                         "M": M, "N": N, "R0": R0, "n_r": n_r, "n_theta": n_theta})


@main.command("zeros")
@click.option("--M", "M", type=click.IntRange(0, specfun.MAX_ORDER), default=15, show_default=True)
@click.option("--N", "N", type=click.IntRange(1), default=15, show_default=True)
@click.option("--check", is_flag=True, help="Verify the table invariants; exit 1 on failure.")
@click.option("-o", "--output", default="-")
def cmd_zeros(M, N, check, output):
    """Bessel zeros j_{m,n} as CSV rows (m, n, j)."""
    table = _run(lambda: specfun.zero_table(M, N))
    if check:
        report = table.check_invariants()
        for key, ok in report.items():
            click.echo(f"{key}: {'ok' if ok else 'FAILED'}", err=True)
        if not all(report.values()):
            raise SystemExit(EXIT_IO)
    rows = ((m, n + 1, float(table.zeros[m, n])) for m in range(M + 1) for n in range(N))
    _write_rows(output, ["m", "n", "j"], rows)


@main.command("density")
@click.option("--count", type=click.IntRange(1), default=100, show_default=True)
@click.option("--start", type=float, default=2.4048, show_default=True)
@click.option("--step", type=float, default=0.5769, show_default=True)
@click.option("--delta-j", type=float, default=0.5, show_default=True)
@click.option("-o", "--output", default="-")
def cmd_density(count, start, step, delta_j, output):
    """Estimated vs exact zero counts in windows around alpha."""
    rows = _run(lambda: freqplan.density_sweep(count, start, step, delta_j))
    _write_rows(output, ["alpha", "delta_j", "estimate", "exact"],
                ((d.alpha, d.delta_j, d.estimate, d.exact_count) for d in rows))


@main.command("zero-stats")
@click.option("--max-order", type=click.IntRange(0, specfun.MAX_ORDER), default=50, show_default=True)
@click.option("--x-max", type=float, default=200.0, show_default=True)
@click.option("-o", "--output", default="-")
def cmd_zero_stats(max_order, x_max, output):
    """Gap statistics of the merged zero sequence below x-max."""
    mx, mean, std = _run(lambda: freqplan.zero_gap_stats(max_order, x_max))
    _write_rows(output, ["max_order", "x_max", "max_gap", "mean_gap", "std_gap"],
                [(max_order, float(x_max), mx, mean, std)])


@main.command("paper-demo")
@click.option("--table", "table_id", type=click.Choice([str(t) for t in pipeline.EXPERIMENT_TABLES]), required=True)
@click.option("--forward", "engine", type=click.Choice(pipeline.ENGINES), default="sve", show_default=True)
@click.option("--noise", type=click.FloatRange(0), default=0.2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", default="-")
def cmd_paper_demo(table_id, engine, noise, seed, output):
    """Re-run one of the published experiment tables and print it as CSV."""
    rows = _run(lambda: pipeline.paper_demo(int(table_id), engine, seed=seed, noise=noise))
    text = pipeline.demo_csv(rows)
    if output in (None, "-"):
        click.echo(text, nl=False)
        return
    try:
        with open(output, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {output}: {exc.strerror}") from exc


def run(argv=None):
    """Entry point returning the exit code instead of raising SystemExit."""
    try:
        main.main(args=argv, prog_name="mfisp", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_IO if isinstance(exc, click.UsageError) else exc.exit_code
    except click.Abort:
        return EXIT_IO
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_IO
    return EXIT_OK


def entry():
    sys.exit(run())


if __name__ == "__main__":
    entry()
