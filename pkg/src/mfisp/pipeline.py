"""End-to-end reconstruction: plan, simulate, extract, solve, synthesize.

    1. choose S_{M,N} and the frequency plan
    2. simulate (or load) one measurement per planned frequency
    3. extract u_{+-m,i} = (U, phi_{+-m}) / sigma_m at the frequency assigned to (m, i)
    4. solve K s = u block by block
    5. synthesize the source and compare with the truth
"""

from contextlib import contextmanager
import csv
from dataclasses import asdict, dataclass, field
import io
import logging
import math
import time

import numpy as np

from . import fbbasis, forward, freqplan, kmatrix, sve
from .errors import MfispError, StageError, UsageError

log = logging.getLogger(__name__)

ENGINES = ("sve", "quadrature")
EXPERIMENT_TABLES = {
    2: ("eq44", 3, (0.25, 0.5, 0.75, 0.91, 1.5)),
    3: ("smooth522", 3, (0.25, 0.5, 0.75, 0.91, 1.5)),
    4: ("smooth522", 7, (0.25, 0.61, 0.75, 1.0, 1.5)),
    5: ("discont523", 5, (0.25, 0.7, 0.75, 1.0, 1.5)),
    6: ("discont523", 15, (0.25, 0.5, 0.75, 1.0, 1.5)),
}
METRIC_ROWS = (
    "rel_err_total",
    "rel_err_projection",
    "rel_err_in_space",
    "rel_err_total_noisy",
    "rel_err_in_space_noisy",
)


@contextmanager
def _stage(name):
    try:
        yield
    except StageError:
        raise
    except MfispError as exc:
        raise StageError(name, exc) from exc


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one reconstruction.

    ``delta_k=None`` selects the automatic (gated) value.  Frequencies are
    wavenumbers; the angular frequency is ``c * k``.
    """

    M: int = 3
    N: int = 3
    R0: float = 1.0
    R: float = 1.5
    c: float = 1.0
    delta_k: float = None
    allow_wide: bool = False
    fast_lemma1: bool = False
    source: str = "eq44"
    P: int = 200
    noise: float = 0.0
    seed: int = 0
    forward: str = "sve"
    rule: str = "trapezoid"
    symmetrize: bool = False
    n_r: int = 160
    n_theta: int = 256
    strict: bool = False

    def validate(self):
        if not (0 < self.R0 < self.R):
            raise UsageError(f"need 0 < R0 < R, got R0={self.R0}, R={self.R}")
        if not self.c > 0:
            raise UsageError("wave speed must be positive")
        if self.forward not in ENGINES:
            raise UsageError(f"forward engine must be one of {ENGINES}")
        if self.rule not in sve.RULES:
            raise UsageError(f"quadrature rule must be one of {sve.RULES}")
        if not self.noise >= 0:
            raise UsageError("noise level must be non-negative")
        return self

    def grid(self):
        return fbbasis.PolarGrid(self.R0, self.n_r, self.n_theta)

    def make_source(self):
        src = forward.named_source(self.source) if isinstance(self.source, str) else self.source
        if abs(src.R0 - self.R0) > 1e-12:
            raise UsageError(f"source lives on R0={src.R0}, configuration uses R0={self.R0}")
        return src

    def to_dict(self):
        d = asdict(self)
        if not isinstance(self.source, str):
            d["source"] = getattr(self.source, "name", "custom")
        return d


@dataclass
class ReconstructionReport:
    """Result of :func:`run_reconstruction`.

    ``metrics`` holds relative L2 errors (fractions, not percent):
    rel_err_total = |s - s_r|/|s|, rel_err_projection = |s - s_p|/|s| and
    rel_err_in_space = |s_p - s_r|/|s_p|, plus ``*_noisy`` variants when
    noise was added.
    """

    config: dict
    plan: dict
    recovered: fbbasis.FBExpansion
    recovered_noisy: fbbasis.FBExpansion = None
    projection: fbbasis.FBExpansion = None
    metrics: dict = field(default_factory=dict)
    margins: np.ndarray = None
    bandwidth_violations: list = field(default_factory=list)
    runtime: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "config": self.config,
            "plan": self.plan,
            "metrics": self.metrics,
            "min_margin": None if self.margins is None else float(np.min(self.margins)),
            "margins": None if self.margins is None else self.margins.tolist(),
            "bandwidth_violations": [list(v) for v in self.bandwidth_violations],
            "runtime": self.runtime,
            "recovered": self.recovered.to_dict(),
        }
        if self.recovered_noisy is not None:
            out["recovered_noisy"] = self.recovered_noisy.to_dict()
        if self.projection is not None:
            out["projection"] = self.projection.to_dict()
        return out


def plan_summary(plan):
    return {
        "M": plan.M,
        "N": plan.N,
        "R0": plan.R0,
        "R": plan.R,
        "delta_k": plan.delta_k,
        "lemma1_delta": plan.lemma1,
        "theorem2_gated": plan.theorem2_gated,
        "n_frequencies": int(plan.q_s.size),
        "q_s": plan.q_s.tolist(),
    }


def make_plan(cfg):
    with _stage("plan"):
        return freqplan.build_plan(
            cfg.M, cfg.N, cfg.R0, cfg.R, cfg.delta_k, allow_wide=cfg.allow_wide, fast_lemma1=cfg.fast_lemma1
        )


def simulate(src, frequencies, cfg, grid=None):
    """Clean measurements {k: Measurement} for every frequency."""
    grid = grid or cfg.grid()
    out = {}
    with _stage("simulate"):
        if cfg.forward == "sve" and src.expansion is not None:
            for k in frequencies:
                out[float(k)] = forward.forward_sve(src.expansion, k, cfg.R, cfg.P)
            return out
        values = src.sample(grid)
        for k in frequencies:
            if cfg.forward == "sve":
                out[float(k)] = forward.forward_sve_sampled(values, grid, k, cfg.R, cfg.P)
            else:
                samples = forward.forward_quadrature_fields(values, k, cfg.R, cfg.P, grid, cfg.strict)
                out[float(k)] = forward.Measurement(k, cfg.R, samples)
    return out


def add_noise(measurements, level, seed):
    with _stage("simulate"):
        return {k: forward.add_noise(m, level, seed) for k, m in measurements.items()}


def _lookup(measurements, k):
    if k in measurements:
        return measurements[k]
    keys = np.array(list(measurements))
    j = int(np.argmin(np.abs(keys - k)))
    if abs(keys[j] - k) > 1e-9 * max(1.0, abs(k)):
        raise UsageError(f"no measurement at planned frequency k={k!r}")
    return measurements[float(keys[j])]


def extract_all(plan, measurements, rule="trapezoid"):
    """SVE coefficient vector in packed order plus bandwidth violations.

    Orders above the bandwidth bound at their frequency are still extracted
    (only possible for plans that are not gated) and reported.
    """
    M, N = plan.M, plan.N
    u = np.empty(fbbasis.dimension(M, N), dtype=complex)
    violations = set(plan.bandwidth_violations())
    if violations and plan.theorem2_gated:
        raise UsageError(f"gated plan assigns orders beyond the bandwidth: {sorted(violations)}")
    for m in range(-M, M + 1):
        for i in range(1, N + 1):
            meas = _lookup(measurements, plan.assigned(m, i))
            u[fbbasis.pack_index(m, i, M, N)] = sve.extract_coefficient(meas, m, plan.R0, rule)
    if violations:
        log.warning("%d (frequency, order) pairs lie beyond the bandwidth bound", len(violations))
    return u, sorted(violations)


def reconstruct(plan, measurements, rule="trapezoid", symmetrize=False, K=None):
    """Recover the coefficient expansion from measurements keyed by k."""
    with _stage("reconstruct"):
        u, violations = extract_all(plan, measurements, rule)
        K = K or kmatrix.assemble(plan)
        s = kmatrix.solve(K, u)
        exp = fbbasis.FBExpansion(plan.M, plan.N, plan.R0, s)
        if symmetrize:
            exp = exp.symmetrized()
        return exp, K, violations


def error_metrics(true_field, recon_field, proj_field, grid):
    """(|s - s_r|/|s|, |s - s_p|/|s|, |s_p - s_r|/|s_p|) under grid weights.

    Raises
    ------
    UsageError
        If |s| or |s_p| is zero.
    """
    ns = grid.norm(true_field)
    npj = grid.norm(proj_field)
    if ns == 0 or npj == 0:
        raise UsageError("relative error with a zero reference field")
    return (
        grid.norm(np.asarray(true_field) - recon_field) / ns,
        grid.norm(np.asarray(true_field) - proj_field) / ns,
        grid.norm(np.asarray(proj_field) - recon_field) / npj,
    )


def run_reconstruction(cfg, plan=None, measurements=None):
    """Run the full method for one configuration.

    Parameters
    ----------
    cfg : ExperimentConfig
    plan : FrequencyPlan, optional
        Reuse an existing plan instead of building one from ``cfg``.
    measurements : dict, optional
        {k: Measurement} to use instead of simulating; treated as the data
        to reconstruct from (no extra noise is added).
    """
    cfg.validate()
    times = {}
    t0 = time.perf_counter()
    plan = plan or make_plan(cfg)
    times["plan"] = time.perf_counter() - t0
    grid = cfg.grid()
    with _stage("simulate"):
        src = cfg.make_source()
        true_field = src.sample(grid)
    t0 = time.perf_counter()
    if measurements is None:
        clean = simulate(src, plan.q_s, cfg, grid)
        noisy = add_noise(clean, cfg.noise, cfg.seed) if cfg.noise > 0 else None
    else:
        clean, noisy = dict(measurements), None
    times["simulate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    recovered, K, violations = reconstruct(plan, clean, cfg.rule, cfg.symmetrize)
    recovered_noisy = None
    if noisy is not None:
        recovered_noisy, _, _ = reconstruct(plan, noisy, cfg.rule, cfg.symmetrize, K=K)
    times["reconstruct"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with _stage("reconstruct"):
        projection = fbbasis.project(true_field, grid, cfg.M, cfg.N)
        proj_field = fbbasis.synthesize(projection, grid)
        total, proj, space = error_metrics(true_field, fbbasis.synthesize(recovered, grid), proj_field, grid)
        metrics = {"rel_err_total": total, "rel_err_projection": proj, "rel_err_in_space": space}
        if recovered_noisy is not None:
            total_n, _, space_n = error_metrics(
                true_field, fbbasis.synthesize(recovered_noisy, grid), proj_field, grid
            )
            metrics.update(rel_err_total_noisy=total_n, rel_err_in_space_noisy=space_n)
    times["evaluate"] = time.perf_counter() - t0
    return ReconstructionReport(
        config=cfg.to_dict(),
        plan=plan_summary(plan),
        recovered=recovered,
        recovered_noisy=recovered_noisy,
        projection=projection,
        metrics=metrics,
        margins=kmatrix.dominance_report(K),
        bandwidth_violations=violations,
        runtime=times,
    )


def truncation_diagnostic(cfg, plan=None):
    """Coefficient error caused by the part of the source outside S_{M,N}.

    E = u(full source) - u(projected source), extracted from clean data at
    the planned frequencies.

    Returns
    -------
    dict
        ``entries`` [(m, i, k, E)], ``max_abs``, ``mean_abs`` and ``scale``
        (largest |u| of the projected source).
    """
    cfg.validate()
    plan = plan or make_plan(cfg)
    grid = cfg.grid()
    src = cfg.make_source()
    projection = fbbasis.project(src.sample(grid), grid, cfg.M, cfg.N)
    full = simulate(src, plan.q_s, cfg, grid)
    proj = simulate(forward.FBSource(projection), plan.q_s, cfg, grid)
    with _stage("reconstruct"):
        u_full, _ = extract_all(plan, full, cfg.rule)
        u_proj, _ = extract_all(plan, proj, cfg.rule)
    diff = u_full - u_proj
    ms, ns = fbbasis.orders(cfg.M, cfg.N)
    entries = [(int(m), int(n), plan.assigned(m, n), complex(e)) for m, n, e in zip(ms, ns, diff)]
    mags = np.abs(diff)
    return {
        "entries": entries,
        "max_abs": float(mags.max()),
        "mean_abs": float(mags.mean()),
        "scale": float(np.abs(u_proj).max()),
    }


def paper_demo(table_id, forward_engine="sve", seed=0, noise=0.2, n_r=160, n_theta=256):
    """Reproduce one of the experiment tables.

    Returns
    -------
    list of dict
        One entry per delta_k of the ladder, with ``n_frequencies``,
        ``delta_k`` and the metric fractions.
    """
    if table_id not in EXPERIMENT_TABLES:
        raise UsageError(f"table must be one of {sorted(EXPERIMENT_TABLES)}")
    name, MN, ladder = EXPERIMENT_TABLES[table_id]
    rows = []
    for dk in ladder:
        cfg = ExperimentConfig(
            M=MN, N=MN, delta_k=dk, allow_wide=True, source=name, noise=noise, seed=seed,
            forward=forward_engine, n_r=n_r, n_theta=n_theta,
        )
        rep = run_reconstruction(cfg)
        rows.append({"delta_k": dk, "n_frequencies": rep.plan["n_frequencies"], **rep.metrics})
    return rows


def demo_csv(rows):
    """Table layout: a header row of |Q_s|, then delta_k and one row per metric (percent)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["|Q_s|"] + [r["n_frequencies"] for r in rows])
    w.writerow(["delta_k"] + [f"{r['delta_k']:.17g}" for r in rows])
    for key in METRIC_ROWS:
        if all(key in r for r in rows):
            w.writerow([key + "_percent"] + [f"{100.0 * r[key]:.17g}" for r in rows])
    return buf.getvalue()
