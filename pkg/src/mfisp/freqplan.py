"""Frequency planning: admissible perturbation, minimal subcover, assignment.

The measurement frequencies k_{m,n} = j_{m,n}/R0 (m = 0..M, n = 1..N) are
replaced by a smaller set Q_s such that each k_{m,n} lies strictly within
delta_k of some member.  delta_k comes from a Gershgorin-type inequality
that guarantees strict diagonal dominance of the change-of-basis matrix,
capped by 1/R0 so that every extracted order stays inside the bandwidth of
the forward operator.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from . import specfun, sve
from .errors import PlanError, UsageError

log = logging.getLogger(__name__)

BISECT_TOL = 1e-6
SCAN_STEP = 1e-3
STAB_MARGIN = 1e-9
LOWER_ENDPOINT_CONVENTION = "k_{m,0} = 0"


def full_frequency_set(M, N, R0):
    """k_{m,n} = j_{m,n}/R0 as an (M+1, N) array (row m, column n-1)."""
    if int(M) != M or int(N) != N or M < 0 or N < 1:
        raise UsageError(f"invalid (M, N) = ({M}, {N})")
    if not R0 > 0:
        raise UsageError("R0 must be positive")
    return specfun.zero_table(int(M), int(N)).zeros / float(R0)


def _mu(m, R0):
    if m >= 1:
        return R0 / math.pi
    return R0 / (specfun.bessel_zero(0, 2) - specfun.bessel_zero(0, 1))


def lemma1_holds(k_row, i, delta, mu):
    """Vectorised check of the dominance inequality on both sides k_i +- delta.

    Parameters
    ----------
    k_row : ndarray
        k_{m,1..N} for one order m.
    i : int
        Zero-based row index.
    delta : ndarray
        Trial perturbations (> 0).
    mu : float
        Spacing correction for order m.

    Returns
    -------
    ndarray of bool
        True where the inequality holds and k_i +- delta stays strictly
        inside (k_{i-1}, k_{i+1}) with k_0 = 0 and k_{N+1} = inf.
    """
    delta = np.asarray(delta, dtype=float)
    N = k_row.size
    ki = k_row[i]
    lo = k_row[i - 1] if i > 0 else 0.0
    hi = k_row[i + 1] if i < N - 1 else np.inf
    ok = np.ones(delta.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for sgn in (1.0, -1.0):
            x = ki + sgn * delta
            inside = (x > lo) & (x < hi)
            x2 = x * x
            lhs = np.abs(ki / (x2 - ki * ki))
            rhs = np.zeros_like(x)
            if i > 0:
                a = k_row[i - 1]
                rhs += 0.5 * mu * np.log((x2 - k_row[0] ** 2) / (x2 - a * a)) + a / (x2 - a * a)
            if i < N - 1:
                b = k_row[i + 1]
                rhs += 0.5 * mu * np.log((k_row[-1] ** 2 - x2) / (b * b - x2)) + b / (b * b - x2)
            ok &= inside & (lhs >= rhs)
    return ok


def _index_delta(k_row, i, mu):
    ki = k_row[i]
    lo = k_row[i - 1] if i > 0 else 0.0
    hi = k_row[i + 1] if i < k_row.size - 1 else np.inf
    cap = min(ki - lo, hi - ki)
    step = min(SCAN_STEP, cap / 64.0)
    grid = np.arange(1, int(cap / step) + 2) * step
    ok = lemma1_holds(k_row, i, grid, mu)
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return cap
    first = int(bad[0])
    good = grid[first - 1] if first > 0 else 0.0
    badv = grid[first]
    while badv - good > BISECT_TOL:
        mid = 0.5 * (good + badv)
        if lemma1_holds(k_row, i, np.array([mid]), mu)[0]:
            good = mid
        else:
            badv = mid
    return good


def lemma1_delta(M, N, R0, fast=False):
    """Admissible perturbation delta_k and the per-index values.

    Parameters
    ----------
    M, N : int
    R0 : float
    fast : bool
        Evaluate only (m, i) = (0, 1), which empirically carries the minimum.

    Returns
    -------
    delta_k : float
    per_index : dict
        {(m, i): delta_{m,i}} for every evaluated index.
    """
    q = full_frequency_set(M, N, R0)
    per = {}
    for m in [0] if fast else range(M + 1):
        mu = _mu(m, R0)
        for i in [0] if fast else range(N):
            per[(m, i + 1)] = _index_delta(q[m], i, mu)
    return min(per.values()), per


def minimal_subcover(q_values, delta_k):
    """Fewest points hitting every open interval (k - delta_k, k + delta_k).

    Greedy stabbing: intervals share a width, so sorting by centre sorts by
    right endpoint; each stab sits just inside the right endpoint and is
    clipped to max(k) so the points stay within [min k, max k].
    """
    ks = np.sort(np.asarray(q_values, dtype=float).ravel())
    if ks.size == 0:
        raise UsageError("empty frequency set")
    if not delta_k > 0:
        raise UsageError("delta_k must be positive")
    top = ks[-1]
    points = []
    for k in ks:
        if points and abs(points[-1] - k) < delta_k:
            continue
        # the margin must survive rounding when delta_k is near the ulp of k
        margin = max(STAB_MARGIN * delta_k, 8.0 * np.spacing(k))
        points.append(min(max(k + delta_k - margin, k), top))
    return np.array(points)


def assign_frequencies(q_mn, q_s, delta_k=None):
    """Nearest element of q_s for every k_{m,n}; ties go to the smaller one.

    Raises
    ------
    PlanError
        If ``delta_k`` is given and some k_{m,n} is not strictly within it.
    """
    q = np.asarray(q_mn, dtype=float)
    s = np.sort(np.asarray(q_s, dtype=float))
    pos = np.clip(np.searchsorted(s, q), 1, max(s.size - 1, 1))
    if s.size == 1:
        out = np.full(q.shape, s[0])
    else:
        left, right = s[pos - 1], s[pos]
        out = np.where(q - left <= right - q, left, right)
    if delta_k is not None:
        gap = np.abs(out - q)
        if np.any(gap >= delta_k):
            raise PlanError(f"cover violated: max |k~ - k| = {gap.max():.6g} >= delta_k = {delta_k:.6g}")
    return out


@dataclass(frozen=True)
class FrequencyPlan:
    """Reduced measurement frequencies for the space S_{M,N}.

    Attributes
    ----------
    M, N : int
    R0, R : float
    delta_k : float
    q_mn : ndarray, shape (M+1, N)
        Scaled zeros k_{m,n}.
    q_s : ndarray
        Strictly increasing measurement frequencies.
    assignment : ndarray, shape (M+1, N)
        Frequency from ``q_s`` used for row (m, n).
    theorem2_gated : bool
        True when delta_k <= 1/R0.
    lemma1 : float or None
        Admissible delta from the dominance inequality, if computed.
    provenance : dict
    """

    M: int
    N: int
    R0: float
    R: float
    delta_k: float
    q_mn: np.ndarray = field(repr=False)
    q_s: np.ndarray
    assignment: np.ndarray = field(repr=False)
    theorem2_gated: bool
    lemma1: float = None
    provenance: dict = field(default_factory=dict, repr=False)

    def assigned(self, m, n):
        return float(self.assignment[abs(int(m)), int(n) - 1])

    def indices_at(self, k):
        """(m, n) pairs (m >= 0) whose assigned frequency is ``k``."""
        ms, ns = np.nonzero(self.assignment == k)
        return [(int(a), int(b) + 1) for a, b in zip(ms, ns)]

    def bandwidth_violations(self):
        """[(k_j, m, M_minus)] for assigned orders above the bandwidth bound."""
        out = []
        for k in self.q_s:
            top = sve.bandwidth_lower(k, self.R0)
            for m, _ in self.indices_at(k):
                if m > top:
                    out.append((float(k), m, top))
        return sorted(set(out))

    def validate(self):
        """Raise PlanError unless every stored invariant holds."""
        if not np.all(np.diff(self.q_s) > 0):
            raise PlanError("q_s is not strictly increasing")
        if self.q_s.min() < self.q_mn.min() or self.q_s.max() > self.q_mn.max():
            raise PlanError("q_s leaves [min k_mn, max k_mn]")
        if not np.all(np.isin(self.assignment, self.q_s)):
            raise PlanError("assignment uses frequencies outside q_s")
        gap = np.abs(self.assignment - self.q_mn)
        if np.any(gap >= self.delta_k):
            raise PlanError(f"assignment perturbs a frequency by {gap.max():.6g} >= delta_k")
        if self.theorem2_gated and self.delta_k > 1.0 / self.R0:
            raise PlanError("gated plan with delta_k above 1/R0")
        return self

    def to_dict(self):
        return {
            "M": self.M,
            "N": self.N,
            "R0": self.R0,
            "R": self.R,
            "delta_k": self.delta_k,
            "theorem2_gated": bool(self.theorem2_gated),
            "lemma1_delta": self.lemma1,
            "q_mn": self.q_mn.tolist(),
            "q_s": self.q_s.tolist(),
            "assignment": self.assignment.tolist(),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            plan = cls(
                M=int(d["M"]),
                N=int(d["N"]),
                R0=float(d["R0"]),
                R=float(d["R"]),
                delta_k=float(d["delta_k"]),
                q_mn=np.array(d["q_mn"], dtype=float),
                q_s=np.array(d["q_s"], dtype=float),
                assignment=np.array(d["assignment"], dtype=float),
                theorem2_gated=bool(d["theorem2_gated"]),
                lemma1=None if d.get("lemma1_delta") is None else float(d["lemma1_delta"]),
                provenance=dict(d.get("provenance", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PlanError(f"malformed plan document: {exc}") from exc
        if plan.q_mn.shape != (plan.M + 1, plan.N) or plan.assignment.shape != plan.q_mn.shape:
            raise PlanError("plan arrays do not match (M, N)")
        return plan.validate()


def build_plan(M, N, R0=1.0, R=1.5, delta_k=None, allow_wide=False, fast_lemma1=False):
    """Plan the measurement frequencies for S_{M,N}.

    Parameters
    ----------
    delta_k : float or None
        None selects min(dominance bound, 1/R0).
    allow_wide : bool
        Permit an explicit delta_k above 1/R0 (the plan is then not gated).
    fast_lemma1 : bool
        Use only index (0, 1) for the dominance bound.

    Raises
    ------
    PlanError
        For delta_k > 1/R0 without ``allow_wide``, or a non-positive delta_k.
    """
    if not (0 < R0 < R):
        raise PlanError(f"need 0 < R0 < R, got R0={R0}, R={R}")
    q_mn = full_frequency_set(M, N, R0)
    lemma, per = lemma1_delta(M, N, R0, fast=fast_lemma1)
    if delta_k is None:
        delta = min(lemma, 1.0 / R0)
    else:
        delta = float(delta_k)
        if not delta > 0:
            raise PlanError("delta_k must be positive")
        if delta > 1.0 / R0 and not allow_wide:
            raise PlanError(f"delta_k={delta} exceeds 1/R0={1.0 / R0}; pass allow_wide to override")
        if delta > lemma:
            log.warning("delta_k=%g exceeds the dominance bound %g; K may be singular", delta, lemma)
    q_s = minimal_subcover(q_mn, delta)
    assignment = assign_frequencies(q_mn, q_s, delta)
    provenance = {
        "zero_table_sha256": specfun.zero_table(M, N).digest(),
        "lemma1_per_index": {f"{m},{i}": v for (m, i), v in sorted(per.items())},
        "lemma1_fast": bool(fast_lemma1),
        "lower_endpoint": LOWER_ENDPOINT_CONVENTION,
        "delta_source": "auto" if delta_k is None else "explicit",
    }
    plan = FrequencyPlan(
        M=int(M),
        N=int(N),
        R0=float(R0),
        R=float(R),
        delta_k=delta,
        q_mn=q_mn,
        q_s=q_s,
        assignment=assignment,
        theorem2_gated=bool(delta <= 1.0 / R0),
        lemma1=lemma,
        provenance=provenance,
    )
    return plan.validate()


def exact_plan(M, N, R0=1.0, R=1.5):
    """Plan measuring at every k_{m,n} (no reduction)."""
    q_mn = full_frequency_set(M, N, R0)
    q_s = np.unique(q_mn)
    gaps = np.diff(q_s)
    delta = 0.5 * float(gaps.min()) if gaps.size else 1.0 / R0
    delta = min(delta, 1.0 / R0)
    return FrequencyPlan(
        int(M), int(N), float(R0), float(R), delta, q_mn, q_s, q_mn.copy(), True, None,
        {"delta_source": "exact"},
    ).validate()


# --------------------------------------------------------------------------
# zero-distribution diagnostics


@dataclass(frozen=True)
class DensityEstimate:
    """Estimated and exact number of zeros with |j_{m,n} - alpha| < delta_j."""

    alpha: float
    delta_j: float
    estimate: float
    exact_count: int


def density_order_bound(alpha):
    """floor(sqrt(3 alpha^2 + 16)/2 - 3), clamped at 0."""
    return max(int(math.floor(0.5 * math.sqrt(3.0 * alpha * alpha + 16.0) - 3.0)), 0)


def density_estimate(alpha, delta_j):
    """Zero count near alpha: estimate M * 2 delta_j / pi against the table.

    Examples
    --------
    >>> d = density_estimate(10.0, 1.6)
    >>> round(d.estimate, 4)
    5.093
    """
    if not alpha > 0:
        raise UsageError("alpha must be positive")
    if not delta_j > 0:
        raise UsageError("delta_j must be positive")
    estimate = density_order_bound(alpha) * 2.0 * delta_j / math.pi
    top = alpha + delta_j
    zs = specfun.zeros_below(int(top) + 1, top)
    count = sum(int(np.count_nonzero(np.abs(z - alpha) < delta_j)) for z in zs)
    return DensityEstimate(float(alpha), float(delta_j), estimate, count)


def density_sweep(count=100, start=2.4048, step=0.5769, delta_j=0.5):
    """Density estimates at alpha_i = start + step * i, i = 0..count-1."""
    return [density_estimate(start + step * i, delta_j) for i in range(count)]


def merged_zeros(max_order, x_max):
    zs = specfun.zeros_below(max_order, x_max)
    return np.sort(np.concatenate(zs)) if zs else np.empty(0)


def zero_gap_stats(max_order=50, x_max=200.0):
    """(max, mean, std) of gaps between consecutive merged zeros below x_max.

    The default range is a reduced version of the large-scale survey
    (orders up to 2000, x up to 3000), which exceeds the supported order
    range; ``max_order`` can be raised to 400.
    """
    z = merged_zeros(max_order, x_max)
    if z.size < 2:
        raise UsageError("fewer than two zeros in range")
    gaps = np.diff(z)
    return float(gaps.max()), float(gaps.mean()), float(gaps.std())
