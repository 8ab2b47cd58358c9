"""Finite-n analysis of the Gaussian-to-unitary coupling.

Four pieces live here:

* concentration events for Gaussian panels (near-orthogonal column pairs,
  column norms close to sqrt(n), bounded corner entries) and their Monte
  Carlo rates;
* the explicit constant recurrences that bound the scaled corner distance
  column by column, together with a computable dimension threshold n0 above
  which the whole chain of bounds is guaranteed on the good event;
* a numerical certificate that replays every inequality of that chain on a
  concrete panel, recording exact left/right values;
* the convergence-in-probability experiment: the probability that the summed
  corner distance stays below a given epsilon, estimated on a grid of
  dimensions with Wilson confidence intervals.

All Monte Carlo helpers derive one substream per (dimension, trial) cell, so
results are reproducible and independent of worker count and scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .haar import CoupledSample, RankDeficientError, gram_schmidt_columns
from .streams import (
    RandomStream,
    sample_gaussian_matrix,
    vector_inner,
    vector_norm_sq,
)

_WILSON_Z = 1.959963984540054  # two-sided 95% normal quantile


def radius_for_delta(delta: float) -> float:
    """Smallest R with P(|G| < R) >= 1 - delta for a standard complex Gaussian.

    |G|^2 is exponential with mean one, so P(|G| < R) = 1 - exp(-R^2) and the
    smallest admissible bound is sqrt(log(1/delta)).
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0,1)")
    return math.sqrt(math.log(1.0 / delta))


@dataclass
class EventParams:
    """Parameters of the concentration events for an n x k Gaussian panel.

    `radius` defaults to radius_for_delta(delta); override only when probing
    the events away from the canonical entry bound.
    """

    k: int
    delta: float
    n: int
    radius: float | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0,1)")
        if self.n < self.k:
            raise ValueError(f"n must be >= k, got n={self.n}, k={self.k}")
        if self.radius is None:
            self.radius = radius_for_delta(self.delta)
        elif self.radius <= 0.0:
            raise ValueError("radius must be positive")

    @property
    def pair_threshold(self) -> float:
        """Bound on |<G_j, G_ell>| for distinct columns: sqrt(n/delta)."""
        return math.sqrt(self.n / self.delta)

    @property
    def norm_threshold(self) -> float:
        """Bound on |norm^2/n - 1| per column: sqrt(2/(n*delta))."""
        return math.sqrt(2.0 / (self.n * self.delta))


@dataclass(frozen=True)
class EventReport:
    """Truth values of the concentration events for one panel.

    pair_ok[j, ell] covers the ordered pair (j, ell), j != ell (the diagonal
    is vacuously True); norm_ok[j] the j-th column norm; entry_ok[i, j] the
    top k x k corner entries.  all_ok is the conjunction of everything.
    """

    pair_ok: np.ndarray
    norm_ok: np.ndarray
    entry_ok: np.ndarray
    thresholds: tuple[float, float, float]
    all_ok: bool


def evaluate_events(g: np.ndarray, params: EventParams) -> EventReport:
    """Evaluate the concentration events on an n x k panel."""
    g = np.asarray(g)
    if g.ndim != 2 or g.shape != (params.n, params.k):
        raise ValueError(
            f"panel shape {g.shape} does not match params (n={params.n}, k={params.k})"
        )
    k = params.k
    a_thr = params.pair_threshold
    b_thr = params.norm_threshold
    pair_ok = np.ones((k, k), dtype=bool)
    for j in range(k):
        for ell in range(j + 1, k):
            ok = abs(vector_inner(g[:, j], g[:, ell])) < a_thr
            pair_ok[j, ell] = pair_ok[ell, j] = ok
    norm_ok = np.array(
        [abs(vector_norm_sq(g[:, j]) / params.n - 1.0) < b_thr for j in range(k)]
    )
    entry_ok = np.abs(g[:k, :k]) < params.radius
    all_ok = bool(pair_ok.all() and norm_ok.all() and entry_ok.all())
    return EventReport(
        pair_ok=pair_ok,
        norm_ok=norm_ok,
        entry_ok=entry_ok,
        thresholds=(a_thr, b_thr, float(params.radius)),
        all_ok=all_ok,
    )


def coupling_distance(sample: CoupledSample) -> float:
    """Summed corner distance sum_{i,j<=k} |sqrt(n) U_ij - G_ij|."""
    k = sample.k
    corner = math.sqrt(sample.n) * sample.unitary[:k, :] - sample.gaussian[:k, :]
    return float(np.sum(np.abs(corner)))


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion.

    Chosen over the normal approximation for valid coverage near p = 0 or 1,
    where the convergence experiment spends most of its time.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    z2 = _WILSON_Z * _WILSON_Z
    p = successes / trials
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = (
        _WILSON_Z
        * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
        / denom
    )
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class CurvePoint:
    n: int
    trials: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float
    rank_deficient: int = 0


@dataclass(frozen=True)
class ConvergenceCurve:
    """Estimated P(corner distance < eps) over a grid of dimensions."""

    k: int
    eps: float
    points: tuple[CurvePoint, ...]


def _run_cells(fn, cells, workers: int):
    """Map fn over cells, optionally in a process pool.

    Each cell is self-contained (seed + path), so the output is independent
    of worker count; pool results come back in input order.
    """
    if workers <= 1:
        return [fn(cell) for cell in cells]
    chunk = max(1, len(cells) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells, chunksize=chunk))


def _coupling_cell(cell) -> int:
    master_seed, path, n, k, eps = cell
    stream = RandomStream(master_seed, path)
    g = sample_gaussian_matrix(stream, n, k)
    try:
        u = gram_schmidt_columns(g, k)
    except RankDeficientError:
        return -1
    sample = CoupledSample(n=n, k=k, gaussian=g, unitary=u)
    return 1 if coupling_distance(sample) < eps else 0


def estimate_coupling_probability(
    stream: RandomStream,
    k: int,
    eps: float,
    ns,
    trials: int,
    workers: int = 1,
) -> ConvergenceCurve:
    """Estimate P(corner distance < eps) at each dimension in ns.

    Each (n, trial) cell runs on the substream derived with labels (n, trial),
    so the curve is reproducible from the master stream alone.  Rank-deficient
    draws are counted per point (as non-successes), never silently dropped.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    if k < 1:
        raise ValueError("k must be >= 1")
    ns = [int(n) for n in ns]
    if any(n < k for n in ns):
        raise ValueError("every dimension must be >= k")
    points = []
    for n in ns:
        cells = [
            (stream.master_seed, stream.path + (n, t), n, k, eps)
            for t in range(trials)
        ]
        outcomes = _run_cells(_coupling_cell, cells, workers)
        successes = sum(1 for o in outcomes if o == 1)
        bad = sum(1 for o in outcomes if o == -1)
        lo, hi = wilson_interval(successes, trials)
        points.append(
            CurvePoint(
                n=n,
                trials=trials,
                successes=successes,
                p_hat=successes / trials,
                ci_low=lo,
                ci_high=hi,
                rank_deficient=bad,
            )
        )
    return ConvergenceCurve(k=k, eps=eps, points=tuple(points))


# ---------------------------------------------------------------------------
# Constant ledger and sufficiency threshold
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantLedger:
    """Explicit constants of the corner-distance estimate chain.

    All dictionaries are 1-indexed by column.  On the good event, for
    n >= n0, the chain guarantees column by column:

    * ``cross_inner[ell] * sqrt(n)`` bounds |<G_j, sqrt(n) U_ell>| for ell < j;
    * ``proj_entry[j] / sqrt(n)``    bounds each top-k entry of the projection
      of G_j onto the earlier orthonormal columns (j >= 2);
    * ``proj_norm_sq[j]``            bounds the squared norm of that projection;
    * ``norm_ratio[j] / sqrt(n)``    bounds |sqrt(n)/||G_j - proj|| - 1|
      (for j = 1 the sharper 2/sqrt(delta*n) applies);
    * ``eps / k^2``                  bounds each scaled corner entry distance;
    * ``col_dist[j]``                bounds ||sqrt(n) U_j - G_j||.

    Recurrences, evaluated in order j = 1..k with sd = sqrt(delta):

        col_dist[1]     = 4 / sd
        cross_inner[j]  = 2 * col_dist[j] + 1 / sd
        proj_entry[j]   = (sum of cross_inner[< j]) * (eps/k^2 + radius)
        proj_norm_sq[j] = sum of cross_inner[< j]^2
        norm_ratio[j]   = 2 * sqrt(2/delta) + 2 * sqrt(proj_norm_sq[j])
        col_dist[j]     = 2 * norm_ratio[j] + 2 * sqrt(proj_norm_sq[j])

    with proj_norm_sq[1] = 0 (empty sum).
    """

    k: int
    delta: float
    eps: float
    radius: float
    col_dist: dict[int, float]
    cross_inner: dict[int, float]
    proj_entry: dict[int, float]
    proj_norm_sq: dict[int, float]
    norm_ratio: dict[int, float]
    n0: int = 0
    n0_conditions: dict[str, int] = field(default_factory=dict)


def build_constant_ledger(k: int, delta: float, eps: float) -> ConstantLedger:
    """Evaluate the constant recurrences and the sufficiency threshold n0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0,1)")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    radius = radius_for_delta(delta)
    sd = math.sqrt(delta)
    eps_cell = eps / (k * k)

    col_dist = {1: 4.0 / sd}
    cross_inner = {1: 2.0 * col_dist[1] + 1.0 / sd}
    proj_entry: dict[int, float] = {}
    proj_norm_sq: dict[int, float] = {1: 0.0}
    norm_ratio = {1: 2.0 * math.sqrt(2.0 / delta)}
    for j in range(2, k + 1):
        prev = [cross_inner[ell] for ell in range(1, j)]
        proj_entry[j] = sum(prev) * (eps_cell + radius)
        proj_norm_sq[j] = sum(c * c for c in prev)
        norm_ratio[j] = 2.0 * math.sqrt(2.0 / delta) + 2.0 * math.sqrt(proj_norm_sq[j])
        col_dist[j] = 2.0 * norm_ratio[j] + 2.0 * math.sqrt(proj_norm_sq[j])
        cross_inner[j] = 2.0 * col_dist[j] + 1.0 / sd

    partial = ConstantLedger(
        k=k,
        delta=delta,
        eps=eps,
        radius=radius,
        col_dist=col_dist,
        cross_inner=cross_inner,
        proj_entry=proj_entry,
        proj_norm_sq=proj_norm_sq,
        norm_ratio=norm_ratio,
    )
    conditions = sufficiency_conditions(partial)
    n0 = max(conditions.values())
    return ConstantLedger(
        k=k,
        delta=delta,
        eps=eps,
        radius=radius,
        col_dist=col_dist,
        cross_inner=cross_inner,
        proj_entry=proj_entry,
        proj_norm_sq=proj_norm_sq,
        norm_ratio=norm_ratio,
        n0=n0,
        n0_conditions=conditions,
    )


def sufficiency_conditions(ledger: ConstantLedger) -> dict[str, int]:
    """Per-condition dimension thresholds whose maximum is n0.

    Every "large enough n" requirement of the estimate chain, made explicit:

    * ``norm_dev_half``          sqrt(2/(n*delta)) <= 1/2, which keeps every
      column norm within a factor 2 of sqrt(n) and validates the first-column
      ratio bound;
    * ``base_entry``             (2/sqrt(delta*n)) * radius < eps/k^2, the
      first-column entry bound;
    * ``entry_bound[j]``         (norm_ratio[j]*radius + 2*proj_entry[j])
      / sqrt(n) < eps/k^2, the j-th column entry bound (j >= 2);
    * ``ratio_small[j]``         norm_ratio[j]/sqrt(n) < 1, which caps the
      normalization factor at 2;
    * ``expansion_domain[j]``    sqrt(2/delta) + sqrt(proj_norm_sq[j])
      <= sqrt(n)/2, the x <= 1/2 domain on which 1/(1-x) <= 1+2x holds.
    """
    delta, eps, radius, k = ledger.delta, ledger.eps, ledger.radius, ledger.k
    eps_cell = eps / (k * k)
    conditions = {
        "norm_dev_half": math.ceil(8.0 / delta),
        "base_entry": math.floor((2.0 * radius / (eps_cell * math.sqrt(delta))) ** 2)
        + 1,
    }
    for j in range(2, k + 1):
        lhs = ledger.norm_ratio[j] * radius + 2.0 * ledger.proj_entry[j]
        conditions[f"entry_bound[{j}]"] = math.floor((lhs / eps_cell) ** 2) + 1
        conditions[f"ratio_small[{j}]"] = math.floor(ledger.norm_ratio[j] ** 2) + 1
        x_coeff = math.sqrt(2.0 / delta) + math.sqrt(ledger.proj_norm_sq[j])
        conditions[f"expansion_domain[{j}]"] = math.ceil(4.0 * x_coeff * x_coeff)
    return conditions


def sufficiency_threshold(ledger: ConstantLedger) -> int:
    """Smallest n0 such that every chain condition holds for all n >= n0."""
    return max(sufficiency_conditions(ledger).values())


# ---------------------------------------------------------------------------
# Certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CertificateCheck:
    name: str
    lhs: float
    rhs: float
    passed: bool


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of replaying the estimate chain on one concrete panel.

    When `in_good_event` is True and n >= n0, every check passes; reports
    for panels outside the good event are diagnostic only.
    """

    n: int
    k: int
    in_good_event: bool
    below_n0: bool
    checks: tuple[CertificateCheck, ...]
    first_failure: str | None

    @property
    def all_passed(self) -> bool:
        return self.first_failure is None

    def failures(self) -> list[CertificateCheck]:
        return [c for c in self.checks if not c.passed]


def verify_certificate(g: np.ndarray, ledger: ConstantLedger) -> CertificateReport:
    """Check every strict inequality of the estimate chain on an n x k panel.

    Orthonormalizes the panel, then walks the chain column by column in the
    induction order -- cross-inner bounds, projection bounds, norm-ratio
    bound, entry distances, column distance -- recording exact lhs/rhs values
    for each check.  All inequalities are strict with no added slack: the
    events and constants already contain it.
    """
    g = np.asarray(g, dtype=np.complex128)
    n, k = g.shape
    if k != ledger.k:
        raise ValueError(f"panel has {k} columns but ledger was built for k={ledger.k}")
    params = EventParams(k=k, delta=ledger.delta, n=n, radius=ledger.radius)
    in_good = evaluate_events(g, params).all_ok
    u = gram_schmidt_columns(g, k)

    sq = math.sqrt(n)
    eps_cell = ledger.eps / (k * k)
    checks: list[CertificateCheck] = []

    def add(name: str, lhs: float, rhs: float) -> None:
        lhs = float(lhs)
        rhs = float(rhs)
        checks.append(CertificateCheck(name=name, lhs=lhs, rhs=rhs, passed=lhs < rhs))

    for j in range(1, k + 1):
        gj = g[:, j - 1]
        proj = np.zeros(n, dtype=np.complex128)
        for ell in range(j - 1):
            proj += vector_inner(u[:, ell], gj) * u[:, ell]
        resid_norm = math.sqrt(vector_norm_sq(gj - proj))
        ratio_dev = abs(sq / resid_norm - 1.0)
        if j == 1:
            add("norm_ratio[1]", ratio_dev, 2.0 / math.sqrt(ledger.delta * n))
        else:
            for ell in range(1, j):
                add(
                    f"cross_inner[{j},{ell}]",
                    sq * abs(vector_inner(gj, u[:, ell - 1])),
                    ledger.cross_inner[ell] * sq,
                )
            for i in range(1, k + 1):
                add(f"proj_entry[{j},{i}]", abs(proj[i - 1]), ledger.proj_entry[j] / sq)
            add(f"proj_norm_sq[{j}]", vector_norm_sq(proj), ledger.proj_norm_sq[j])
            add(f"norm_ratio[{j}]", ratio_dev, ledger.norm_ratio[j] / sq)
        for i in range(1, k + 1):
            add(
                f"entry_dist[{j},{i}]",
                abs(sq * u[i - 1, j - 1] - g[i - 1, j - 1]),
                eps_cell,
            )
        add(
            f"col_dist[{j}]",
            math.sqrt(vector_norm_sq(sq * u[:, j - 1] - gj)),
            ledger.col_dist[j],
        )

    first = next((c.name for c in checks if not c.passed), None)
    return CertificateReport(
        n=n,
        k=k,
        in_good_event=in_good,
        below_n0=bool(ledger.n0 and n < ledger.n0),
        checks=tuple(checks),
        first_failure=first,
    )


@dataclass(frozen=True)
class CertificateTrial:
    trial: int
    in_good_event: bool
    all_passed: bool
    entry_dist_failures: int
    first_failure: str | None
    rank_deficient: bool = False


def _certificate_cell(cell) -> CertificateTrial:
    master_seed, path, n, ledger, trial = cell
    stream = RandomStream(master_seed, path)
    g = sample_gaussian_matrix(stream, n, ledger.k)
    try:
        report = verify_certificate(g, ledger)
    except RankDeficientError:
        return CertificateTrial(
            trial=trial,
            in_good_event=False,
            all_passed=False,
            entry_dist_failures=0,
            first_failure="rank-deficient",
            rank_deficient=True,
        )
    entry_failures = sum(
        1 for c in report.checks if c.name.startswith("entry_dist") and not c.passed
    )
    return CertificateTrial(
        trial=trial,
        in_good_event=report.in_good_event,
        all_passed=report.all_passed,
        entry_dist_failures=entry_failures,
        first_failure=report.first_failure,
    )


def run_certificate_trials(
    stream: RandomStream,
    ledger: ConstantLedger,
    n: int,
    trials: int,
    workers: int = 1,
) -> tuple[CertificateTrial, ...]:
    """Verify the certificate on independent seeded panels at dimension n.

    Substreams are derived with labels (n, trial); the contract is zero
    failures among trials that land in the good event once n >= ledger.n0.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n < ledger.k:
        raise ValueError("n must be >= k")
    cells = [
        (stream.master_seed, stream.path + (n, t), n, ledger, t)
        for t in range(trials)
    ]
    return tuple(_run_cells(_certificate_cell, cells, workers))


# ---------------------------------------------------------------------------
# Event rates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventRates:
    """Empirical event frequencies with the bounds they are measured against.

    The per-column-norm Chebyshev computation actually gives failure
    probability <= delta/2 (the norm-squared summands have unit variance),
    so `bounds` carries both the asserted 1-delta floor and the sharper
    1-delta/2 value; assertions elsewhere use only the weaker floor.
    """

    n: int
    k: int
    delta: float
    radius: float
    trials: int
    pair_rate: np.ndarray
    norm_rate: np.ndarray
    entry_rate: np.ndarray
    joint_rate: float
    bounds: dict[str, float]


def _event_cell(cell):
    master_seed, path, params = cell
    stream = RandomStream(master_seed, path)
    g = sample_gaussian_matrix(stream, params.n, params.k)
    report = evaluate_events(g, params)
    return report.pair_ok, report.norm_ok, report.entry_ok, report.all_ok


def estimate_event_rates(
    stream: RandomStream,
    params: EventParams,
    trials: int,
    workers: int = 1,
) -> EventRates:
    """Monte Carlo frequencies of the concentration events, one substream per trial."""
    if trials < 100:
        raise ValueError("trials must be >= 100")
    k = params.k
    cells = [
        (stream.master_seed, stream.path + (t,), params) for t in range(trials)
    ]
    outcomes = _run_cells(_event_cell, cells, workers)
    pair_counts = np.zeros((k, k), dtype=np.int64)
    norm_counts = np.zeros(k, dtype=np.int64)
    entry_counts = np.zeros((k, k), dtype=np.int64)
    joint = 0
    for pair_ok, norm_ok, entry_ok, all_ok in outcomes:
        pair_counts += pair_ok
        norm_counts += norm_ok
        entry_counts += entry_ok
        joint += all_ok
    delta = params.delta
    bounds = {
        "pair_lower": 1.0 - delta,
        "norm_lower": 1.0 - delta,
        "norm_lower_sharp": 1.0 - delta / 2.0,
        "entry_exact": 1.0 - delta,
        "joint_lower": 1.0 - 2.0 * k * k * delta,
    }
    return EventRates(
        n=params.n,
        k=k,
        delta=delta,
        radius=float(params.radius),
        trials=trials,
        pair_rate=pair_counts / trials,
        norm_rate=norm_counts / trials,
        entry_rate=entry_counts / trials,
        joint_rate=joint / trials,
        bounds=bounds,
    )
