"""Seeded Monte Carlo harness: event probabilities, decay scans, cross-checks.

Per-trial seeds are derived from (master_seed, trial_index), so every report
is reproducible bit for bit and independent of execution order.  Wilson
intervals are used throughout (success counts in arm tails are small).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .events import arm_event, invasion_sequence, lr1_event, y_statistic
from .exploration import (
    DegeneracyError,
    build_arrangement,
    count_traversals,
    hits_all_balls,
    last_left_subpath,
    trace_exploration,
)
from .geometry import Annulus, Box, Point
from .measures import decorrelation_bound
from .reports import DecayReport, EstimateReport, fit_decay, from_successes
from .seeds import derive_seed
from .soup import (
    Configuration,
    DiskWindow,
    SoupParams,
    expected_count_band_convex,
    restrict_configuration,
    sample_configuration,
)

_MAX_DEGENERACY_RETRIES = 8


# ---------------------------------------------------------------------------
# event descriptors


@dataclass(frozen=True)
class NonemptyEvent:
    """The sampled configuration contains at least one stick."""


@dataclass(frozen=True)
class ArmEventSpec:
    """A cluster of sticks joins the two boundary circles of the annulus."""

    annulus: Annulus


@dataclass(frozen=True)
class Lr1EventSpec:
    """A single stick meets both vertical sides of the box."""

    box: Box
    k: float


@dataclass(frozen=True)
class CrossingEventSpec:
    """The exploration of the box ends on the right side (vacant crossing)."""

    box: Box


@dataclass(frozen=True)
class PredicateEvent:
    """Escape hatch: any deterministic predicate of the configuration."""

    name: str
    fn: Callable[[Configuration], bool]


def _apply_event(event, c: Configuration) -> bool:
    if isinstance(event, NonemptyEvent):
        return c.n_sticks > 0
    if isinstance(event, ArmEventSpec):
        return arm_event(c, event.annulus)
    if isinstance(event, Lr1EventSpec):
        return lr1_event(c, event.box, event.k)
    if isinstance(event, CrossingEventSpec):
        return trace_exploration(build_arrangement(c, event.box)).outcome == "Right"
    if isinstance(event, PredicateEvent):
        return bool(event.fn(c))
    raise TypeError(f"unknown event descriptor {event!r}")


def _event_name(event) -> str:
    if isinstance(event, PredicateEvent):
        return event.name
    return type(event).__name__


def _sample_trial(params, window, r_min, master_seed, index) -> Configuration:
    return sample_configuration(
        params, window, r_min, derive_seed(master_seed, index, 0)
    )


def estimate_probability(
    event,
    params: SoupParams,
    window: DiskWindow,
    r_min: float,
    n_trials: int,
    master_seed: int,
) -> EstimateReport:
    """Estimate P(event) over independent configurations with Wilson CI.

    Configurations whose arrangement is degenerate (tolerance-coincident
    vertices) are resampled with a salted seed and counted in the report.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    successes = 0
    resamples = 0
    for i in range(n_trials):
        for attempt in range(_MAX_DEGENERACY_RETRIES + 1):
            cfg = sample_configuration(
                params, window, r_min, derive_seed(master_seed, i, attempt)
            )
            try:
                ok = _apply_event(event, cfg)
                break
            except DegeneracyError:
                resamples += 1
        else:
            raise DegeneracyError(
                f"trial {i}: degenerate after {_MAX_DEGENERACY_RETRIES} resamples"
            )
        successes += bool(ok)
    return from_successes(
        successes,
        n_trials,
        master_seed,
        {
            "event": _event_name(event),
            "u": params.u,
            "alpha": params.alpha,
            "r_min": r_min,
            "window_a": window.radius,
            "resamples": resamples,
        },
    )


# ---------------------------------------------------------------------------
# decay scans


def arm_decay_scan(
    params: SoupParams,
    r_min: float,
    m_max: int,
    n_trials: int,
    master_seed: int,
) -> DecayReport:
    """P(arm across D(1, 2^m)) for m = 1..m_max with a power-law fit.

    Estimates use the truncated soup at r_min, which lower-bounds the
    untruncated arm probabilities (nested coupling).
    """
    if m_max < 2:
        raise ValueError("scan needs m_max >= 2")
    origin = Point(0.0, 0.0)
    rows = []
    indices = list(range(1, m_max + 1))
    for m in indices:
        window = DiskWindow(origin, 2.0 ** m)
        rep = estimate_probability(
            ArmEventSpec(Annulus(origin, 1.0, 2.0 ** m)),
            params,
            window,
            r_min,
            n_trials,
            derive_seed(master_seed, 1000 + m),
        )
        rows.append(rep)
    return fit_decay(
        indices,
        rows,
        master_seed,
        {"kind": "arm_decay", "u": params.u, "alpha": params.alpha, "r_min": r_min},
    )


def h1_scan(
    params: SoupParams,
    r_min: float,
    k: int,
    m_max: int,
    n_trials: int,
    master_seed: int,
) -> DecayReport:
    """P(the exploration path traverses an annulus of radius ratio 2^-m at
    least k times), for m = 1..m_max.

    The box is [-2^m_max, 2^m_max]^2 and the annuli are centered on its
    center with fixed outer radius 2^(m_max - 1) and inner radius shrinking
    as 2^(m_max - 1 - m), so the boundary-circle ratio is 2^-m.  Growing the
    outer circle instead would not discriminate: the walk starts and ends on
    the box boundary, outside every outer circle, so one entering arm to a
    fixed inner circle forces an arm across all larger annuli at once.

    One exploration per trial; all scales are evaluated on the same traced
    path, so estimates are coupled across m and exactly nested in k for a
    fixed master seed.
    """
    if m_max < 1:
        raise ValueError("scan needs m_max >= 1")
    if k < 1:
        raise ValueError("traversal count k must be at least 1")
    half = 2.0 ** m_max
    box = Box(Point(-half, -half), Point(half, half))
    window = DiskWindow(Point(0.0, 0.0), half * math.sqrt(2.0))
    outer = 2.0 ** (m_max - 1)
    annuli = [
        Annulus(Point(0.0, 0.0), outer * 2.0 ** (-m), outer)
        for m in range(1, m_max + 1)
    ]
    successes = [0] * m_max
    for i in range(n_trials):
        for attempt in range(_MAX_DEGENERACY_RETRIES + 1):
            cfg = sample_configuration(
                params, window, r_min, derive_seed(master_seed, i, attempt)
            )
            try:
                res = trace_exploration(build_arrangement(cfg, box))
                break
            except DegeneracyError:
                continue
        else:
            raise DegeneracyError(f"trial {i}: persistent degeneracy")
        for j, ann in enumerate(annuli):
            n_arms, _ = count_traversals(res.path, ann, res.edge_labels)
            successes[j] += n_arms >= k
    indices = list(range(1, m_max + 1))
    rows = [
        from_successes(
            successes[j],
            n_trials,
            master_seed,
            {"kind": "h1", "m": indices[j], "k": k, "u": params.u, "r_min": r_min},
        )
        for j in range(m_max)
    ]
    return fit_decay(
        indices,
        rows,
        master_seed,
        {"kind": "h1", "k": k, "u": params.u, "alpha": params.alpha, "r_min": r_min},
    )


# ---------------------------------------------------------------------------
# correlation decay


@dataclass(frozen=True)
class LocalEvent:
    """An indicator depending only on sticks touching B(0, region_radius)."""

    name: str
    region_radius: float
    fn: Callable[[Configuration], bool]


def hits_disk_event(l: float) -> LocalEvent:
    from .geometry import radial_interval

    def fn(c: Configuration) -> bool:
        if c.n_sticks == 0:
            return False
        dmin, _ = radial_interval(c.segments(), 0.0, 0.0)
        return bool(np.any(dmin <= l))

    return LocalEvent(f"some_stick_hits_disk_{l}", l, fn)


def crosses_circle_event(l: float) -> LocalEvent:
    from .geometry import radial_interval

    def fn(c: Configuration) -> bool:
        if c.n_sticks == 0:
            return False
        dmin, dmax = radial_interval(c.segments(), 0.0, 0.0)
        return bool(np.any((dmin <= l) & (dmax >= l)))

    return LocalEvent(f"some_stick_crosses_circle_{l}", l, fn)


@dataclass(frozen=True)
class CorrelationReport:
    n_trials: int
    cov_estimate: float
    std_error: float
    bound: float
    p1: float
    p2: float
    degenerate: bool
    master_seed: int
    params: dict = field(default_factory=dict)


def correlation_estimate(
    f1: LocalEvent,
    f2: LocalEvent,
    params: SoupParams,
    r_min: float,
    n_trials: int,
    master_seed: int,
) -> CorrelationReport:
    """Sample covariance of two local indicators next to its closed-form bound."""
    if n_trials < 2:
        raise ValueError("covariance needs at least 2 trials")
    radius = max(f1.region_radius, f2.region_radius)
    window = DiskWindow(Point(0.0, 0.0), radius)
    x = np.empty(n_trials)
    y = np.empty(n_trials)
    for i in range(n_trials):
        cfg = _sample_trial(params, window, r_min, master_seed, i)
        x[i] = f1.fn(cfg)
        y[i] = f2.fn(cfg)
    degenerate = bool(x.std() == 0.0 or y.std() == 0.0)
    prod = (x - x.mean()) * (y - y.mean())
    cov = float(prod.mean())
    se = float(prod.std(ddof=1) / math.sqrt(n_trials)) if not degenerate else 0.0
    if degenerate:
        cov = 0.0
    l1 = min(f1.region_radius, f2.region_radius)
    l2 = max(f1.region_radius, f2.region_radius)
    bound = decorrelation_bound(params.alpha, params.u, l1, l2) if l1 < l2 else 2.0
    return CorrelationReport(
        n_trials=n_trials,
        cov_estimate=cov,
        std_error=se,
        bound=bound,
        p1=float(x.mean()),
        p2=float(y.mean()),
        degenerate=degenerate,
        master_seed=master_seed,
        params={"f1": f1.name, "f2": f2.name, "u": params.u, "r_min": r_min},
    )


# ---------------------------------------------------------------------------
# mean-count cross-check


@dataclass(frozen=True)
class MeanCountReport:
    n_trials: int
    empirical_mean: float
    std_error: float
    oracle: float
    z_score: float
    master_seed: int
    params: dict = field(default_factory=dict)


def parker_cowan_check(
    params: SoupParams,
    window: DiskWindow,
    r: float,
    t: float,
    n_trials: int,
    master_seed: int,
) -> MeanCountReport:
    """Mean sampled count of sticks with R in [r, t) hitting the window disk,
    compared to the closed-form band expectation."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    if not (0 < r < t):
        raise ValueError(f"need 0 < r < t, got r={r}, t={t}")
    counts = np.empty(n_trials)
    for i in range(n_trials):
        cfg = _sample_trial(params, window, r, master_seed, i)
        counts[i] = np.count_nonzero(cfg.stick_data[:, 2] < t)
    a = window.radius
    oracle = expected_count_band_convex(
        params.alpha, params.u, r, t, math.pi * a * a, 2 * math.pi * a
    )
    mean = float(counts.mean())
    se = float(counts.std(ddof=1) / math.sqrt(n_trials)) if n_trials > 1 else math.inf
    z = (mean - oracle) / se if se > 0 else math.inf
    return MeanCountReport(
        n_trials=n_trials,
        empirical_mean=mean,
        std_error=se,
        oracle=oracle,
        z_score=float(z),
        master_seed=master_seed,
        params={"u": params.u, "alpha": params.alpha, "r": r, "t": t, "window_a": a},
    )


# ---------------------------------------------------------------------------
# well-separated ball scan for the traced interface suffix


def validate_separated(balls: Sequence[tuple], factor: float = 2.0) -> None:
    """Require the dilations of the balls by ``factor`` to be disjoint."""
    for i in range(len(balls)):
        for j in range(i + 1, len(balls)):
            (c1, r1), (c2, r2) = balls[i], balls[j]
            x1, y1 = (c1.x, c1.y) if isinstance(c1, Point) else (c1[0], c1[1])
            x2, y2 = (c2.x, c2.y) if isinstance(c2, Point) else (c2[0], c2[1])
            if math.hypot(x1 - x2, y1 - y2) < factor * (r1 + r2):
                raise ValueError(
                    f"balls {i} and {j} are not {factor}-separated"
                )


def property_void_scan(
    params: SoupParams,
    r_min: float,
    balls: Sequence[tuple],
    n_trials: int,
    master_seed: int,
    box: Box | None = None,
) -> DecayReport:
    """P(the interface suffix meets the first n balls), n = 1..len(balls).

    Prefix events are nested per trial, so the estimates are nonincreasing by
    construction; the geometric factor per ball is the report's ``q_hat``.
    """
    validate_separated(balls)
    if not balls:
        raise ValueError("need at least one ball")
    if box is None:
        box = Box(Point(0.0, 0.0), Point(1.0, 1.0))
    window = DiskWindow(box.center(), box.diagonal() / 2.0)
    n_balls = len(balls)
    successes = [0] * n_balls
    for i in range(n_trials):
        for attempt in range(_MAX_DEGENERACY_RETRIES + 1):
            cfg = sample_configuration(
                params, window, r_min, derive_seed(master_seed, i, attempt)
            )
            try:
                res = trace_exploration(build_arrangement(cfg, box))
                break
            except DegeneracyError:
                continue
        else:
            raise DegeneracyError(f"trial {i}: persistent degeneracy")
        tail = last_left_subpath(res, box)
        alive = True
        for n in range(n_balls):
            alive = alive and hits_all_balls(tail, [balls[n]])
            successes[n] += alive
    indices = list(range(1, n_balls + 1))
    rows = [
        from_successes(
            successes[j],
            n_trials,
            master_seed,
            {"kind": "void", "n": indices[j], "u": params.u, "r_min": r_min},
        )
        for j in range(n_balls)
    ]
    return fit_decay(
        indices,
        rows,
        master_seed,
        {"kind": "void", "u": params.u, "alpha": params.alpha, "r_min": r_min},
    )


# ---------------------------------------------------------------------------
# coupled truncation monotonicity


@dataclass(frozen=True)
class CoupledMonotonicityReport:
    r_values: list[float]
    estimates: list[float]
    violations: int
    n_trials: int
    master_seed: int


def coupled_arm_monotonicity(
    params: SoupParams,
    annulus: Annulus,
    r_values: Sequence[float],
    n_trials: int,
    master_seed: int,
) -> CoupledMonotonicityReport:
    """Evaluate the arm event at several truncations of one sample per trial.

    The coarser configurations are restrictions of the finest one, so the
    indicator must be nonincreasing in r trial by trial, exactly.
    """
    rs = sorted(float(r) for r in r_values)
    window = DiskWindow(annulus.center, annulus.outer)
    hits = np.zeros(len(rs), dtype=np.int64)
    violations = 0
    for i in range(n_trials):
        cfg = _sample_trial(params, window, rs[0], master_seed, i)
        prev = None
        for j, r in enumerate(rs):
            ind = arm_event(restrict_configuration(cfg, r), annulus)
            hits[j] += ind
            if prev is not None and ind and not prev:
                violations += 1
            prev = ind
    return CoupledMonotonicityReport(
        r_values=rs,
        estimates=[float(h) / n_trials for h in hits],
        violations=violations,
        n_trials=n_trials,
        master_seed=master_seed,
    )


# ---------------------------------------------------------------------------
# invasion vs. i.i.d. gap comparison


@dataclass(frozen=True)
class InvasionComparisonReport:
    t_values: list[int]
    mean_invasion_sums: list[float]
    mean_iid_sums: list[float]
    diff_means: list[float]
    diff_std_errors: list[float]
    dominated: bool
    n_trials: int
    truncated_records: int
    master_seed: int


def invasion_domination_check(
    params: SoupParams,
    m: int,
    r_min: float,
    n_trials: int,
    master_seed: int,
    t_values: Sequence[int] = (2, 4, 8),
) -> InvasionComparisonReport:
    """Compare partial sums of invasion gaps against the i.i.d. first gap.

    The first gap of each record is an i.i.d. draw of the single-annulus gap
    law; the later gaps are stochastically dominated by it, so the paired
    difference sum(L, j <= t) - t * L1 has nonpositive mean (gaps past the
    record's end count as zero).
    """
    window = DiskWindow(Point(0.0, 0.0), 2.0 ** m)
    ts = sorted(int(t) for t in t_values)
    sums = np.zeros((n_trials, len(ts)))
    first = np.zeros(n_trials)
    truncated = 0
    for i in range(n_trials):
        cfg = _sample_trial(params, window, r_min, master_seed, i)
        rec = invasion_sequence(cfg, m)
        truncated += rec.truncated
        first[i] = rec.L[0]
        for j, t in enumerate(ts):
            sums[i, j] = sum(rec.L[:t])
    diff = sums - first[:, None] * np.asarray(ts, dtype=float)[None, :]
    dm = diff.mean(axis=0)
    dse = diff.std(axis=0, ddof=1) / math.sqrt(n_trials)
    dominated = bool(np.all(dm <= 3.0 * dse))
    return InvasionComparisonReport(
        t_values=ts,
        mean_invasion_sums=[float(v) for v in sums.mean(axis=0)],
        mean_iid_sums=[float(t * first.mean()) for t in ts],
        diff_means=[float(v) for v in dm],
        diff_std_errors=[float(v) for v in dse],
        dominated=dominated,
        n_trials=n_trials,
        truncated_records=truncated,
        master_seed=master_seed,
    )


def y_gap_samples(
    params: SoupParams, j: int, r_min: float, n_samples: int, master_seed: int
) -> np.ndarray:
    """Fresh-configuration gap draws j - D_j (one per sample)."""
    window = DiskWindow(Point(0.0, 0.0), 2.0 ** j)
    out = np.empty(n_samples, dtype=np.int64)
    for i in range(n_samples):
        cfg = _sample_trial(params, window, r_min, master_seed, i)
        out[i] = y_statistic(cfg, j)
    return out
