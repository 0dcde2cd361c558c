"""Closed-form and quadrature values of the stick hit measure.

These are the deterministic oracles the Monte Carlo estimators are checked
against.  The measure of sticks hitting a fixed shape is infinite in several
parameter ranges; infinities are returned as ``math.inf``, not raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .reports import EstimateReport, wilson_interval
from .seeds import derive_seed
from .soup import InfiniteMeasureError, hit_weights_disk, _sample_hit_sticks


@dataclass(frozen=True)
class SegmentShape:
    """A reference line segment of the given length."""

    length: float


@dataclass(frozen=True)
class BallShape:
    """A reference disk of the given radius."""

    radius: float


@dataclass(frozen=True)
class RadiusAtLeast:
    r: float


@dataclass(frozen=True)
class RadiusBelow:
    r: float


def mu_hit(alpha: float, shape, radius_range) -> float:
    """Measure (per unit intensity) of sticks hitting the shape.

    Segment of length a:
      R >= r: infinite for alpha <= 1, else (4/pi) (alpha/(alpha-1)) a r^(1-alpha)
      R < r:  infinite for alpha >= 1, else (4/pi) (alpha/(1-alpha)) a r^(1-alpha)
    Ball of radius a:
      R < r:  infinite for every alpha
      R >= r: infinite for alpha <= 1, else pi a^2 r^-alpha
              + 4 (alpha/(alpha-1)) a r^(1-alpha)
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    r = radius_range.r
    if r <= 0:
        raise ValueError(f"radius threshold must be positive, got {r}")
    if isinstance(shape, SegmentShape):
        a = shape.length
        if a <= 0:
            raise ValueError("segment length must be positive")
        if isinstance(radius_range, RadiusAtLeast):
            if alpha <= 1:
                return math.inf
            return (4.0 / math.pi) * (alpha / (alpha - 1.0)) * a * r ** (1.0 - alpha)
        if alpha >= 1:
            return math.inf
        return (4.0 / math.pi) * (alpha / (1.0 - alpha)) * a * r ** (1.0 - alpha)
    if isinstance(shape, BallShape):
        a = shape.radius
        if a <= 0:
            raise ValueError("ball radius must be positive")
        if isinstance(radius_range, RadiusBelow):
            return math.inf
        if alpha <= 1:
            return math.inf
        w_area, w_caps = hit_weights_disk(alpha, r, a)
        return w_area + w_caps
    raise TypeError(f"unknown shape {shape!r}")


def _double_hit_integrand_theta(theta: float, alpha: float) -> float:
    # centers putting a stick of half-length x = sin(theta) < 1 across the
    # unit circle twice; the substitution removes the endpoint singularity of
    # asin at x = 1
    s = math.sin(theta)
    return (
        (4.0 * s - 2.0 * theta - 2.0 * s * math.cos(theta))
        * alpha
        * s ** (-(1.0 + alpha))
        * math.cos(theta)
    )


def _adaptive_simpson(f, a: float, b: float, tol: float) -> float:
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, fa, b, fb, m, fm, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return rec(a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) + rec(
            m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1
        )

    return rec(a, fa, b, fb, m, fm, whole, tol, 30)


def mu_double_circle(alpha: float) -> float:
    """Measure of sticks meeting a circle in exactly two points.

    Finite exactly for alpha in (1, 3); equal to 2*pi at alpha = 2.  The value
    is independent of the circle radius at alpha = 2 by scale invariance; for
    other alpha the unit circle is used (radius l rescales it by l^(2-alpha)).
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if alpha <= 1 or alpha >= 3:
        return math.inf
    if alpha == 2.0:
        return 2.0 * math.pi
    long_part = 4.0 * alpha / (alpha - 1.0) - math.pi  # sticks with 2R >= 2
    # integrand ~ (2 alpha / 3) theta^(2 - alpha) as theta -> 0; integrable
    # for alpha < 3, so the [0, delta] head is taken from the asymptote
    delta = 1e-6
    head = (2.0 * alpha / 3.0) * delta ** (3.0 - alpha) / (3.0 - alpha)
    short_part = head + _adaptive_simpson(
        lambda th: _double_hit_integrand_theta(th, alpha), delta, math.pi / 2, 1e-10
    )
    return short_part + long_part


def annulus_crossing_bounds(alpha: float, l1: float, l2: float) -> tuple[float, float]:
    """Sandwich for the measure of sticks meeting both circles of an annulus.

    Lower bound: sticks hitting B(l1) with R >= l2.  Upper bound: sticks
    hitting B(l1) with 2R >= l2 - l1.
    """
    if alpha <= 1:
        raise ValueError(f"bounds require alpha > 1, got {alpha}")
    if not (0 < l1 < l2):
        raise ValueError(f"need 0 < l1 < l2, got ({l1}, {l2})")
    coef = 4.0 * alpha / (alpha - 1.0)
    lower = math.pi * l1 * l1 * l2 ** (-alpha) + coef * l1 * l2 ** (1.0 - alpha)
    half_gap = (l2 - l1) / 2.0
    upper = math.pi * l1 * l1 * half_gap ** (-alpha) + coef * l1 * half_gap ** (
        1.0 - alpha
    )
    return lower, upper


def decorrelation_bound(alpha: float, u: float, l1: float, l2: float) -> float:
    """Covariance bound for [-1, 1]-valued observables of the regions inside
    B(l1) and outside B(l2): min(2, 4 u mu(both circles hit))."""
    _, upper = annulus_crossing_bounds(alpha, l1, l2)
    return min(2.0, 4.0 * u * upper)


def lr1_measure(
    alpha: float,
    l: float,
    k: float,
    n_trials: int,
    u: float = 1.0,
    master_seed: int = 0,
) -> EstimateReport:
    """Monte Carlo estimate of the measure of single sticks crossing a box.

    The box is [0, kl] x [0, l]; a crossing stick must meet both vertical
    sides, hence have 2R >= kl, so sticks are importance-sampled from the law
    of sticks hitting the circumscribed disk truncated at r_min = kl/2.  The
    measure estimate is (disk hit measure) * (crossing fraction) and the
    crossing probability at intensity u is 1 - exp(-u * mu_hat).
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    if not (l > 0 and k > 0):
        raise ValueError("box dimensions require l > 0 and k > 0")
    if alpha <= 1:
        raise InfiniteMeasureError("single-stick sampling requires alpha > 1")
    width = k * l
    r_min = width / 2.0
    cx, cy = width / 2.0, l / 2.0
    disk_r = math.hypot(width, l) / 2.0
    w_area, w_caps = hit_weights_disk(alpha, r_min, disk_r)
    total_weight = w_area + w_caps
    rng = np.random.default_rng(np.uint64(derive_seed(master_seed, 0)))
    data = _sample_hit_sticks(rng, alpha, disk_r, r_min, n_trials)
    sx = data[:, 0] + cx
    sy = data[:, 1] + cy
    radii = data[:, 2]
    ex = np.cos(data[:, 3])
    ey = np.sin(data[:, 3])
    crossings = 0
    # stick meets both {0} x [0, l] and {kl} x [0, l]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_left = np.where(ex != 0, (0.0 - sx) / np.where(ex != 0, ex, 1.0), np.inf)
        t_right = np.where(ex != 0, (width - sx) / np.where(ex != 0, ex, 1.0), np.inf)
    y_left = sy + t_left * ey
    y_right = sy + t_right * ey
    hit_left = (np.abs(t_left) <= radii) & (y_left >= 0.0) & (y_left <= l)
    hit_right = (np.abs(t_right) <= radii) & (y_right >= 0.0) & (y_right <= l)
    crossings = int(np.count_nonzero(hit_left & hit_right))
    frac = crossings / n_trials
    se_frac = math.sqrt(max(frac * (1.0 - frac), 0.0) / n_trials)
    mu_hat = total_weight * frac
    prob = 1.0 - math.exp(-u * mu_hat)
    return EstimateReport(
        n_trials=n_trials,
        successes=crossings,
        estimate=frac,
        std_error=se_frac,
        ci95=wilson_interval(crossings, n_trials),
        master_seed=master_seed,
        params={
            "kind": "lr1_measure",
            "alpha": alpha,
            "l": l,
            "k": k,
            "u": u,
            "r_min": r_min,
            "mu_hat": mu_hat,
            "mu_std_error": total_weight * se_frac,
            "probability": prob,
        },
    )
