import math

import numpy as np
import pytest

from sticksoup.estimators import (
    ArmEventSpec,
    CrossingEventSpec,
    LocalEvent,
    NonemptyEvent,
    arm_decay_scan,
    correlation_estimate,
    coupled_arm_monotonicity,
    crosses_circle_event,
    estimate_probability,
    h1_scan,
    hits_disk_event,
    invasion_domination_check,
    parker_cowan_check,
    property_void_scan,
    validate_separated,
    y_gap_samples,
)
from sticksoup.geometry import Annulus, Box, Point
from sticksoup.reports import FitError, from_successes, wilson_interval
from sticksoup.soup import DiskWindow, SoupParams

ORIGIN = Point(0.0, 0.0)


class TestEstimateProbability:
    def test_void_probability_reference(self):
        # mean count 0.8314 at r_min = 10: P(nonempty) = 1 - exp(-0.8314)
        params = SoupParams(1.0, 2.0, 0)
        rep = estimate_probability(
            NonemptyEvent(), params, DiskWindow(ORIGIN, 1.0), 10.0, 2000, 3
        )
        expect = 1.0 - math.exp(-(math.pi * 1e-2 + 0.8))
        assert abs(rep.estimate - expect) < 3 * max(rep.std_error, 1e-3)

    def test_impossible_event_is_zero(self):
        params = SoupParams(1e-12, 2.0, 0)
        ann = Annulus(ORIGIN, 1.0, 2.0)
        rep = estimate_probability(
            ArmEventSpec(ann), params, DiskWindow(ORIGIN, 2.0), 0.5, 300, 3
        )
        assert rep.successes == 0 and rep.estimate == 0.0

    def test_same_seed_identical_report(self):
        params = SoupParams(0.3, 2.0, 0)
        args = (
            ArmEventSpec(Annulus(ORIGIN, 1.0, 2.0)),
            params,
            DiskWindow(ORIGIN, 2.0),
            0.2,
            150,
            99,
        )
        assert estimate_probability(*args) == estimate_probability(*args)

    def test_crossing_event_runs(self):
        params = SoupParams(0.2, 2.0, 0)
        box = Box(Point(0, 0), Point(1, 1))
        rep = estimate_probability(
            CrossingEventSpec(box),
            params,
            DiskWindow(Point(0.5, 0.5), math.sqrt(2) / 2),
            0.1,
            60,
            5,
        )
        assert 0.0 <= rep.estimate <= 1.0

    def test_zero_trials_rejected(self):
        with pytest.raises(ValueError):
            estimate_probability(
                NonemptyEvent(), SoupParams(1, 2, 0), DiskWindow(ORIGIN, 1), 1, 0, 0
            )


class TestWilson:
    def test_interval_brackets_estimate(self):
        lo, hi = wilson_interval(3, 10)
        assert lo <= 0.3 <= hi

    def test_extremes_stay_in_unit_interval(self):
        assert wilson_interval(0, 50)[0] == 0.0
        assert wilson_interval(50, 50)[1] == 1.0

    def test_report_invariants(self):
        rep = from_successes(5, 20, 0, {})
        assert rep.estimate == 0.25
        assert rep.ci95[0] <= rep.estimate <= rep.ci95[1]


class TestArmDecayScan:
    def test_small_scan_structure(self):
        params = SoupParams(0.15, 2.0, 0)
        rep = arm_decay_scan(params, 0.2, 2, 80, 11)
        assert rep.indices == [1, 2]
        assert len(rep.rows) == 2
        csv = rep.to_csv()
        assert csv.splitlines()[0] == "m,n_trials,successes,estimate,stderr,ci_lo,ci_hi"
        assert len(csv.splitlines()) == 3

    def test_all_zero_rows_fit_error(self):
        params = SoupParams(1e-12, 2.0, 0)
        with pytest.raises(FitError):
            arm_decay_scan(params, 0.5, 2, 30, 1)

    def test_stderr_scaling_with_trials(self):
        params = SoupParams(0.15, 2.0, 0)
        small = arm_decay_scan(params, 0.2, 2, 100, 5)
        big = arm_decay_scan(params, 0.2, 2, 400, 5)
        for r_small, r_big in zip(small.rows, big.rows):
            if r_small.std_error > 0 and r_big.std_error > 0:
                ratio = r_small.std_error / r_big.std_error
                assert ratio == pytest.approx(2.0, rel=0.45)


class TestH1Scan:
    def test_nested_in_k_with_shared_seed(self):
        params = SoupParams(0.2, 2.0, 0)
        r1 = h1_scan(params, 0.15, 1, 2, 100, 21)
        r3 = h1_scan(params, 0.15, 3, 2, 100, 21)
        assert all(a <= b for a, b in zip(r3.estimates, r1.estimates))

    def test_deterministic(self):
        params = SoupParams(0.2, 2.0, 0)
        a = h1_scan(params, 0.15, 1, 2, 60, 8)
        b = h1_scan(params, 0.15, 1, 2, 60, 8)
        assert a.estimates == b.estimates


class TestCorrelation:
    def test_identical_events_give_variance(self):
        params = SoupParams(0.5, 2.0, 0)
        f = hits_disk_event(1.0)
        rep = correlation_estimate(f, f, params, 4.0, 400, 2)  # p well inside (0,1)
        p = rep.p1
        assert 0.1 < p < 0.99
        assert rep.cov_estimate == pytest.approx(p * (1 - p), abs=4 * rep.std_error + 1e-9)
        assert rep.cov_estimate > 0

    def test_disjoint_radius_bands_uncorrelated(self):
        # indicators reading disjoint radius bands are exactly independent
        def band_event(lo, hi, radius):
            return LocalEvent(
                f"band_{lo}_{hi}",
                radius,
                lambda c: bool(np.any((c.stick_data[:, 2] >= lo) & (c.stick_data[:, 2] < hi))),
            )

        params = SoupParams(0.2, 2.0, 0)
        rep = correlation_estimate(
            band_event(0.5, 1.0, 2.0), band_event(2.0, 4.0, 2.0), params, 0.5, 1500, 4
        )
        assert abs(rep.cov_estimate) <= 3 * rep.std_error + 1e-12

    def test_degenerate_flagged(self):
        params = SoupParams(1.0, 2.0, 0)
        always = LocalEvent("always", 1.0, lambda c: True)
        rep = correlation_estimate(always, always, params, 0.5, 50, 1)
        assert rep.degenerate and rep.cov_estimate == 0.0

    def test_bound_attached(self):
        params = SoupParams(1.0, 2.0, 0)
        rep = correlation_estimate(
            hits_disk_event(1.0), crosses_circle_event(100.0), params, 4.0, 50, 1
        )
        assert rep.bound == pytest.approx(0.6517, abs=2e-4)


class TestParkerCowanCheck:
    def test_matches_oracle(self):
        params = SoupParams(1.0, 2.0, 0)
        rep = parker_cowan_check(params, DiskWindow(ORIGIN, 1.0), 0.5, 2.0, 1500, 6)
        assert abs(rep.z_score) < 3.5
        assert rep.oracle == pytest.approx(3.75 * math.pi + 12)

    def test_detects_wrong_intensity(self):
        # sample at 2u but score against the u oracle: z must blow up
        params = SoupParams(2.0, 2.0, 0)
        rep = parker_cowan_check(params, DiskWindow(ORIGIN, 1.0), 0.5, 2.0, 1500, 6)
        oracle_u1 = 3.75 * math.pi + 12
        z = (rep.empirical_mean - oracle_u1) / rep.std_error
        assert abs(z) > 10

    def test_zero_trials_rejected(self):
        with pytest.raises(ValueError):
            parker_cowan_check(SoupParams(1, 2, 0), DiskWindow(ORIGIN, 1), 0.5, 2, 0, 0)


class TestVoidScan:
    BALLS = [((0.2, 0.75), 0.05), ((0.5, 0.75), 0.05), ((0.8, 0.75), 0.05)]

    def test_separation_validated(self):
        with pytest.raises(ValueError):
            validate_separated([((0, 0), 0.3), ((0.5, 0), 0.3)])
        validate_separated(self.BALLS)

    def test_nonincreasing_prefixes(self):
        params = SoupParams(0.2, 2.0, 0)
        rep = property_void_scan(params, 0.08, self.BALLS, 120, 9)
        est = rep.estimates
        assert all(b <= a for a, b in zip(est, est[1:]))

    def test_q_hat_definition(self):
        params = SoupParams(0.2, 2.0, 0)
        rep = property_void_scan(params, 0.08, self.BALLS, 120, 9)
        assert rep.q_hat == pytest.approx(2.0 ** rep.slope)


class TestCoupledMonotonicity:
    def test_zero_violations_by_construction(self):
        params = SoupParams(0.3, 2.0, 0)
        rep = coupled_arm_monotonicity(
            params, Annulus(ORIGIN, 1.0, 2.0), [0.1, 0.2, 0.4], 80, 13
        )
        assert rep.violations == 0
        assert all(b <= a for a, b in zip(rep.estimates, rep.estimates[1:]))


class TestInvasionDomination:
    def test_paired_check_runs_and_dominates(self):
        params = SoupParams(1.0, 2.0, 0)
        rep = invasion_domination_check(params, 6, 0.5, 80, 17, t_values=(2, 4))
        assert rep.dominated
        assert rep.mean_invasion_sums[0] <= rep.mean_iid_sums[0] + 3 * rep.diff_std_errors[0] + 1e-9


class TestYGapSamples:
    def test_deterministic_and_positive(self):
        params = SoupParams(1.0, 2.0, 0)
        a = y_gap_samples(params, 0, 0.125, 200, 3)
        b = y_gap_samples(params, 0, 0.125, 200, 3)
        assert np.array_equal(a, b)
        assert np.all(a >= 1)
