import math
from collections import Counter

import numpy as np
import pytest

from spssim.metrics import (IpgHistogram, MetricsAccumulator, Outcome,
                            data_rate_bps, format_ipg_hist_csv,
                            format_per_curve_csv, ipg_histogram)


def acc_with(n=4, **kw):
    return MetricsAccumulator(n, **kw)


class TestDenominator:
    def test_no_receivers_is_noop(self):
        acc = acc_with()
        acc.on_transmission(0, [], [])
        assert acc.expected.sum() == 0

    def test_expected_counts_receivers_in_scope(self):
        acc = acc_with()
        acc.on_transmission(0, [1, 2], [100.0, 900.0])
        assert acc.expected[0, 1] == acc.expected[0, 2] == 1
        assert acc.bin_attempts.sum() == 2

    def test_retransmission_does_not_increment(self):
        # denominator bookkeeping is per packet: the caller registers a packet
        # once, however many blind copies are sent
        acc = acc_with()
        acc.on_transmission(0, [1], [100.0])
        acc.on_reception(0, 1, 150, Outcome.DECODED, seq=0, dist_m=100.0)
        acc.on_reception(0, 1, 160, Outcome.DECODED, seq=0, dist_m=100.0)
        assert acc.expected[0, 1] == 1
        assert acc.decoded[0, 1] == 1   # duplicate success ignored


class TestIpg:
    def test_consecutive_successes(self):
        acc = acc_with()
        for t in (100, 200):
            acc.on_transmission(0, [1], [50.0])
            acc.on_reception(0, 1, t, Outcome.DECODED, seq=t // 100, dist_m=50.0)
        assert acc.ipg_counts == Counter({100: 1})

    def test_drop_in_between_doubles_gap(self):
        acc = acc_with()
        seq = 0
        for t, outcome in ((100, Outcome.DECODED), (200, Outcome.LOST),
                           (300, Outcome.DECODED)):
            acc.on_transmission(0, [1], [50.0])
            acc.on_reception(0, 1, t, outcome, seq=seq, dist_m=50.0)
            seq += 1
        assert acc.ipg_counts == Counter({200: 1})

    def test_sample_count_is_decoded_minus_one_per_link(self):
        rng = np.random.default_rng(3)
        acc = acc_with(n=3)
        decoded = {(0, 1): 0, (0, 2): 0, (1, 2): 0}
        for seq in range(200):
            t = 100 * (seq + 1)
            for (tx, rx) in decoded:
                acc.on_transmission(tx, [rx], [100.0])
                if rng.random() < 0.7:
                    acc.on_reception(tx, rx, t, Outcome.DECODED, seq, 100.0)
                    decoded[(tx, rx)] += 1
                else:
                    acc.on_reception(tx, rx, t, Outcome.LOST, seq, 100.0)
        total_samples = sum(acc.ipg_counts.values())
        assert total_samples == sum(max(0, d - 1) for d in decoded.values())
        assert acc.conservation_ok()


class TestPerCurve:
    def test_all_decoded_gives_zero(self):
        acc = acc_with()
        for seq in range(10):
            acc.on_transmission(0, [1], [130.0])
            acc.on_reception(0, 1, 100 * seq, Outcome.DECODED, seq, 130.0)
        curve = acc.per_curve()
        assert all(b.per in (None, 0.0) for b in curve)

    def test_all_lost_gives_one(self):
        acc = acc_with()
        for seq in range(10):
            acc.on_transmission(0, [1], [130.0])
            acc.on_reception(0, 1, 100 * seq, Outcome.LOST, seq, 130.0)
        bins = [b for b in acc.per_curve() if b.attempts]
        assert len(bins) == 1 and bins[0].per == 1.0

    def test_empty_bin_reports_absent(self):
        acc = acc_with()
        assert all(b.per is None for b in acc.per_curve())
        text = format_per_curve_csv(acc.per_curve())
        assert text.splitlines()[1].endswith(",0,0,")

    def test_synthetic_half_loss(self):
        rng = np.random.default_rng(9)
        acc = acc_with()
        n = 4000
        for seq in range(n):
            d = float(rng.uniform(0, 1000))
            acc.on_transmission(0, [1], [d])
            outcome = Outcome.DECODED if rng.random() < 0.5 else Outcome.LOST
            acc.on_reception(0, 1, 100 * seq, outcome, seq, d)
        for b in acc.per_curve():
            if b.attempts >= 50:
                ci = 3 * math.sqrt(0.25 / b.attempts)
                assert abs(b.per - 0.5) < ci + 0.05

    def test_half_duplex_counts_as_failure_with_breakdown(self):
        acc = acc_with()
        acc.on_transmission(0, [1], [100.0])
        acc.on_reception(0, 1, 100, Outcome.HALF_DUPLEX, 0, 100.0)
        assert acc.half_duplex[0, 1] == 1
        assert acc.per_total() == 1.0
        assert acc.conservation_ok()


class TestIpgHistogram:
    def test_perfect_network_single_spike(self):
        hist = ipg_histogram(Counter({100: 500}), bin_ms=100, cap_ms=500)
        freqs = [f for _, _, f, _ in hist.bins]
        assert freqs[1] == 1.0 and sum(freqs) == 1.0
        assert hist.mode_ms == 100.0 and hist.mean_ms == 100.0

    def test_normalization_includes_overflow(self):
        hist = ipg_histogram(Counter({100: 80, 700: 20}), 100, 500)
        assert sum(f for _, _, f, _ in hist.bins) + hist.overflow_freq == 1.0
        assert hist.overflow_count == 20

    def test_single_miss_mass_at_200(self):
        hist = ipg_histogram(Counter({100: 90, 200: 10}), 100, 500)
        assert hist.bins[2][2] == pytest.approx(0.1)

    def test_percentiles_exact(self):
        counts = Counter({100: 94, 300: 1, 600: 5})
        hist = ipg_histogram(counts, 100, 500)
        assert hist.median_ms == 100.0
        assert hist.p95_ms == 300.0
        assert hist.mean_ms == pytest.approx((9400 + 300 + 3000) / 100)

    def test_empty_histogram(self):
        hist = ipg_histogram(Counter(), 100, 500)
        assert hist.total == 0 and math.isnan(hist.mean_ms)

    def test_csv_has_overflow_row(self):
        hist = ipg_histogram(Counter({100: 1, 900: 1}), 100, 500)
        text = format_ipg_hist_csv(hist)
        lines = text.splitlines()
        assert lines[-1].startswith("500,inf,")
        assert lines[-1].endswith(",1")
        assert "np." not in text   # plain decimal floats only


class TestDataRate:
    def test_zero(self):
        assert data_rate_bps(0, 190, 100.0) == 0.0

    def test_arithmetic(self):
        assert data_rate_bps(1000, 190, 100.0) == 1000 * 1520 / 100

    def test_linearity_in_delivery(self):
        assert data_rate_bps(2000, 190, 100.0) == 2 * data_rate_bps(2000, 190, 200.0)


class TestConservation:
    def test_identity_over_random_outcomes(self):
        rng = np.random.default_rng(21)
        acc = acc_with(n=5)
        for seq in range(300):
            tx = int(rng.integers(0, 5))
            rxs = [r for r in range(5) if r != tx and rng.random() < 0.6]
            acc.on_transmission(tx, rxs, [float(rng.uniform(1, 999))] * len(rxs))
            for rx in rxs:
                outcome = rng.choice([Outcome.DECODED, Outcome.LOST,
                                      Outcome.HALF_DUPLEX])
                acc.on_reception(tx, rx, 100 * seq, outcome, seq, 500.0)
        assert acc.conservation_ok()
        total = acc.decoded + acc.lost + acc.half_duplex
        np.testing.assert_array_equal(total, acc.expected)

    def test_receiver_permutation_invariance(self):
        def fill(order):
            acc = acc_with(n=4)
            for seq in range(50):
                for rx in order:
                    acc.on_transmission(0, [rx], [200.0])
                    outcome = Outcome.DECODED if (seq + rx) % 3 else Outcome.LOST
                    acc.on_reception(0, rx, 100 * seq, outcome, seq, 200.0)
            return acc
        a, b = fill([1, 2, 3]), fill([3, 1, 2])
        assert [x.per for x in a.per_curve()] == [x.per for x in b.per_curve()]
