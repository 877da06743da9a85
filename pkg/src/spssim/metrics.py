"""Reception accounting: PER by transmitter-receiver distance, inter-packet
gaps per directed link, and delivered data rate."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np


class MetricsError(ValueError):
    pass


class Outcome(Enum):
    DECODED = "decoded"
    LOST = "lost"
    HALF_DUPLEX = "half_duplex"


@dataclass
class PerBin:
    low_m: float
    high_m: float
    attempts: int
    failures: int

    @property
    def per(self) -> float | None:
        return None if self.attempts == 0 else self.failures / self.attempts


class MetricsAccumulator:
    """Per-directed-link counters plus distance-binned PER aggregation.

    A packet counts toward a receiver when the receiver is inside the
    measurement window and within the accounting range at its first
    transmission; blind retransmissions never increase the denominator.
    Every counted packet resolves to exactly one of decoded / lost /
    half-duplex-missed.
    """

    def __init__(self, n_ues: int, bin_width_m: float = 25.0,
                 max_range_m: float = 1000.0):
        if bin_width_m <= 0 or max_range_m <= 0:
            raise MetricsError("bin width and range must be positive")
        self.n = n_ues
        self.bin_width_m = bin_width_m
        self.max_range_m = max_range_m
        self.n_bins = int(math.ceil(max_range_m / bin_width_m))
        self.expected = np.zeros((n_ues, n_ues), dtype=np.int64)
        self.decoded = np.zeros((n_ues, n_ues), dtype=np.int64)
        self.lost = np.zeros((n_ues, n_ues), dtype=np.int64)
        self.half_duplex = np.zeros((n_ues, n_ues), dtype=np.int64)
        self.last_rx = np.full((n_ues, n_ues), -1, dtype=np.int64)
        self.last_seq = np.full((n_ues, n_ues), -1, dtype=np.int64)
        self.bin_attempts = np.zeros(self.n_bins, dtype=np.int64)
        self.bin_failures = np.zeros(self.n_bins, dtype=np.int64)
        self.ipg_counts: Counter[int] = Counter()
        self.packets_generated = 0
        self.packets_expired = 0

    def distance_bin(self, d_m) -> np.ndarray:
        idx = np.asarray(d_m) / self.bin_width_m
        return np.minimum(idx.astype(np.int64), self.n_bins - 1)

    # Vectorized path used by the engine -------------------------------

    def start_packet(self, tx: int, scope: np.ndarray, dist_m: np.ndarray) -> None:
        """Register expected receptions for one new packet (first attempt)."""
        self.expected[tx, scope] += 1
        np.add.at(self.bin_attempts, self.distance_bin(dist_m), 1)

    def resolve_packet(self, tx: int, seq: int, t: int, scope: np.ndarray,
                       dist_m: np.ndarray, decoded: np.ndarray,
                       half_duplex: np.ndarray, rx_time: np.ndarray) -> None:
        """Final per-receiver outcome of a packet over all of its attempts."""
        new = decoded & (self.last_seq[tx, scope] < seq)
        self.decoded[tx, scope[new]] += 1
        self.last_seq[tx, scope[new]] = seq
        hd = ~decoded & half_duplex
        self.half_duplex[tx, scope[hd]] += 1
        lost = ~decoded & ~half_duplex
        self.lost[tx, scope[lost]] += 1
        fail = ~decoded
        np.add.at(self.bin_failures, self.distance_bin(dist_m[fail]), 1)
        prev = self.last_rx[tx, scope[new]]
        gaps = rx_time[new] - prev
        for g in gaps[prev >= 0]:
            self.ipg_counts[int(g)] += 1
        self.last_rx[tx, scope[new]] = rx_time[new]

    def expire_packet(self, tx: int, scope: np.ndarray, dist_m: np.ndarray) -> None:
        """A generated packet that never reached the channel counts as lost."""
        self.start_packet(tx, scope, dist_m)
        self.lost[tx, scope] += 1
        np.add.at(self.bin_failures, self.distance_bin(dist_m), 1)
        self.packets_expired += 1

    # Scalar per-link path mirroring the accounting contract ------------

    def on_transmission(self, tx: int, receivers, distances_m) -> None:
        scope = np.asarray(list(receivers), dtype=np.int64)
        self.start_packet(tx, scope, np.asarray(list(distances_m), dtype=float))

    def on_reception(self, tx: int, rx: int, t: int, outcome: Outcome,
                     seq: int, dist_m: float) -> None:
        if outcome is Outcome.DECODED:
            if self.last_seq[tx, rx] >= seq:
                return   # duplicate blind-retransmission success
            self.last_seq[tx, rx] = seq
            self.decoded[tx, rx] += 1
            if self.last_rx[tx, rx] >= 0:
                self.ipg_counts[int(t - self.last_rx[tx, rx])] += 1
            self.last_rx[tx, rx] = t
        elif outcome is Outcome.HALF_DUPLEX:
            self.half_duplex[tx, rx] += 1
            self.bin_failures[self.distance_bin(dist_m)] += 1
        else:
            self.lost[tx, rx] += 1
            self.bin_failures[self.distance_bin(dist_m)] += 1

    # Aggregation --------------------------------------------------------

    def conservation_ok(self) -> bool:
        return bool(np.array_equal(self.expected,
                                   self.decoded + self.lost + self.half_duplex))

    def per_curve(self) -> list[PerBin]:
        out = []
        for i in range(self.n_bins):
            out.append(PerBin(i * self.bin_width_m, (i + 1) * self.bin_width_m,
                              int(self.bin_attempts[i]), int(self.bin_failures[i])))
        return out

    def per_in_range(self, lo_m: float, hi_m: float) -> float | None:
        att = fail = 0
        for b in self.per_curve():
            if b.low_m >= lo_m and b.high_m <= hi_m:
                att += b.attempts
                fail += b.failures
        return None if att == 0 else fail / att

    def per_total(self) -> float | None:
        att = int(self.bin_attempts.sum())
        return None if att == 0 else int(self.bin_failures.sum()) / att

    def ipg_count(self) -> int:
        return sum(self.ipg_counts.values())


@dataclass
class IpgHistogram:
    bins: list[tuple[float, float, float, int]]   # (low_ms, high_ms, freq, count)
    overflow_count: int
    overflow_freq: float
    cap_ms: int
    mean_ms: float
    median_ms: float
    p95_ms: float
    mode_ms: float
    total: int


def _weighted_percentile(values: np.ndarray, counts: np.ndarray, q: float) -> float:
    """Smallest sample value whose cumulative count reaches q of the total."""
    cum = np.cumsum(counts)
    target = q * cum[-1]
    return float(values[np.searchsorted(cum, target, side="left")])


def ipg_histogram(ipg_counts: Counter, bin_ms: int = 100,
                  cap_ms: int = 500) -> IpgHistogram:
    """Normalized gap histogram; samples above the cap stay countable in an
    explicit overflow bucket so truncation never hides data."""
    total = sum(ipg_counts.values())
    n_bins = int(math.ceil(cap_ms / bin_ms))
    counts = np.zeros(n_bins, dtype=np.int64)
    overflow = 0
    for gap, c in ipg_counts.items():
        idx = gap // bin_ms
        if gap >= cap_ms:
            overflow += c
        else:
            counts[idx] += c
    if total == 0:
        return IpgHistogram([(i * bin_ms, (i + 1) * bin_ms, 0.0, 0)
                             for i in range(n_bins)],
                            0, 0.0, cap_ms, math.nan, math.nan, math.nan,
                            math.nan, 0)
    values = np.array(sorted(ipg_counts))
    weights = np.array([ipg_counts[v] for v in values], dtype=np.int64)
    mean = float((values * weights).sum() / total)
    median = _weighted_percentile(values, weights, 0.5)
    p95 = _weighted_percentile(values, weights, 0.95)
    mode = float(np.argmax(counts) * bin_ms) if counts.sum() else float(cap_ms)
    bins = [(i * bin_ms, (i + 1) * bin_ms, int(counts[i]) / total, int(counts[i]))
            for i in range(n_bins)]
    return IpgHistogram(bins, int(overflow), int(overflow) / total, cap_ms,
                        mean, median, p95, mode, total)


def data_rate_bps(decoded_total: int, packet_bytes: int, sim_time_s: float) -> float:
    """Aggregate successfully delivered application bits per second."""
    if sim_time_s <= 0:
        raise MetricsError("sim_time_s must be positive")
    return decoded_total * packet_bytes * 8.0 / sim_time_s


# CSV / summary emission ----------------------------------------------------

PER_CURVE_HEADER = "bin_low_m,bin_high_m,attempts,failures,per"
IPG_HIST_HEADER = "bin_low_ms,bin_high_ms,freq,count"


def format_per_curve_csv(bins: list[PerBin]) -> str:
    lines = [PER_CURVE_HEADER]
    for b in bins:
        per = "" if b.per is None else repr(b.per)
        lines.append(f"{b.low_m:g},{b.high_m:g},{b.attempts},{b.failures},{per}")
    return "\n".join(lines) + "\n"


def format_ipg_hist_csv(hist: IpgHistogram) -> str:
    lines = [IPG_HIST_HEADER]
    for low, high, freq, count in hist.bins:
        lines.append(f"{low:g},{high:g},{freq!r},{count}")
    lines.append(f"{hist.cap_ms:g},inf,{hist.overflow_freq!r},{hist.overflow_count}")
    return "\n".join(lines) + "\n"


def format_summary(pairs: list[tuple[str, object]]) -> str:
    out = []
    for key, value in pairs:
        if isinstance(value, float):
            value = repr(value)
        out.append(f"{key}={value}")
    return "\n".join(out) + "\n"
