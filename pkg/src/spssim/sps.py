"""Sensing-based semi-persistent scheduling.

Builds the report window, removes likely-to-collide candidates (unmonitored
subframes and sensed reservations above the RSRP threshold, with the 20%
floor enforced by 3 dB threshold increments), ranks the remainder by averaged
S-RSSI, and manages the reselection counter and keep/reselect lottery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from spssim.grid import Csr, GridConfig
from spssim.phy import SensingRecord


class SchedulingError(RuntimeError):
    """Scheduler invoked with an impossible input (e.g. empty candidate list)."""


STANDARD_RESELECT_PROBS = (0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_RESERVATION_PERIODS = (20, 50) + tuple(range(100, 1001, 100))


def slrrc_range(p_rsvp_ms: int) -> tuple[int, int]:
    """Inclusive reselection-counter range for a reservation interval."""
    if p_rsvp_ms >= 100:
        return (5, 15)
    if p_rsvp_ms == 50:
        return (10, 30)
    if p_rsvp_ms == 20:
        return (25, 75)
    return (5, 15)   # non-standard intervals fall back to the long-period range


def max_reservation_horizon_ms(p_rsvp_ms: int) -> int:
    """Largest horizon p*(c_resel - 1) a reservation at this period can span."""
    _, hi = slrrc_range(p_rsvp_ms)
    return p_rsvp_ms * (10 * hi - 1)


@dataclass
class SpsConfig:
    t1: int = 1                    # report window offset, <= 4 subframes
    t2: int = 100                  # latency bound, 20..100 subframes
    p_rsvp_ms: int = 100
    p_step_ms: int = 100           # sensing window = 10 * p_step
    th_sps_dbm: float = -80.0
    p_resel: float = 0.0
    harq_enabled: bool = False
    max_missed_opportunities: int = 1
    allowed_p_rsvp: tuple[int, ...] = DEFAULT_RESERVATION_PERIODS

    def validate(self) -> None:
        if not 1 <= self.t1 <= 4:
            raise ValueError(f"t1={self.t1} must be within 1..4")
        if not 20 <= self.t2 <= 100:
            raise ValueError(f"t2={self.t2} must be within 20..100")
        if self.p_rsvp_ms <= 0 or self.p_step_ms <= 0:
            raise ValueError("p_rsvp_ms and p_step_ms must be positive")
        if not 0.0 <= self.p_resel <= 1.0:
            raise ValueError(f"p_resel={self.p_resel} must be within [0, 1]")
        if self.max_missed_opportunities < 0:
            raise ValueError("max_missed_opportunities must be >= 0")

    @property
    def sensing_window(self) -> int:
        return 10 * self.p_step_ms


@dataclass
class SpsState:
    """Per-UE reservation bookkeeping."""

    slrrc: int = 0
    c_resel: int = 0
    grant: Csr | None = None           # anchor occurrence of the recurring set
    harq_grant: Csr | None = None      # optional second recurring set
    next_occurrence: int = -1
    next_harq: int = -1
    last_tx: int = -1
    reserved_at: int = -1
    missed: int = 0
    epoch: int = 0                     # bumped on every (re)selection

    @property
    def harq_offset(self) -> int | None:
        if self.harq_grant is None or self.grant is None:
            return None
        return self.harq_grant.subframe - self.grant.subframe

    def reservation_horizon_ms(self, p_rsvp_ms: int) -> int:
        return p_rsvp_ms * (self.c_resel - 1)


@dataclass
class CandidateSet:
    initial_count: int
    survivors: list[Csr]
    final_threshold_dbm: float


def build_report_window(n: int, cfg: SpsConfig, grid: GridConfig) -> list[Csr]:
    """All candidate resources in [n+t1, n+t2] with starts on l_subch multiples."""
    out = []
    for y in range(n + cfg.t1, n + cfg.t2 + 1):
        for x in grid.csr_starts:
            out.append(Csr(y, x, grid.l_subch))
    return out


def exempt(candidates: list[Csr], record: SensingRecord, cfg: SpsConfig,
           now: int) -> CandidateSet:
    """Apply both exemption conditions with the 20% floor / +3 dB loop.

    A candidate R(x, y) is removed when (1) an unmonitored sensing-window
    subframe could host a reservation at any allowed period that projects
    onto y, or (2) a decoded control+data reception at or above the current
    threshold projects onto y at its signaled period with sub-channel overlap.
    The loop raises the threshold by 3 dB until at least 20% of the initial
    candidates survive; with no sensed reservations left to exempt it stops
    even below the floor (pure half-duplex residue).
    """
    if not candidates:
        return CandidateSet(0, [], cfg.th_sps_dbm)
    subframes = np.array([c.subframe for c in candidates])
    starts = np.array([c.start_subch for c in candidates])
    lengths = np.array([c.l_subch for c in candidates])

    # Condition 1: any-sub-channel exemption by unmonitored subframes.
    c1 = np.zeros(len(candidates), dtype=bool)
    unmon = record.unmonitored_subframes(now)
    if unmon.size:
        diff = subframes[:, None] - unmon[None, :]
        for p in cfg.allowed_p_rsvp:
            hor = max_reservation_horizon_ms(p)
            hit = (diff > 0) & (diff % p == 0) & (diff <= hor)
            c1 |= hit.any(axis=1)

    # Condition 2: per-candidate max RSRP among projecting reservations,
    # batched over all decoded entries at once.  Entries sharing projection
    # residue, period and sub-channels hit identical candidates whenever the
    # horizon cap cannot bite, so they collapse to their strongest member.
    max_rsrp = np.full(len(candidates), -np.inf)
    y_max = int(subframes.max())
    y_min = int(subframes.min())
    grouped: dict[tuple, tuple[int, float]] = {}
    extra: list[tuple[int, int, int, int, float]] = []
    for e in record.sci_entries(now):
        rsrp = float(e.rsrp_dbm[record.ue])
        if not math.isfinite(rsrp):
            continue
        hor = max_reservation_horizon_ms(e.p_rsvp_ms)
        if y_max - e.subframe <= hor and y_min > e.subframe:
            key = (e.subframe % e.p_rsvp_ms, e.p_rsvp_ms, e.start_subch, e.l_subch)
            prev = grouped.get(key)
            if prev is None or rsrp > prev[1]:
                grouped[key] = (e.subframe, rsrp)
        else:
            extra.append((e.subframe, e.p_rsvp_ms, e.start_subch, e.l_subch, rsrp))
    heard = extra + [(w, key[1], key[2], key[3], r)
                     for key, (w, r) in grouped.items()]
    if heard:
        w, period, e_start, e_len, rsrp = (np.array(col) for col in zip(*heard))
        horizon = np.array([max_reservation_horizon_ms(int(p)) for p in period])
        d = subframes[:, None] - w[None, :]
        hits = (d > 0) & (d % period[None, :] == 0) & (d <= horizon[None, :])
        hits &= ((starts[:, None] < (e_start + e_len)[None, :])
                 & (e_start[None, :] < (starts + lengths)[:, None]))
        masked = np.where(hits, rsrp[None, :], -np.inf)
        max_rsrp = masked.max(axis=1)

    need = -(-len(candidates) // 5)          # ceil(20%)
    non_c1 = int((~c1).sum())
    threshold = cfg.th_sps_dbm
    while True:
        alive = ~c1 & (max_rsrp < threshold)
        count = int(alive.sum())
        if count >= need or count == non_c1:
            break
        threshold += 3.0
    survivors = [c for c, ok in zip(candidates, alive) if ok]
    return CandidateSet(len(candidates), survivors, threshold)


def ranking_metric(candidates: list[Csr], record: SensingRecord,
                   cfg: SpsConfig, now: int) -> np.ndarray:
    """Linear average of sub-channel S-RSSI over the ten p_step lookbacks.

    Lookback subframes the UE did not monitor (own transmissions, or slots not
    yet observed) contribute the record's recent average S-RSSI instead.
    """
    f = record.field
    subframes = np.array([c.subframe for c in candidates])
    lookback = subframes[:, None] - cfg.p_step_ms * np.arange(1, 11)[None, :]
    ring = lookback % f.window
    observed = (lookback < f.next_subframe) & f.monitored[record.ue, ring]
    rssi = f.rssi_mw[record.ue][ring]                    # (n_cand, 10, n_subch)

    mask = np.zeros((len(candidates), f.n_subch))
    for i, c in enumerate(candidates):
        mask[i, c.start_subch:c.start_subch + c.l_subch] = 1.0
    sums = np.einsum("cis,cs->ci", rssi, mask)
    substitute = record.average_rssi_mw(now) * np.array([c.l_subch for c in candidates])
    sums = np.where(observed, sums, substitute[:, None])
    return sums.mean(axis=1)


def rank_select(cset: CandidateSet, record: SensingRecord, cfg: SpsConfig,
                now: int) -> list[Csr]:
    """Lowest-metric fifth of the original window, ties by (subframe, start)."""
    if not cset.survivors:
        raise SchedulingError("rank_select called with no surviving candidates")
    energy = ranking_metric(cset.survivors, record, cfg, now)
    subframes = np.array([c.subframe for c in cset.survivors])
    starts = np.array([c.start_subch for c in cset.survivors])
    order = np.lexsort((starts, subframes, energy))
    n_sel = min(len(cset.survivors), -(-cset.initial_count // 5))
    return [cset.survivors[i] for i in order[:n_sel]]


class Trigger(Enum):
    FRESH = "fresh"                  # never reserved (also covers the 1 s rule)
    COUNTER = "counter"              # reselection counter reached zero
    INACTIVITY = "inactivity"        # no transmission within the last second
    MISSED = "missed"                # too many skipped opportunities
    LATENCY = "latency"              # next opportunity beyond the latency bound
    CAPACITY = "capacity"            # grant cannot carry the pending data unit


def check_triggers(state: SpsState, now: int, cfg: SpsConfig,
                   pdu_bits: int, grant_capacity_bits: int) -> Trigger | None:
    """First matching (re)selection trigger at a packet arrival, or None."""
    if state.grant is None:
        return Trigger.FRESH
    if state.slrrc == 0:
        return Trigger.COUNTER
    anchor = max(state.last_tx, state.reserved_at)
    if now - anchor > 1000:
        return Trigger.INACTIVITY
    if state.missed > cfg.max_missed_opportunities:
        return Trigger.MISSED
    if state.next_occurrence - now > cfg.t2:
        return Trigger.LATENCY
    if pdu_bits > grant_capacity_bits:
        return Trigger.CAPACITY
    return None


def reserve(s_b: list[Csr], cfg: SpsConfig, rng, state: SpsState, now: int) -> SpsState:
    """Pick a grant uniformly from s_b and start a fresh reservation."""
    if not s_b:
        raise SchedulingError("cannot reserve from an empty candidate list")
    grant = s_b[int(rng.integers(len(s_b)))]
    lo, hi = slrrc_range(cfg.p_rsvp_ms)
    state.slrrc = int(rng.integers(lo, hi + 1))
    state.c_resel = 10 * state.slrrc
    state.grant = grant
    state.next_occurrence = grant.subframe
    state.harq_grant = None
    state.next_harq = -1
    if cfg.harq_enabled:
        near = [c for c in s_b if 1 <= abs(c.subframe - grant.subframe) <= 15]
        if near:
            state.harq_grant = near[int(rng.integers(len(near)))]
            state.next_harq = state.harq_grant.subframe
            while state.next_harq <= now:
                state.next_harq += cfg.p_rsvp_ms
    state.reserved_at = now
    state.missed = 0
    state.epoch += 1
    return state


def on_transmit(state: SpsState, t: int) -> SpsState:
    """Counter decrement and activity bookkeeping for one packet transmission."""
    state.slrrc = max(0, state.slrrc - 1)
    state.last_tx = t
    return state


def on_miss(state: SpsState) -> SpsState:
    state.missed += 1
    return state


class Action(Enum):
    KEEP = "keep"
    RESELECT = "reselect"


def on_expiry(state: SpsState, cfg: SpsConfig, rng) -> Action:
    """Keep-or-reselect lottery when the counter has expired.

    Keeping retains the granted resources and redraws the counter; the caller
    performs the actual reselection otherwise.
    """
    if state.slrrc != 0:
        raise SchedulingError("on_expiry called with a live counter")
    if rng.random() < cfg.p_resel:
        return Action.RESELECT
    lo, hi = slrrc_range(cfg.p_rsvp_ms)
    state.slrrc = int(rng.integers(lo, hi + 1))
    state.c_resel = 10 * state.slrrc
    state.missed = 0
    return Action.KEEP
