"""Subframe-granularity event loop.

Per subframe the phases run in fixed order: traffic arrivals, MAC
trigger/reservation decisions (sensing data through t-1 only), transmission
placement, propagation and decoding, sensing-record update, metrics.  All
randomness comes from named per-(UE, purpose) streams derived from the master
seed, so equal (config, seed) pairs reproduce bit-identical outputs.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from spssim import channel as chan
from spssim import metrics as met
from spssim import phy
from spssim import scenario as scen
from spssim import sps
from spssim.grid import SCI_RBS


class SimInvariantError(RuntimeError):
    """A runtime conservation or causality invariant was violated."""


RNG_PURPOSES = ("fading", "mac", "decode", "traffic", "prefill")


class RngPlan:
    """Named independent streams per (UE, purpose), reproducible from one seed."""

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)

    def stream(self, ue: int, purpose: str) -> np.random.Generator:
        code = RNG_PURPOSES.index(purpose)
        ss = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(ue, code))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class _Packet:
    seq: int
    arrival: int
    attempts_done: int = 0
    attempts_total: int = 1
    scope: np.ndarray | None = None      # receiver indices counted for this packet
    dist: np.ndarray | None = None
    decoded: np.ndarray | None = None    # aligned with scope
    blocked: np.ndarray | None = None    # half-duplex on every attempt so far
    rx_time: np.ndarray | None = None


@dataclass
class _UeMac:
    state: sps.SpsState = field(default_factory=sps.SpsState)
    pending: deque = field(default_factory=deque)
    seq: int = 0


@dataclass
class _Tx:
    ue: int
    start_subch: int
    rb_lo: int
    rb_hi: int
    pkt: _Packet
    is_harq: bool
    first_attempt: bool
    rx_mw: np.ndarray | None = None


@dataclass
class TraceRow:
    subframe: int
    ue: int
    event: str
    grant_subframe: int
    start_subch: int
    l_subch: int
    slrrc: int
    threshold_dbm: float | None


@dataclass
class RunResult:
    summary: dict
    per_bins: list[met.PerBin]
    ipg: met.IpgHistogram
    acc: met.MetricsAccumulator
    trace: list[TraceRow]


class Simulation:
    """One seeded run of the configured scenario."""

    def __init__(self, cfg):
        cfg.validate()
        self.cfg = cfg
        self.grid = cfg.grid
        self.radio = cfg.radio
        self.sps_cfg = cfg.sps
        self.scn = cfg.scenario
        self.rng_plan = RngPlan(cfg.seed)
        self.horizon = int(round(self.scn.sim_time_s * 1000))

        self.vehicles = scen.spawn(self.scn, self.rng_plan.stream(0, "traffic"))
        self.n = len(self.vehicles)
        self.trace: list[TraceRow] = []
        self.acc = met.MetricsAccumulator(
            self.n, cfg.metrics.distance_bin_m, cfg.metrics.max_range_m)
        self.pdu_bits = self.scn.packet_bytes * 8
        self.tb_capacity_bits = self.grid.tb_bits()
        if self.n == 0:
            return

        table = cfg.channel.path_loss_table
        params = cfg.channel.two_ray_params
        dist = scen.pairwise_distances(self.vehicles, self.scn)
        dist_safe = dist.copy()
        np.fill_diagonal(dist_safe, 1.0)   # diagonal masked out below
        loss = chan.large_scale_loss(dist_safe, params, table)
        rx_dbm = phy.received_power(self.radio, loss)
        self.p_mw = 10.0 ** (rx_dbm / 10.0)
        np.fill_diagonal(self.p_mw, 0.0)
        self.dist = dist

        m = table.nakagami_m_array(dist_safe)
        self.far_mask = np.isnan(m)
        self.m_shape = np.where(self.far_mask, 1.0, m)
        self.weibull_k = table.weibull_k
        self.weibull_norm = 1.0 / math.gamma(1.0 + 1.0 / table.weibull_k)

        n_tb = self.grid.n_pssch_rb
        self.tx_rbs = SCI_RBS + n_tb
        self.f_tb = n_tb / self.tx_rbs
        self.f_sci = SCI_RBS / self.tx_rbs
        self.noise_tb_mw = 10.0 ** (phy.noise_floor(n_tb, self.radio) / 10.0)
        self.noise_sci_mw = 10.0 ** (phy.noise_floor(SCI_RBS, self.radio) / 10.0)
        noise_sub_mw = 10.0 ** (phy.noise_floor(self.grid.subchannel_size, self.radio) / 10.0)
        self.sens_mw = 10.0 ** (self.radio.sci_sensitivity_dbm / 10.0)
        self.sci_thr_lin = 10.0 ** (self.radio.sci_sinr_threshold_db / 10.0)
        self.rsrp_div = 12.0 * n_tb
        self.bler_curve = cfg.bler_curve

        self.field = phy.SensingField(
            self.n, self.grid.n_subch, self.sps_cfg.sensing_window, noise_sub_mw,
            prefill_rng=self.rng_plan.stream(0, "prefill"))

        self.fading_rngs = [self.rng_plan.stream(u, "fading") for u in range(self.n)]
        self.decode_rngs = [self.rng_plan.stream(u, "decode") for u in range(self.n)]
        self.mac_rngs = [self.rng_plan.stream(u, "mac") for u in range(self.n)]
        self.macs = [_UeMac() for _ in range(self.n)]
        self.schedule: dict[int, list[tuple[int, bool, int]]] = {}

        # Per-sub-channel occupancy fractions per CSR start (adjacent scheme:
        # control + data RBs packed from the CSR's first RB).
        self.subch_frac: dict[int, list[tuple[int, float]]] = {}
        self.rb_span: dict[int, tuple[int, int]] = {}
        size = self.grid.subchannel_size
        for start in self.grid.csr_starts:
            lo = start * size
            hi = lo + self.tx_rbs
            self.rb_span[start] = (lo, hi)
            fracs = []
            for j in range(self.grid.n_subch):
                ov = min(hi, (j + 1) * size) - max(lo, j * size)
                if ov > 0:
                    fracs.append((j, ov / self.tx_rbs))
            self.subch_frac[start] = fracs

        by_phase: dict[int, list[int]] = {}
        for v in self.vehicles:
            by_phase.setdefault(v.phase_ms, []).append(v.id)
        self.by_phase = by_phase

        central = scen.central_membership(self.vehicles, self.scn)
        offdiag = ~np.eye(self.n, dtype=bool)
        in_range = self.dist <= cfg.metrics.max_range_m
        if self.scn.edge_mode is scen.EdgeMode.OPEN:
            in_scope = central[None, :] & in_range & offdiag
            self.scope_idx = [np.nonzero(in_scope[u])[0] for u in range(self.n)]
        else:
            self.scope_idx = None   # ring membership is time-dependent
        self._in_range = in_range & offdiag

    # -- scope ------------------------------------------------------------

    def _scope(self, u: int, t: int) -> np.ndarray:
        if self.scope_idx is not None:
            return self.scope_idx[u]
        central = scen.central_membership(self.vehicles, self.scn, t)
        return np.nonzero(self._in_range[u] & central)[0]

    # -- phases -----------------------------------------------------------

    def _traffic_and_mac(self, t: int) -> None:
        for u in self.by_phase.get(t % self.scn.t_gen_ms, ()):
            if t < self.vehicles[u].start_ms:
                continue
            mac = self.macs[u]
            mac.pending.append(_Packet(mac.seq, t))
            mac.seq += 1
            self.acc.packets_generated += 1
            if len(mac.pending) > 2:
                self._expire(u, mac.pending.popleft(), t)
            st = mac.state
            trig = sps.check_triggers(st, t, self.sps_cfg, self.pdu_bits,
                                      self.tb_capacity_bits)
            if trig is None:
                continue
            if trig is sps.Trigger.COUNTER:
                if sps.on_expiry(st, self.sps_cfg, self.mac_rngs[u]) is sps.Action.KEEP:
                    if self.cfg.trace:
                        g = st.grant
                        self.trace.append(TraceRow(t, u, "keep", g.subframe,
                                                   g.start_subch, g.l_subch,
                                                   st.slrrc, None))
                    continue
            self._reselect(u, t, trig.value)

    def _reselect(self, u: int, t: int, reason: str) -> None:
        mac = self.macs[u]
        # A packet caught between blind-retransmission attempts is settled on
        # whatever attempts it completed before the grant changes.
        for pkt in list(mac.pending):
            if pkt.attempts_done > 0:
                self._resolve(u, pkt, t)
                mac.pending.remove(pkt)
        record = self.field.record(u)
        candidates = sps.build_report_window(t, self.sps_cfg, self.grid)
        cset = sps.exempt(candidates, record, self.sps_cfg, t)
        if cset.survivors:
            s_b = sps.rank_select(cset, record, self.sps_cfg, t)
        else:
            # Half-duplex exemptions alone can, in principle, clear the whole
            # window; fall back to an unassisted random pick.
            s_b = candidates
        st = mac.state
        sps.reserve(s_b, self.sps_cfg, self.mac_rngs[u], st, t)
        self.schedule.setdefault(st.next_occurrence, []).append((u, False, st.epoch))
        if st.harq_grant is not None:
            self.schedule.setdefault(st.next_harq, []).append((u, True, st.epoch))
        if self.cfg.trace:
            g = st.grant
            self.trace.append(TraceRow(t, u, f"select:{reason}", g.subframe,
                                       g.start_subch, g.l_subch, st.slrrc,
                                       cset.final_threshold_dbm))

    def _placement(self, t: int) -> list[_Tx]:
        txs = []
        p = self.sps_cfg.p_rsvp_ms
        for u, is_harq, epoch in self.schedule.pop(t, ()):
            st = self.macs[u].state
            if epoch != st.epoch:
                continue   # superseded by a later reselection
            nxt = t + p
            if is_harq:
                st.next_harq = nxt
            else:
                st.next_occurrence = nxt
            self.schedule.setdefault(nxt, []).append((u, is_harq, epoch))
            mac = self.macs[u]
            if not mac.pending:
                if not is_harq:
                    sps.on_miss(st)
                continue
            pkt = mac.pending[0]
            first = pkt.attempts_done == 0
            if first:
                pkt.attempts_total = 2 if st.harq_grant is not None else 1
            csr = st.harq_grant if is_harq else st.grant
            lo, hi = self.rb_span[csr.start_subch]
            txs.append(_Tx(u, csr.start_subch, lo, hi, pkt, is_harq, first))
            if is_harq:
                st.last_tx = t
            else:
                sps.on_transmit(st, t)
            pkt.attempts_done += 1
            if pkt.attempts_done >= pkt.attempts_total:
                mac.pending.popleft()
        return txs

    def _physics(self, t: int, txs: list[_Tx]) -> None:
        n = self.n
        transmitting = np.zeros(n, dtype=bool)
        for tx in txs:
            transmitting[tx.ue] = True
        rx_subch = np.zeros((n, self.grid.n_subch))
        entries: list[phy.SciEntry] = []

        span_total: dict[tuple[int, int], np.ndarray] = {}
        for tx in txs:
            rng = self.fading_rngs[tx.ue]
            far = self.far_mask[tx.ue]
            near = ~far
            m_row = self.m_shape[tx.ue][near]
            n_far = int(far.sum())
            # post-combining gain: mean of independent per-branch draws
            gain = np.zeros(n)
            for _ in range(self.radio.rx_antennas):
                branch = np.empty(n)
                branch[near] = rng.gamma(m_row, 1.0 / m_row)
                if n_far:
                    branch[far] = rng.weibull(self.weibull_k, n_far) * self.weibull_norm
                gain += branch
            gain /= self.radio.rx_antennas
            tx.rx_mw = self.p_mw[tx.ue] * gain
            for j, frac in self.subch_frac[tx.start_subch]:
                rx_subch[:, j] += tx.rx_mw * frac
            key = (tx.rb_lo, tx.rb_hi)
            if key in span_total:
                span_total[key] = span_total[key] + tx.rx_mw
            else:
                span_total[key] = tx.rx_mw.copy()

        for tx in txs:
            own = tx.rx_mw
            tb_lo, tb_hi = tx.rb_lo + SCI_RBS, tx.rb_hi
            sci_lo, sci_hi = tx.rb_lo, tx.rb_lo + SCI_RBS
            int_tb = np.zeros(n)
            int_sci = np.zeros(n)
            for (lo, hi), total in span_total.items():
                width = hi - lo
                ov_tb = min(hi, tb_hi) - max(lo, tb_lo)
                if ov_tb > 0:
                    int_tb += total * (ov_tb / width)
                ov_sci = min(hi, sci_hi) - max(lo, sci_lo)
                if ov_sci > 0:
                    int_sci += total * (ov_sci / width)
            # remove the signal's own contribution from its interference
            int_tb -= own * self.f_tb
            int_sci -= own * self.f_sci
            np.maximum(int_tb, 0.0, out=int_tb)
            np.maximum(int_sci, 0.0, out=int_sci)

            may_rx = ~transmitting
            may_rx[tx.ue] = False
            sci_pw = own * self.f_sci
            if self.radio.sci_always_decodable:
                sci_ok = may_rx & (own >= self.sens_mw)
            else:
                sci_ok = (may_rx & (sci_pw >= self.sens_mw)
                          & (sci_pw >= self.sci_thr_lin * (int_sci + self.noise_sci_mw)))
            tb_pw = own * self.f_tb
            with np.errstate(divide="ignore"):
                sinr_db = 10.0 * np.log10(tb_pw / (int_tb + self.noise_tb_mw))
                rsrp_dbm = 10.0 * np.log10(tb_pw / self.rsrp_div)
            bler = self.bler_curve.bler(sinr_db)
            draws = self.decode_rngs[tx.ue].random(n)
            tb_ok = sci_ok & (bler <= draws)

            entries.append(phy.SciEntry(tx.ue, t, tx.start_subch, self.grid.l_subch,
                                        self.sps_cfg.p_rsvp_ms, tx.is_harq,
                                        rsrp_dbm, sci_ok))
            self._account(tx, t, tb_ok, transmitting)

        self.field.record_subframe(t, rx_subch, transmitting, entries)

    def _account(self, tx: _Tx, t: int, tb_ok: np.ndarray,
                 transmitting: np.ndarray) -> None:
        pkt = tx.pkt
        if tx.first_attempt:
            scope = self._scope(tx.ue, t)
            pkt.scope = scope
            pkt.dist = self.dist[tx.ue, scope]
            pkt.decoded = tb_ok[scope].copy()
            pkt.blocked = transmitting[scope].copy()
            pkt.rx_time = np.full(scope.size, t, dtype=np.int64)
            self.acc.start_packet(tx.ue, scope, pkt.dist)
        else:
            newly = tb_ok[pkt.scope] & ~pkt.decoded
            pkt.rx_time[newly] = t
            pkt.decoded |= newly
            pkt.blocked &= transmitting[pkt.scope]
        if pkt.attempts_done >= pkt.attempts_total:
            self._resolve(tx.ue, pkt, t)

    def _resolve(self, u: int, pkt: _Packet, t: int) -> None:
        if pkt.scope is None:
            return
        self.acc.resolve_packet(u, pkt.seq, t, pkt.scope, pkt.dist,
                                pkt.decoded, pkt.blocked, pkt.rx_time)
        pkt.scope = None   # guard against double resolution

    def _expire(self, u: int, pkt: _Packet, t: int) -> None:
        if pkt.attempts_done > 0:
            self._resolve(u, pkt, t)
            return
        scope = self._scope(u, t)
        self.acc.expire_packet(u, scope, self.dist[u, scope])

    # -- run --------------------------------------------------------------

    def run(self) -> RunResult:
        if self.n > 0:
            for t in range(self.horizon):
                self._traffic_and_mac(t)
                txs = self._placement(t)
                if __debug__:
                    assert self.field.next_subframe == t, \
                        "MAC phase must precede this subframe's sensing update"
                self._physics(t, txs)
            for u, mac in enumerate(self.macs):
                for pkt in mac.pending:
                    if pkt.attempts_done > 0:
                        self._resolve(u, pkt, self.horizon)
        if not self.acc.conservation_ok():
            raise SimInvariantError(
                "per-link packet accounting violated: expected != "
                "decoded + lost + half_duplex")
        return self._result()

    def _result(self) -> RunResult:
        acc = self.acc
        hist = met.ipg_histogram(acc.ipg_counts, self.cfg.metrics.ipg_bin_ms,
                                 self.cfg.metrics.ipg_cap_ms)
        decoded_total = int(acc.decoded.sum()) if self.n else 0
        expected_total = int(acc.expected.sum()) if self.n else 0
        per_total = acc.per_total()
        summary = {
            "per_total": math.nan if per_total is None else per_total,
            "ipg_mean_ms": hist.mean_ms,
            "ipg_median_ms": hist.median_ms,
            "ipg_p95_ms": hist.p95_ms,
            "ipg_mode_ms": hist.mode_ms,
            "ipg_over_cap_fraction": hist.overflow_freq,
            "ipg_cap_ms": self.cfg.metrics.ipg_cap_ms,
            "data_rate_bps": met.data_rate_bps(decoded_total,
                                               self.scn.packet_bytes,
                                               self.scn.sim_time_s),
            "vehicle_count": self.n,
            "seed": self.cfg.seed,
            "sim_time_s": self.scn.sim_time_s,
            "expected_total": expected_total,
            "decoded_total": decoded_total,
            "lost_total": int(acc.lost.sum()) if self.n else 0,
            "half_duplex_total": int(acc.half_duplex.sum()) if self.n else 0,
            "packets_generated": acc.packets_generated,
            "packets_expired": acc.packets_expired,
        }
        return RunResult(summary, acc.per_curve(), hist, acc, self.trace)


def run(cfg) -> RunResult:
    """Execute one simulation; outputs are a pure function of (config, seed)."""
    return Simulation(cfg).run()
