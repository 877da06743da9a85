"""Per-UE transceiver model: link budget, SINR, BLER-draw decoding,
half-duplex gating and the rolling channel-sensing record."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from spssim.grid import SUBCARRIERS_PER_RB


class PhyError(ValueError):
    """Invalid transceiver configuration."""


@dataclass
class RadioConfig:
    tx_power_dbm: float = 23.0
    antenna_gain_dbi: float = 3.0        # per end
    noise_figure_db: float = 9.0
    rx_antennas: int = 2                 # folded into the BLER curve
    thermal_noise_dbm_hz: float = -174.0
    rb_bandwidth_hz: float = 180e3
    # Control-message decoding: heavily coded QPSK, modeled as a sensitivity
    # floor plus a fixed SINR threshold rather than a second error curve.
    sci_sensitivity_dbm: float = -107.0
    sci_sinr_threshold_db: float = 0.0
    sci_always_decodable: bool = False

    def __post_init__(self):
        for name in ("tx_power_dbm", "antenna_gain_dbi", "noise_figure_db",
                     "thermal_noise_dbm_hz", "rb_bandwidth_hz"):
            if not math.isfinite(getattr(self, name)):
                raise PhyError(f"{name} must be finite")
        if self.rb_bandwidth_hz <= 0:
            raise PhyError("rb_bandwidth_hz must be positive")


def received_power(cfg: RadioConfig, loss_db: float) -> float:
    """Link budget in dBm: transmit power plus both antenna gains minus loss."""
    return cfg.tx_power_dbm + 2.0 * cfg.antenna_gain_dbi - loss_db


def noise_floor(n_rb: int, cfg: RadioConfig) -> float:
    """Thermal noise plus noise figure over n_rb resource blocks, in dBm."""
    if n_rb < 1:
        raise PhyError("n_rb must be >= 1")
    return (cfg.thermal_noise_dbm_hz
            + 10.0 * math.log10(n_rb * cfg.rb_bandwidth_hz)
            + cfg.noise_figure_db)


def sinr(signal_dbm: float, interferers_dbm, noise_dbm: float) -> float:
    """Linear-domain signal over (sum of interferers + noise), returned in dB."""
    denom_mw = 10.0 ** (noise_dbm / 10.0)
    for p in interferers_dbm:
        denom_mw += 10.0 ** (p / 10.0)
    return signal_dbm - 10.0 * math.log10(denom_mw)


class BlerCurve:
    """Monotone SINR -> block-error-rate map with log-linear interpolation.

    Outside the tabulated span the curve clamps to 1.0 (low SINR) and 0.0
    (high SINR).
    """

    def __init__(self, sinr_db, bler):
        s = np.asarray(sinr_db, dtype=float)
        b = np.asarray(bler, dtype=float)
        if s.size < 2 or s.shape != b.shape:
            raise PhyError("BLER curve needs >= 2 (sinr, bler) points")
        if np.any(np.diff(s) <= 0):
            raise PhyError("BLER curve SINR points must be strictly increasing")
        if np.any(np.diff(b) > 0):
            raise PhyError("BLER curve must be non-increasing")
        if np.any((b < 0) | (b > 1)):
            raise PhyError("BLER values must lie in [0, 1]")
        self.sinr_db = s
        self._log_bler = np.log10(np.clip(b, 1e-300, 1.0))

    @classmethod
    def from_text(cls, text: str) -> "BlerCurve":
        xs, ys = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise PhyError(f"malformed BLER curve line: {line!r}")
            xs.append(float(parts[0]))
            ys.append(float(parts[1]))
        return cls(xs, ys)

    def bler(self, sinr_db):
        """Scalar or vector lookup."""
        x = np.asarray(sinr_db, dtype=float)
        out = 10.0 ** np.interp(x, self.sinr_db, self._log_bler)
        out = np.where(x < self.sinr_db[0], 1.0, out)
        out = np.where(x > self.sinr_db[-1], 0.0, out)
        return float(out) if np.ndim(sinr_db) == 0 else out


def default_bler_curve() -> BlerCurve:
    text = resources.files("spssim.data").joinpath("bler_qpsk.txt").read_text()
    return BlerCurve.from_text(text)


def decode(sinr_db: float, curve: BlerCurve, rng) -> bool:
    """One Bernoulli decode attempt: lost iff bler(sinr) exceeds a U(0,1) draw."""
    return curve.bler(sinr_db) <= rng.random()


def half_duplex_gate(ue: int, transmitters) -> bool:
    """True when the UE may receive in this subframe (it is not transmitting)."""
    return ue not in transmitters


@dataclass
class SciEntry:
    """One control message placed in a subframe, with per-receiver outcomes."""

    tx: int
    subframe: int
    start_subch: int
    l_subch: int
    p_rsvp_ms: int
    retransmission: bool
    rsrp_dbm: np.ndarray      # per-receiver reference signal power
    decoded: np.ndarray       # per-receiver bool


class SensingField:
    """Rolling per-UE channel record over the last `window` subframes.

    Holds per-sub-channel S-RSSI (linear mW, noise included), monitored flags
    (false where the UE transmitted) and the control messages each UE decoded.
    Slots start prefilled as an idle, monitored channel so schedulers can run
    before a full window has elapsed.
    """

    def __init__(self, n_ues: int, n_subch: int, window: int, noise_subch_mw: float,
                 prefill_rng=None):
        self.n_ues = n_ues
        self.n_subch = n_subch
        self.window = window
        self.noise_subch_mw = noise_subch_mw
        self.rssi_mw = np.full((n_ues, window, n_subch), noise_subch_mw, dtype=float)
        if prefill_rng is not None:
            # pre-simulation history: idle channel with measurement jitter, so
            # cold-start rankings do not tie exactly across every candidate
            jitter_db = 0.1 * prefill_rng.standard_normal(self.rssi_mw.shape)
            self.rssi_mw *= 10.0 ** (jitter_db / 10.0)
        self.monitored = np.ones((n_ues, window), dtype=bool)
        self.sci_slots: list[list[SciEntry]] = [[] for _ in range(window)]
        self.next_subframe = 0   # first subframe not yet recorded

    def record_subframe(self, t: int, rx_subch_mw: np.ndarray,
                        transmitting: np.ndarray, entries: list[SciEntry]) -> None:
        """Store subframe t: rx_subch_mw is (n_ues, n_subch) received power
        excluding noise; transmitting marks half-duplex UEs."""
        assert t == self.next_subframe, "subframes must be recorded in order"
        s = t % self.window
        self.rssi_mw[:, s, :] = rx_subch_mw + self.noise_subch_mw
        self.monitored[:, s] = ~transmitting
        self.sci_slots[s] = entries
        self.next_subframe = t + 1

    def record(self, ue: int) -> "SensingRecord":
        return SensingRecord(self, ue)


class SensingRecord:
    """One UE's view of the shared sensing field."""

    def __init__(self, field: SensingField, ue: int):
        self.field = field
        self.ue = ue

    @property
    def window(self) -> int:
        return self.field.window

    def monitored_at(self, subframe: int) -> bool:
        f = self.field
        if not f.next_subframe - f.window <= subframe < f.next_subframe:
            return subframe < f.next_subframe   # prefilled idle past is monitored
        return bool(f.monitored[self.ue, subframe % f.window])

    def rssi_at(self, subframe: int) -> np.ndarray:
        """Per-sub-channel S-RSSI (mW) for a monitored in-window subframe."""
        return self.field.rssi_mw[self.ue, subframe % self.field.window, :]

    def unmonitored_subframes(self, now: int) -> np.ndarray:
        """Absolute subframes in [now - window, now - 1] this UE did not monitor."""
        f = self.field
        subframes = np.arange(now - f.window, now)
        mon = f.monitored[self.ue, subframes % f.window].copy()
        mon |= subframes >= f.next_subframe   # unwritten slots count as idle
        return subframes[~mon]

    def sci_entries(self, now: int):
        """Decoded control entries in [now - window, now - 1], with own RSRP."""
        f = self.field
        for s in range(max(0, now - f.window), now):
            for e in f.sci_slots[s % f.window]:
                if e.subframe == s and e.decoded[self.ue]:
                    yield e

    def average_rssi_mw(self, now: int) -> float:
        """Mean monitored per-sub-channel S-RSSI; substitute for gaps in the
        ranking metric.  Falls back to the noise floor when nothing was heard."""
        f = self.field
        subframes = np.arange(now - f.window, now)
        idx = subframes % f.window
        mon = f.monitored[self.ue, idx] | (subframes >= f.next_subframe)
        if not mon.any():
            return f.noise_subch_mw
        return float(f.rssi_mw[self.ue, idx[mon], :].mean())
