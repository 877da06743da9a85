"""Highway platoon geometry and periodic safety-beacon traffic."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


class ScenarioError(ValueError):
    """Invalid scenario configuration."""


class EdgeMode(Enum):
    OPEN = "open"    # straight road, metrics restricted to the central stretch
    RING = "ring"    # wrap-around road, no platoon edges


@dataclass(frozen=True)
class OffsetMode:
    """Packet-generation phase policy: synchronized or uniform in 0..max_ms."""

    max_ms: int = 0

    @classmethod
    def synchronized(cls) -> "OffsetMode":
        return cls(0)

    @classmethod
    def uniform(cls, max_ms: int) -> "OffsetMode":
        return cls(max_ms)

    @property
    def is_synchronized(self) -> bool:
        return self.max_ms == 0

    def __str__(self) -> str:
        return "synchronized" if self.max_ms == 0 else f"uniform:{self.max_ms}"

    @classmethod
    def parse(cls, text: str) -> "OffsetMode":
        text = text.strip().lower()
        if text == "synchronized":
            return cls.synchronized()
        if text.startswith("uniform:"):
            return cls.uniform(int(text.split(":", 1)[1]))
        raise ScenarioError(f"offset_mode must be 'synchronized' or 'uniform:<ms>', got {text!r}")


# Congestion presets: (vehicles per km per lane, speed km/h).
PRESETS = {
    "s1": (12.5, 140.0),
    "s2": (25.0, 70.0),
    "s3": (50.0, 60.0),
    "s4": (100.0, 15.0),
}


@dataclass
class ScenarioConfig:
    lanes: int = 4
    lane_spacing_m: float = 3.0
    road_length_m: float = 2000.0
    density_per_km_lane: float = 25.0
    speed_kmh: float = 70.0
    t_gen_ms: int = 100
    packet_bytes: int = 190
    sim_time_s: float = 100.0
    offset_mode: OffsetMode = OffsetMode.uniform(99)
    # Application bring-up is spread over this many generation periods: radios
    # listen through their sensing warm-up instead of all selecting resources
    # in one cold burst.  The periodic phase law is untouched.
    start_stagger_cycles: int = 30
    edge_mode: EdgeMode = EdgeMode.OPEN
    measurement_window_m: float = 1000.0

    def validate(self) -> None:
        if self.lanes < 1 or self.road_length_m <= 0:
            raise ScenarioError("lanes and road_length_m must be positive")
        if self.density_per_km_lane < 0:
            raise ScenarioError("density must be >= 0")
        if self.t_gen_ms <= 0 or self.sim_time_s <= 0:
            raise ScenarioError("t_gen_ms and sim_time_s must be positive")
        if self.packet_bytes <= 0:
            raise ScenarioError("packet_bytes must be positive")
        if self.start_stagger_cycles < 0:
            raise ScenarioError("start_stagger_cycles must be >= 0")
        if not 0 <= self.offset_mode.max_ms < self.t_gen_ms:
            raise ScenarioError(
                f"offset_mode max {self.offset_mode.max_ms} must be below "
                f"t_gen_ms={self.t_gen_ms}"
            )
        if not 0 < self.measurement_window_m <= self.road_length_m:
            raise ScenarioError("measurement window must fit within the road")

    @property
    def vehicle_count(self) -> int:
        return round(self.density_per_km_lane * self.lanes * self.road_length_m / 1000.0)

    @property
    def speed_mps(self) -> float:
        return self.speed_kmh / 3.6

    def central_interval(self) -> tuple[float, float]:
        lo = (self.road_length_m - self.measurement_window_m) / 2.0
        return lo, lo + self.measurement_window_m


@dataclass(frozen=True)
class Vehicle:
    id: int
    lane: int
    position_m: float      # longitudinal, within [0, road_length)
    speed_mps: float
    phase_ms: int          # packet-generation offset within [0, t_gen)
    start_ms: int = -1     # first emission; phase_ms when the app starts at once

    def __post_init__(self):
        if self.start_ms < 0:
            object.__setattr__(self, "start_ms", self.phase_ms)


def spawn(cfg: ScenarioConfig, rng) -> list[Vehicle]:
    """Evenly spaced vehicles per lane with per-policy generation phases."""
    total = cfg.vehicle_count
    per_lane = [total // cfg.lanes] * cfg.lanes
    for i in range(total % cfg.lanes):
        per_lane[i] += 1
    vehicles = []
    vid = 0
    for lane, count in enumerate(per_lane):
        if count == 0:
            continue
        spacing = cfg.road_length_m / count
        # lanes are staggered by a fraction of the spacing so pair distances
        # sample the road continuously instead of locking to one lattice
        stagger = spacing * lane / cfg.lanes
        for j in range(count):
            if cfg.offset_mode.is_synchronized:
                phase = 0
            else:
                phase = int(rng.integers(0, cfg.offset_mode.max_ms + 1))
            start = phase
            if cfg.start_stagger_cycles > 0:
                start += cfg.t_gen_ms * int(rng.integers(0, cfg.start_stagger_cycles))
            pos = (j * spacing + stagger) % cfg.road_length_m
            vehicles.append(Vehicle(vid, lane, pos, cfg.speed_mps, phase, start))
            vid += 1
    return vehicles


def advance(vehicles: list[Vehicle], dt_s: float, road_length_m: float) -> list[Vehicle]:
    """Rigid platoon translation with wrap-around on the road length."""
    if dt_s <= 0:
        raise ScenarioError("dt must be positive")
    return [replace(v, position_m=(v.position_m + v.speed_mps * dt_s) % road_length_m)
            for v in vehicles]


def next_packet_due(vehicle: Vehicle, t_ms: int, t_gen_ms: int) -> bool:
    """True when the vehicle emits a beacon at millisecond t."""
    return t_ms >= vehicle.start_ms and (t_ms - vehicle.phase_ms) % t_gen_ms == 0


def effective_offset(t_offset: int, t2: int) -> int:
    """Worst-case report-window overlap of two UEs offset by t_offset."""
    if not 0 <= t_offset <= t2:
        raise ScenarioError(f"t_offset {t_offset} must be within [0, {t2}]")
    return max(t_offset, t2 - t_offset)


def pairwise_distances(vehicles: list[Vehicle], cfg: ScenarioConfig) -> np.ndarray:
    """Static distance matrix of the rigid platoon (lane offsets included)."""
    x = np.array([v.position_m for v in vehicles])
    y = np.array([v.lane for v in vehicles]) * cfg.lane_spacing_m
    dx = np.abs(x[:, None] - x[None, :])
    if cfg.edge_mode is EdgeMode.RING:
        dx = np.minimum(dx, cfg.road_length_m - dx)
    dy = y[:, None] - y[None, :]
    return np.hypot(dx, dy)


def central_membership(vehicles: list[Vehicle], cfg: ScenarioConfig,
                       t_ms: int = 0) -> np.ndarray:
    """Which vehicles sit inside the measurement window.

    On the open road the platoon is rigid, so membership follows the initial
    (platoon-frame) positions and is time-invariant; on the ring it tracks the
    wrapped position at time t.
    """
    lo, hi = cfg.central_interval()
    if cfg.edge_mode is EdgeMode.OPEN:
        pos = np.array([v.position_m for v in vehicles])
    else:
        pos = np.array([(v.position_m + v.speed_mps * t_ms / 1000.0) % cfg.road_length_m
                        for v in vehicles])
    return (pos >= lo) & (pos <= hi)
