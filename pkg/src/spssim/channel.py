"""Highway propagation from the Fowlerville proving-ground measurement fit.

Large-scale loss is a distance-binned two-ray model; small-scale fading is
Nakagami-m (per-bin shape) out to 639 m and Weibull (k = 1.4) beyond, both
normalized to unit mean power so the binned exponents carry all of the mean
attenuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# Guard against the exact two-ray interference nulls (log of zero).
_MIN_RAY_SUM = 1e-12


class ChannelError(ValueError):
    """Invalid channel configuration or out-of-domain distance."""


@dataclass(frozen=True)
class FadingBin:
    d_low: float       # exclusive
    d_high: float      # inclusive; inf for the tail bin
    alpha: float
    nakagami_m: float | None = None   # None -> Weibull tail


@dataclass(frozen=True)
class PathLossTable:
    bins: tuple[FadingBin, ...]
    weibull_k: float = 1.4

    def __post_init__(self):
        if not self.bins:
            raise ChannelError("path-loss table needs at least one bin")
        prev_high = 0.0
        prev_alpha = -math.inf
        for i, b in enumerate(self.bins):
            if b.d_low != prev_high:
                raise ChannelError(
                    f"bins must tile (0, inf) contiguously; gap at {b.d_low}"
                )
            if b.d_high <= b.d_low:
                raise ChannelError(f"empty bin ({b.d_low}, {b.d_high}]")
            # Exponents grow with distance beyond the near-field bin; the
            # first bin may sit above the trend (free-space near range).
            if i >= 2 and b.alpha < prev_alpha:
                raise ChannelError("path-loss exponents must be non-decreasing")
            prev_high = b.d_high
            prev_alpha = b.alpha
        if not math.isinf(self.bins[-1].d_high):
            raise ChannelError("last bin must extend to infinity")
        if self.weibull_k <= 0:
            raise ChannelError("weibull_k must be positive")

    @classmethod
    def fowlerville(cls) -> "PathLossTable":
        """Default measurement fit; the 1-8 m near range uses free-space alpha=2."""
        return cls(bins=(
            FadingBin(0.0, 8.0, 2.00, 2.272),
            FadingBin(8.0, 45.0, 1.71, 1.340),
            FadingBin(45.0, 111.0, 1.77, 1.438),
            FadingBin(111.0, 400.0, 1.85, 1.357),
            FadingBin(400.0, 639.0, 1.88, 1.000),
            FadingBin(639.0, math.inf, 1.90, None),
        ))

    def bin_for(self, d: float) -> FadingBin:
        if d <= 0:
            raise ChannelError(f"distance must be positive, got {d}")
        for b in self.bins:
            if d <= b.d_high:
                return b
        raise AssertionError("unreachable: last bin extends to infinity")

    # Vector lookups used by the engine's precomputed pair matrices.

    def _edges(self) -> np.ndarray:
        return np.array([b.d_high for b in self.bins])

    def alpha_array(self, d: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._edges(), d, side="left")
        return np.array([b.alpha for b in self.bins])[idx]

    def nakagami_m_array(self, d: np.ndarray) -> np.ndarray:
        """Per-distance m shape; NaN marks the Weibull tail."""
        ms = np.array([b.nakagami_m if b.nakagami_m is not None else np.nan
                       for b in self.bins])
        idx = np.searchsorted(self._edges(), d, side="left")
        return ms[idx]


@dataclass(frozen=True)
class TwoRayParams:
    carrier_hz: float = 5.86e9
    antenna_height_m: float = 1.5
    reflection_coeff: float = -1.0   # ground bounce, perfect-conductor limit

    def __post_init__(self):
        if self.carrier_hz <= 0 or self.antenna_height_m <= 0:
            raise ChannelError("carrier and antenna height must be positive")
        if abs(self.reflection_coeff) > 1.0:
            raise ChannelError("|reflection coefficient| must be <= 1")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz


def alpha_for_distance(d: float, table: PathLossTable) -> float:
    """Path-loss exponent of the bin containing d."""
    return table.bin_for(d).alpha


def two_ray_phase(d, params: TwoRayParams):
    """Phase difference between direct and ground-reflected rays."""
    h2 = (2.0 * params.antenna_height_m) ** 2
    delta = np.sqrt(np.square(d) + h2) - d
    return 2.0 * np.pi * delta / params.wavelength_m


def large_scale_loss(d, params: TwoRayParams, table: PathLossTable):
    """Deterministic two-ray loss in dB: 10*alpha*log10(4*pi*d/lambda / |1+G e^{i phi}|).

    Accepts scalars or arrays; arrays use the table's vector alpha lookup.
    """
    arr = np.asarray(d, dtype=float)
    if np.any(arr <= 0):
        raise ChannelError("distance must be positive")
    alpha = table.alpha_array(arr) if arr.ndim else alpha_for_distance(float(arr), table)
    phi = two_ray_phase(arr, params)
    ray_sum = np.abs(1.0 + params.reflection_coeff * np.exp(1j * phi))
    ray_sum = np.maximum(ray_sum, _MIN_RAY_SUM)
    loss = 10.0 * alpha * np.log10(4.0 * np.pi * arr / params.wavelength_m / ray_sum)
    return float(loss) if np.isscalar(d) or np.ndim(d) == 0 else loss


def small_scale_gain(d: float, table: PathLossTable, rng) -> float:
    """One unit-mean power-gain draw for a link at distance d."""
    b = table.bin_for(d)
    if b.nakagami_m is not None:
        m = b.nakagami_m
        return float(rng.gamma(m, 1.0 / m))
    k = table.weibull_k
    return float(rng.weibull(k) / math.gamma(1.0 + 1.0 / k))


def small_scale_gain_array(d: float, table: PathLossTable, rng,
                           size: int) -> np.ndarray:
    """Vector of independent unit-mean power-gain draws at one distance."""
    b = table.bin_for(d)
    if b.nakagami_m is not None:
        m = b.nakagami_m
        return rng.gamma(m, 1.0 / m, size)
    k = table.weibull_k
    return rng.weibull(k, size) / math.gamma(1.0 + 1.0 / k)


def link_loss(d: float, params: TwoRayParams, table: PathLossTable, rng) -> float:
    """Large-scale loss minus the dB fading gain; one draw per call."""
    gain = small_scale_gain(d, table, rng)
    return large_scale_loss(d, params, table) - 10.0 * math.log10(gain)
