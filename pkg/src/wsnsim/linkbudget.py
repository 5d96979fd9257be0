"""Radio geometry: two-ray ground propagation, dBm/W conversion, reception rules."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 2.99792458e8  # m/s


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(watts: float) -> float:
    if watts <= 0.0:
        raise ValueError("power must be > 0 W to express in dBm")
    return 10.0 * math.log10(watts * 1e3)


def wavelength(frequency_hz: float) -> float:
    if frequency_hz <= 0.0:
        raise ValueError("frequency must be > 0")
    return SPEED_OF_LIGHT / frequency_hz


def quarter_wave_height(frequency_hz: float) -> float:
    """Minimum usable antenna height: a quarter wavelength."""
    return wavelength(frequency_hz) / 4.0


@dataclass(frozen=True)
class RadioParams:
    frequency_hz: float = 868e6
    tx_power_w: float = dbm_to_watts(5.0)
    rx_threshold_w: float = dbm_to_watts(-104.0)
    carrier_sense_threshold_w: float = dbm_to_watts(-104.0)
    capture_ratio: float = 10.0  # linear power ratio (10 dB)
    antenna_height_tx_m: float = 1.0
    antenna_height_rx_m: float = 1.0
    gain_tx: float = 1.0
    gain_rx: float = 1.0
    path_loss: float = 1.0
    data_rate_bps: float = 76800.0
    backoff_window_s: float = 0.01
    csma_retry_cap: int = 8

    def __post_init__(self) -> None:
        for name in ("frequency_hz", "tx_power_w", "rx_threshold_w",
                     "carrier_sense_threshold_w", "capture_ratio",
                     "antenna_height_tx_m", "antenna_height_rx_m",
                     "gain_tx", "gain_rx", "path_loss", "data_rate_bps",
                     "backoff_window_s"):
            if getattr(self, name) <= 0.0:
                raise ValueError("%s must be > 0" % name)
        if self.carrier_sense_threshold_w > self.rx_threshold_w:
            raise ValueError("carrier_sense_threshold_w must be <= rx_threshold_w")
        if self.capture_ratio < 1.0:
            raise ValueError("capture_ratio must be >= 1")
        if self.csma_retry_cap < 0:
            raise ValueError("csma_retry_cap must be >= 0")


def two_ray_rx_power(params: RadioParams, distance_m: float) -> float:
    """Received power at ground distance d: Pt*Gt*Gr*(ht*hr)^2 / (d^4 * L)."""
    if distance_m <= 0.0:
        raise ValueError("distance must be > 0")
    num = (params.tx_power_w * params.gain_tx * params.gain_rx
           * (params.antenna_height_tx_m * params.antenna_height_rx_m) ** 2)
    # (d*d)**2 rather than d**4 so the quartic scaling law is bit-exact
    return num / ((distance_m * distance_m) ** 2 * params.path_loss)


def max_range(params: RadioParams, threshold_w: float) -> float:
    """Closed-form inverse of two_ray_rx_power: distance where power == threshold."""
    if threshold_w <= 0.0:
        raise ValueError("threshold must be > 0")
    num = (params.tx_power_w * params.gain_tx * params.gain_rx
           * (params.antenna_height_tx_m * params.antenna_height_rx_m) ** 2)
    return (num / (threshold_w * params.path_loss)) ** 0.25


class Reception(enum.Enum):
    RECEIVED = "received"
    CAPTURED = "captured"
    COLLIDED = "collided"
    BELOW_THRESHOLD = "below_threshold"

    @property
    def ok(self) -> bool:
        return self in (Reception.RECEIVED, Reception.CAPTURED)


def reception_decision(rx_power_w: float, concurrent_powers_w, params: RadioParams) -> Reception:
    """Decode outcome for one signal against overlapping transmissions.

    Concurrent powers below the carrier-sense threshold are invisible to the
    receiver and never corrupt the signal; a signal wins a collision only by
    exceeding the strongest visible interferer by the capture ratio.
    """
    if rx_power_w < params.rx_threshold_w:
        return Reception.BELOW_THRESHOLD
    visible = [p for p in concurrent_powers_w if p >= params.carrier_sense_threshold_w]
    if not visible:
        return Reception.RECEIVED
    if rx_power_w >= params.capture_ratio * max(visible):
        return Reception.CAPTURED
    return Reception.COLLIDED
