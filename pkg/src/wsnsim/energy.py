"""Per-node energy accounting: packet costs, battery sizing, consumption meters."""

from __future__ import annotations

from dataclasses import dataclass, field

CATEGORIES = ("tx", "rx", "idle", "sleep")


@dataclass(frozen=True)
class EnergyParams:
    tx_power_w: float = 0.099       # 33 mA * 3 V
    rx_power_w: float = 0.042       # 14 mA * 3 V
    idle_power_w: float = 0.006     # 2 mA * 3 V
    sleep_power_w: float = 3e-6     # 1 uA * 3 V
    supply_voltage_v: float = 3.0
    initial_energy_j: float = 20304.0  # 3 V * 23.5 mA * 80 h

    def __post_init__(self) -> None:
        if not (self.tx_power_w > self.rx_power_w > self.idle_power_w
                > self.sleep_power_w > 0.0):
            raise ValueError("power draws must satisfy tx > rx > idle > sleep > 0")
        if self.supply_voltage_v <= 0.0:
            raise ValueError("supply_voltage_v must be > 0")
        if self.initial_energy_j <= 0.0:
            raise ValueError("initial_energy_j must be > 0")


@dataclass(frozen=True)
class PacketSpec:
    mac_header_bytes: int = 58
    ip_header_bytes: int = 10
    common_header_bytes: int = 10
    data_payload_bytes: int = 6
    control_payload_bytes: int = 24

    def __post_init__(self) -> None:
        for name in ("mac_header_bytes", "ip_header_bytes", "common_header_bytes",
                     "data_payload_bytes", "control_payload_bytes"):
            if getattr(self, name) < 0:
                raise ValueError("%s must be >= 0" % name)

    @property
    def data_bytes(self) -> int:
        return (self.mac_header_bytes + self.ip_header_bytes
                + self.common_header_bytes + self.data_payload_bytes)

    @property
    def control_bytes(self) -> int:
        return (self.mac_header_bytes + self.ip_header_bytes
                + self.common_header_bytes + self.control_payload_bytes)


def power_from_current(current_a: float, voltage_v: float) -> float:
    if current_a <= 0.0 or voltage_v <= 0.0:
        raise ValueError("current and voltage must be > 0")
    return current_a * voltage_v


def packet_tx_time(size_bytes: float, rate_bps: float) -> float:
    if rate_bps <= 0.0:
        raise ValueError("data rate must be > 0")
    if size_bytes < 0:
        raise ValueError("size must be >= 0")
    return size_bytes * 8.0 / rate_bps


def packet_energy(power_w: float, duration_s: float) -> float:
    if power_w < 0.0 or duration_s < 0.0:
        raise ValueError("power and duration must be >= 0")
    return power_w * duration_s


def battery_energy(voltage_v: float, avg_current_a: float, hours: float) -> float:
    if voltage_v <= 0.0 or avg_current_a <= 0.0 or hours <= 0.0:
        raise ValueError("battery parameters must be > 0")
    return voltage_v * avg_current_a * hours * 3600.0


class EnergyMeter:
    """Residual-energy meter with per-category consumption and death bookkeeping.

    Idle drain is charged lazily: callers accrue the gap since last_accounted
    before any tx/rx debit, and debits move last_accounted across the airtime.
    """

    __slots__ = ("initial", "residual", "consumed", "alive", "death_time",
                 "last_accounted")

    def __init__(self, initial_j: float, start_time: float = 0.0) -> None:
        if initial_j <= 0.0:
            raise ValueError("initial energy must be > 0")
        self.initial = initial_j
        self.residual = initial_j
        self.consumed = {c: 0.0 for c in CATEGORIES}
        self.alive = True
        self.death_time = None
        self.last_accounted = start_time

    def debit(self, amount_j: float, category: str, start_time: float,
              power_w: float) -> bool:
        """Drain amount_j (clamped at zero) from the given category.

        start_time/power_w locate the death instant by linear interpolation
        when the drain exhausts the battery. Returns the alive flag after the
        call; debiting a dead meter is a no-op returning False.
        """
        if amount_j < 0.0:
            raise ValueError("debit amount must be >= 0")
        if not self.alive:
            return False
        if category not in self.consumed:
            raise ValueError("unknown energy category %r" % category)
        if amount_j >= self.residual:
            self.consumed[category] += self.residual
            if power_w > 0.0:
                self.death_time = start_time + self.residual / power_w
            else:
                self.death_time = start_time
            self.residual = 0.0
            self.alive = False
            return False
        self.residual -= amount_j
        self.consumed[category] += amount_j
        return True

    def accrue_idle(self, now: float, params: EnergyParams) -> bool:
        """Charge idle drain from last_accounted up to now (lazy accrual)."""
        if not self.alive:
            return False
        elapsed = now - self.last_accounted
        if elapsed < 0.0:
            raise ValueError("time went backwards in idle accrual")
        start = self.last_accounted
        self.last_accounted = now
        if elapsed == 0.0:
            return True
        return self.debit(params.idle_power_w * elapsed, "idle", start,
                          params.idle_power_w)

    def conservation_error(self) -> float:
        """Relative gap in initial == residual + sum(consumed)."""
        total = self.residual + sum(self.consumed.values())
        return abs(self.initial - total) / self.initial
