"""Timeline accounting: overhead charges, execution trace, efficiency ratios.

Overhead is tracked in integer microseconds under three categories (setup,
reconfiguration, dispatch); compute is tracked in cycles because the model
publishes no clock frequency. Setup may be charged at most once per report
and at most once per runtime session.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import DoubleSetup, ZeroCycles

SETUP = "setup"
DISPATCH = "dispatch"
RECONFIG = "reconfig"
COMPUTE = "compute"
CATEGORIES = (SETUP, DISPATCH, RECONFIG, COMPUTE)

OCCURRENCE = {
    SETUP: "once",
    RECONFIG: "if not configured",
    DISPATCH: "every dispatch",
}


class CostLayer(str, Enum):
    TF = "tf"
    HSA = "hsa"


@dataclass(frozen=True)
class CostConstants:
    """Per-layer overhead constants in microseconds. The two layers are
    mutually exclusive alternatives, never summed."""

    setup_us_tf: int = 156230
    setup_us_hsa: int = 39032
    reconfig_us: int = 7424
    dispatch_us_tf: int = 27
    dispatch_us_hsa: int = 10

    def __post_init__(self):
        for name in (
            "setup_us_tf",
            "setup_us_hsa",
            "reconfig_us",
            "dispatch_us_tf",
            "dispatch_us_hsa",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def setup_us(self, layer: CostLayer) -> int:
        return self.setup_us_tf if layer is CostLayer.TF else self.setup_us_hsa

    def dispatch_us(self, layer: CostLayer) -> int:
        return self.dispatch_us_tf if layer is CostLayer.TF else self.dispatch_us_hsa


@dataclass(frozen=True)
class TimelineEvent:
    time_us: int
    category: str
    amount: int
    detail: str = ""


class TimelineReport:
    """Ordered cost events for one run, plus per-node compute cycles.

    Microsecond categories advance the simulated clock; compute events carry
    cycles and leave the clock alone. charge() is serialized so concurrent
    mode preserves a total order.
    """

    def __init__(self, layer: CostLayer):
        self.layer = layer
        self.events: list[TimelineEvent] = []
        self.setup_us_total = 0
        self.dispatch_us_total = 0
        self.reconfig_us_total = 0
        self.compute_cycles: dict[str, int] = {}
        self._now = 0
        self._setup_charged = False
        self._lock = threading.Lock()

    @property
    def now_us(self) -> int:
        return self._now

    def charge(self, category: str, amount: int, detail: str = "") -> None:
        if category not in CATEGORIES:
            raise ValueError(f"unknown charge category {category!r}")
        if amount < 0:
            raise ValueError("charge amount must be >= 0")
        with self._lock:
            if category == SETUP:
                if self._setup_charged:
                    raise DoubleSetup("setup already charged to this report")
                self._setup_charged = True
            self.events.append(TimelineEvent(self._now, category, amount, detail))
            if category == SETUP:
                self.setup_us_total += amount
                self._now += amount
            elif category == DISPATCH:
                self.dispatch_us_total += amount
                self._now += amount
            elif category == RECONFIG:
                self.reconfig_us_total += amount
                self._now += amount

    def record_compute(self, node_id: str, cycles: int) -> None:
        self.charge(COMPUTE, cycles, f"compute {node_id}")
        with self._lock:
            self.compute_cycles[node_id] = self.compute_cycles.get(node_id, 0) + cycles

    def record_barrier(self, node_id: str) -> None:
        self.charge(COMPUTE, 0, f"barrier {node_id}")

    def total_overhead(self) -> int:
        """Setup + dispatch + reconfiguration in microseconds; compute excluded."""
        return self.setup_us_total + self.dispatch_us_total + self.reconfig_us_total

    def count(self, category: str) -> int:
        return sum(1 for e in self.events if e.category == category)

    @property
    def barrier_count(self) -> int:
        return sum(
            1 for e in self.events if e.category == COMPUTE and e.detail.startswith("barrier ")
        )

    def to_dict(self) -> dict:
        return {
            "layer": self.layer.value,
            "setup_us_total": self.setup_us_total,
            "dispatch_us_total": self.dispatch_us_total,
            "reconfig_us_total": self.reconfig_us_total,
            "total_overhead_us": self.total_overhead(),
            "compute_cycles": dict(self.compute_cycles),
            "counts": {
                "setup": self.count(SETUP),
                "dispatch": self.count(DISPATCH),
                "reconfig": self.count(RECONFIG),
                "compute": self.count(COMPUTE) - self.barrier_count,
                "barrier": self.barrier_count,
            },
            "events": [
                {
                    "time_us": e.time_us,
                    "category": e.category,
                    "amount": e.amount,
                    "detail": e.detail,
                }
                for e in self.events
            ],
        }


def render_overhead_table(report: dict) -> str:
    """Aligned text table: one row per overhead category plus the total."""
    rows = [
        ("device/kernel setup", OCCURRENCE[SETUP], report["setup_us_total"]),
        ("reconfiguration", OCCURRENCE[RECONFIG], report["reconfig_us_total"]),
        ("dispatch latency", OCCURRENCE[DISPATCH], report["dispatch_us_total"]),
    ]
    lines = [f"overhead ({report['layer']} layer)"]
    lines.append(f"{'operation':<22}{'occurrence':<20}{'total [us]':>12}")
    for name, occurrence, total in rows:
        lines.append(f"{name:<22}{occurrence:<20}{total:>12}")
    lines.append(f"{'total overhead':<22}{'':<20}{report['total_overhead_us']:>12}")
    cycles = sum(report["compute_cycles"].values())
    lines.append(f"{'compute':<22}{'(not overhead)':<20}{cycles:>10} cycles")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EfficiencyFigure:
    role_id: str
    accel_op_per_cycle: Fraction
    cpu_op_per_cycle: Fraction

    @property
    def increase(self) -> Fraction:
        return self.accel_op_per_cycle / self.cpu_op_per_cycle

    def to_dict(self) -> dict:
        return {
            "role_id": self.role_id,
            "accel_op_per_cycle": float(self.accel_op_per_cycle),
            "cpu_op_per_cycle": float(self.cpu_op_per_cycle),
            "increase": float(self.increase),
        }


def efficiency(
    role_id: str, op_count: int, accel_cycles: int, cpu_cycles: int
) -> EfficiencyFigure:
    """op/cycle on the accelerator vs the CPU baseline; increase = cpu/accel cycles."""
    for name, value in (
        ("op_count", op_count),
        ("accel_cycles", accel_cycles),
        ("cpu_cycles", cpu_cycles),
    ):
        if value <= 0:
            raise ZeroCycles(f"{name} must be > 0, got {value}")
    return EfficiencyFigure(
        role_id,
        Fraction(op_count, accel_cycles),
        Fraction(op_count, cpu_cycles),
    )


def render_efficiency_table(figures: list[EfficiencyFigure]) -> str:
    lines = [f"{'role':<10}{'op/cycle (accel)':>18}{'op/cycle (cpu)':>18}{'increase':>12}"]
    for fig in figures:
        lines.append(
            f"{fig.role_id:<10}"
            f"{float(fig.accel_op_per_cycle):>18.4f}"
            f"{float(fig.cpu_op_per_cycle):>18.4f}"
            f"{float(fig.increase):>11.2f}x"
        )
    return "\n".join(lines) + "\n"
