"""Work counts for three preservation strategies.

Parameters: ``p`` data types with ``q`` instances each, found on ``m``
present-day machine types and wanted on ``n`` future machine types, with
``k`` forced migrations in between. Only program and execution counts
are modelled; per-item weights (default 1) let callers plug in their own
unit-cost estimates.
"""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields

STRATEGIES = ("migration", "emulation", "durable")


@dataclass(frozen=True)
class CostParams:
    m: int
    n: int
    p: int
    q: int
    k: int = 1

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{f.name} must be a non-negative integer, got {value!r}")
        if self.k < 1:
            raise ValueError("k counts forced migrations including the last and must be at least 1")


@dataclass(frozen=True)
class StrategyCounts:
    emulators_written: int
    uvc_programs_written: int
    transform_programs_written: int
    periodic_migration_executions: int
    executions_2105: int

    def weighted_total(self, weights: dict[str, float] | None = None) -> float:
        weights = weights or {}
        return sum(weights.get(f.name, 1) * getattr(self, f.name) for f in fields(self))


@dataclass(frozen=True)
class CostTable:
    migration: StrategyCounts
    emulation: StrategyCounts
    durable: StrategyCounts

    def rows(self):
        for name in STRATEGIES:
            yield name, getattr(self, name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["strategy"] + [f.name for f in fields(StrategyCounts)])
        for name, counts in self.rows():
            writer.writerow([name, *astuple(counts)])
        return buf.getvalue()


def cost_counts(params: CostParams) -> CostTable:
    m, n, p, q, k = params.m, params.n, params.p, params.q, params.k
    migration = StrategyCounts(0, 0, p * max(0, m + n + k - 2), (k - 1) * p * q, p * q)
    emulation = StrategyCounts(m * n, 0, 0, 0, p * q)
    durable = StrategyCounts(m + n, p, 0, 0, p * q)
    return CostTable(migration, emulation, durable)
