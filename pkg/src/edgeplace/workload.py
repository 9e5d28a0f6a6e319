"""Synthetic workload snapshots and trace file ingest.

Real request traces concentrate around a few busy locations that move over
time; the generator mimics that with a small set of hotspot nodes shared by
all functions, drifting between snapshots. A trace CSV with columns
(snapshot, function_id, node_id, rate) can substitute real data anywhere a
generated snapshot list is accepted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class WorkloadError(ValueError):
    """Raised for malformed trace files or impossible generator configs."""


TRACE_COLUMNS = ("snapshot", "function_id", "node_id", "rate")


@dataclass(frozen=True)
class WorkloadGenConfig:
    n_snapshots: int
    rate_range: tuple[float, float] = (8.0, 40.0)  # per-function total req/s
    hotspot_count: int = 2
    concentration: float = 0.8  # workload share pinned to hotspots
    drift_prob: float = 0.3  # chance a hotspot relocates between snapshots
    per_function_rate_ranges: tuple[tuple[float, float], ...] | None = None

    def range_for(self, f: int) -> tuple[float, float]:
        if self.per_function_rate_ranges is not None:
            return self.per_function_rate_ranges[f]
        return self.rate_range


def generate_workloads(
    n_functions: int, n_nodes: int, config: WorkloadGenConfig, rng: np.random.Generator
) -> list[np.ndarray]:
    """Deterministic (given rng state) list of (F, N) snapshots."""
    if config.hotspot_count < 1 or config.hotspot_count > n_nodes:
        raise WorkloadError(
            f"hotspot_count {config.hotspot_count} outside 1..{n_nodes}"
        )
    if not 0.0 <= config.concentration <= 1.0:
        raise WorkloadError(f"concentration {config.concentration} outside [0, 1]")
    hotspots = list(rng.choice(n_nodes, size=config.hotspot_count, replace=False))
    snapshots = []
    for _ in range(config.n_snapshots):
        weights = np.full(n_nodes, (1.0 - config.concentration) / n_nodes)
        for h in hotspots:
            weights[h] += config.concentration / len(hotspots)
        snap = np.empty((n_functions, n_nodes))
        for f in range(n_functions):
            lo, hi = config.range_for(f)
            total = rng.uniform(lo, hi)
            snap[f] = total * weights
        snapshots.append(snap)
        for k in range(len(hotspots)):
            if rng.random() < config.drift_prob:
                hotspots[k] = int(rng.integers(n_nodes))
    return snapshots


# --------------------------------------------------------------------------
# trace files
# --------------------------------------------------------------------------


def write_trace(path: str, snapshots: list[np.ndarray]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for s, snap in enumerate(snapshots):
            for f in range(snap.shape[0]):
                for n in range(snap.shape[1]):
                    writer.writerow([s, f, n, repr(float(snap[f, n]))])


def ingest_trace(path: str) -> list[np.ndarray]:
    """Read a trace CSV back into dense snapshots; missing cells are zero."""
    entries: list[tuple[int, int, int, float]] = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != TRACE_COLUMNS:
                raise WorkloadError(
                    f"trace header must be {','.join(TRACE_COLUMNS)}, got {header}"
                )
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 4:
                    raise WorkloadError(f"line {lineno}: expected 4 columns, got {len(row)}")
                try:
                    s, f, n = int(row[0]), int(row[1]), int(row[2])
                    rate = float(row[3])
                except ValueError as exc:
                    raise WorkloadError(f"line {lineno}: {exc}") from exc
                if s < 0 or f < 0 or n < 0:
                    raise WorkloadError(f"line {lineno}: negative index")
                if not np.isfinite(rate) or rate < 0:
                    raise WorkloadError(f"line {lineno}: bad rate {row[3]}")
                entries.append((s, f, n, rate))
    except OSError as exc:
        raise WorkloadError(f"cannot read trace {path}: {exc}") from exc
    if not entries:
        raise WorkloadError(f"trace {path} holds no samples")
    n_snapshots = max(e[0] for e in entries) + 1
    n_functions = max(e[1] for e in entries) + 1
    n_nodes = max(e[2] for e in entries) + 1
    snapshots = [np.zeros((n_functions, n_nodes)) for _ in range(n_snapshots)]
    for s, f, n, rate in entries:
        snapshots[s][f, n] = rate
    return snapshots
