"""Run metrics, their re-derivation from event logs, and CSV/JSONL emission.

Every metric is computable from the event log alone (given the run's horizon
and table dimensions), which doubles as a cross-check on the engine's
incremental counters.  Emitted numeric values are rounded to 6 significant
digits so CSV and JSONL files carry identical values and re-runs are
byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

# Fixed column order of emitted rows: run descriptor first, then metrics.
RESULT_COLUMNS = (
    "scheme", "density", "seed", "replicate", "deployed_count", "horizon",
    "admitted_count", "no_alloc_count", "mean_access_delay",
    "ul_success_rate", "ul_collision_rate", "alarm_failure_rate",
    "dl_failure_rate", "throughput", "occupancy_hist",
)

_STRING_COLUMNS = {"scheme", "occupancy_hist"}
_INT_COLUMNS = {"seed", "replicate", "deployed_count", "horizon",
                "admitted_count", "no_alloc_count"}


@dataclass(frozen=True)
class Metrics:
    """Per-run counters and rates; all rates lie in [0, 1]."""

    admitted_count: int
    no_alloc_count: int
    mean_access_delay: float
    ul_success_rate: float
    ul_collision_rate: float
    alarm_failure_rate: float
    dl_failure_rate: float
    throughput: float
    occupancy_hist: tuple[int, ...]


def metrics_from_log(log, horizon: int, n_rbs: int, c_max: int) -> Metrics:
    """Recompute :class:`Metrics` from an event log (independent of the engine).

    ``log`` is any iterable of (slot, mtd, kind, aux) records in slot order.
    """
    admitted: set[int] = set()
    no_alloc = 0
    ul_success = ul_collision = 0
    alarm_tx = alarm_fail = 0
    dl_success = dl_failure = 0
    delays: list[int] = []
    cycle_start: dict[int, int] = {}
    # (mtd, mode-or-None) -> rb of the entry currently held
    entries: dict[tuple[int, str | None], int] = {}

    for slot, mtd, kind, aux in log:
        if kind == "contention_tx":
            cycle_start.setdefault(mtd, slot)
        elif kind == "allocated":
            admitted.add(mtd)
            if mtd in cycle_start:
                delays.append(slot - cycle_start.pop(mtd))
            mode = aux.get("mode") if aux else None
            entries[(mtd, mode)] = aux["rb"]
        elif kind == "no_alloc":
            cycle_start.pop(mtd, None)
            no_alloc += 1
        elif kind == "removed":
            mode = aux.get("mode") if aux else None
            entries.pop((mtd, mode), None)
            if mode is None:
                # fast/massive removals carry no mode tag; drop whichever matches
                for key in [k for k in entries if k[0] == mtd]:
                    entries.pop(key)
            cycle_start.pop(mtd, None)
        elif kind == "ul_success":
            ul_success += 1
            if aux and aux.get("mode") == "alarm":
                alarm_tx += 1
        elif kind == "ul_collision":
            ul_collision += 1
            if aux and aux.get("mode") == "alarm":
                alarm_tx += 1
                alarm_fail += 1
        elif kind == "dl_success":
            dl_success += 1
        elif kind == "dl_failure":
            dl_failure += 1

    occupancy = [0] * (c_max + 1)
    per_rb: dict[int, int] = {}
    for rb in entries.values():
        per_rb[rb] = per_rb.get(rb, 0) + 1
    for rb in range(n_rbs):
        occupancy[per_rb.get(rb, 0)] += 1

    ul_total = ul_success + ul_collision
    dl_total = dl_success + dl_failure
    return Metrics(
        admitted_count=len(admitted),
        no_alloc_count=no_alloc,
        mean_access_delay=sum(delays) / len(delays) if delays else 0.0,
        ul_success_rate=ul_success / ul_total if ul_total else 0.0,
        ul_collision_rate=ul_collision / ul_total if ul_total else 0.0,
        alarm_failure_rate=alarm_fail / alarm_tx if alarm_tx else 0.0,
        dl_failure_rate=dl_failure / dl_total if dl_total else 0.0,
        throughput=ul_success / horizon if horizon else 0.0,
        occupancy_hist=tuple(occupancy),
    )


def result_row(scheme: str, density: float, seed: int, replicate: int,
               deployed_count: int, horizon: int, metrics: Metrics) -> dict:
    """Assemble one emission row in the documented column order."""
    row = {
        "scheme": scheme,
        "density": density,
        "seed": seed,
        "replicate": replicate,
        "deployed_count": deployed_count,
        "horizon": horizon,
    }
    for f in fields(Metrics):
        value = getattr(metrics, f.name)
        if f.name == "occupancy_hist":
            value = ";".join(str(v) for v in value)
        row[f.name] = value
    return row


def _format_value(column: str, value) -> str:
    if column in _STRING_COLUMNS:
        return str(value)
    if column in _INT_COLUMNS:
        return str(int(value))
    return f"{float(value):.6g}"


def emit(rows: Iterable[dict], fmt: str, path: str | Path) -> None:
    """Write rows as CSV (fixed header) or JSON lines; byte-stable for equal input."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to emit")
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"format must be csv or jsonl, got {fmt!r}")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fp:
        if fmt == "csv":
            fp.write(",".join(RESULT_COLUMNS) + "\n")
            for row in rows:
                fp.write(",".join(_format_value(c, row[c]) for c in RESULT_COLUMNS)
                         + "\n")
        else:
            for row in rows:
                parts = []
                for c in RESULT_COLUMNS:
                    rendered = _format_value(c, row[c])
                    if c in _STRING_COLUMNS:
                        parts.append(f'"{c}":"{rendered}"')
                    else:
                        parts.append(f'"{c}":{rendered}')
                fp.write("{" + ",".join(parts) + "}\n")
