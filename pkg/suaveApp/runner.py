"""
Mission runner: wires bus, world, managed and managing subsystems for one
seeded mission, runs batches of missions per manager and writes the results.
"""
import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path

import numpy as np

from .bus import create_bus
from .config import config_to_dict, config_to_json
from .exceptions import SuaveError
from .managed import ManagedSubsystem, MissionCoordinator, MissionPhase
from .managing import (
    ManagerKind,
    ThrusterMonitor,
    WaterVisibilityObserver,
    build_manager,
    period_ticks,
)
from .simworld import TraceWriter, build_world, inject_failures

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["manager", "seed", "pipeline_found", "search_time_s", "distance_inspected_m"]
STATS_COLUMNS = [
    "manager",
    "runs",
    "search_time_mean_s",
    "search_time_std_s",
    "distance_mean_m",
    "distance_std_m",
]


@dataclass(frozen=True)
class RunMetrics:
    seed: int
    pipeline_found: bool
    search_time: float
    distance_inspected: float


@dataclass(frozen=True)
class BatchStats:
    runs: int
    search_time_mean: float
    search_time_std: float
    distance_mean: float
    distance_std: float


class Mission:
    """One seeded mission; ``run`` steps it from t=0 to DONE."""

    def __init__(self, config, seed, trace_path=None, on_cycle=None):
        self.config = config
        self.seed = seed
        world_seed, manager_seed = np.random.SeedSequence(seed).spawn(2)

        self.bus = create_bus()
        self.world = build_world(
            config.pipeline, config.kinematics, config.wv, np.random.default_rng(world_seed), config.dt
        )
        self.managed = ManagedSubsystem(config.mission, config.kinematics, self.bus, config.dt)
        self.manager = build_manager(
            config.manager, self.bus, config.dt, rng=np.random.default_rng(manager_seed), on_cycle=on_cycle
        )
        self.wv_observer = WaterVisibilityObserver(config.wv, self.bus.client("water_visibility_observer"))
        self.thruster_monitor = ThrusterMonitor(self.bus.client("thruster_monitor"))
        self.coordinator = MissionCoordinator(
            self.bus.client("coordinate_mission"), self.managed, config.time_limit
        )
        self.observer_ticks = period_ticks(config.manager.observer_period, config.dt)
        self.trace_path = trace_path

    def metrics(self):
        coordinator = self.coordinator
        return RunMetrics(
            seed=self.seed,
            pipeline_found=coordinator.found,
            search_time=round(coordinator.search_time, 6),
            distance_inspected=round(coordinator.distance_inspected, 6),
        )

    def start(self):
        self.thruster_monitor.observe(self.world)
        self.coordinator.start(self.world)

    def tick(self):
        world = self.world
        tick, t = world.tick, world.clock
        inject_failures(world, self.config.thruster_events)
        self.thruster_monitor.observe(world)
        if tick % self.observer_ticks == 0:
            self.wv_observer.observe(t)
        self.manager.tick(tick, t)
        self.managed.tick(world, self.config.dt)
        return self.coordinator.mission_tick(world)

    def run(self):
        trace = TraceWriter(self.trace_path) if self.trace_path else None
        try:
            self.start()
            phase = None
            while phase is not MissionPhase.DONE:
                phase = self.tick()
                if trace:
                    trace.write(self.world, self.managed.modes())
        finally:
            if trace:
                trace.close()
        metrics = self.metrics()
        logger.info(
            "%s seed=%d found=%s search=%.1fs inspected=%.2fm",
            self.config.manager.kind.value,
            self.seed,
            metrics.pipeline_found,
            metrics.search_time,
            metrics.distance_inspected,
        )
        return metrics


class SnapshotWriter:
    """Appends one knowledge-base snapshot per MAPE cycle as JSON lines."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.write_text("", encoding="utf-8")

    def __call__(self, t, kb):
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps({"t": round(t, 6), "kb": kb.snapshot()}, sort_keys=True) + "\n")


def run_once(config, seed, trace_dir=None, snapshot_kb=False):
    trace_path = None
    on_cycle = None
    kind = config.manager.kind.value
    if trace_dir is not None:
        trace_path = Path(trace_dir) / f"trace_{kind}_{seed}.csv"
    if snapshot_kb and config.manager.kind is ManagerKind.METACONTROL:
        on_cycle = SnapshotWriter(Path(config.output or "results") / f"kb_{kind}_{seed}.jsonl")
    return Mission(config, seed, trace_path=trace_path, on_cycle=on_cycle).run()


def compute_stats(metrics):
    runs = len(metrics)
    if runs == 0:
        raise SuaveError("Statistics need at least one completed run.")
    search = np.array([m.search_time for m in metrics], dtype=float)
    distance = np.array([m.distance_inspected for m in metrics], dtype=float)
    return BatchStats(
        runs=runs,
        search_time_mean=float(search.mean()),
        search_time_std=float(search.std(ddof=1)) if runs > 1 else math.nan,
        distance_mean=float(distance.mean()),
        distance_std=float(distance.std(ddof=1)) if runs > 1 else math.nan,
    )


def _fmt(value):
    return "NaN" if math.isnan(value) else f"{value:.6f}"


def write_results_csv(path, manager, metrics, config, incomplete=None):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(f"# config: {config_to_json(config)}\n")
        if incomplete:
            handle.write(f"# INCOMPLETE: {incomplete}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for m in metrics:
            writer.writerow([
                manager,
                m.seed,
                str(m.pipeline_found).lower(),
                _fmt(m.search_time),
                _fmt(m.distance_inspected),
            ])


def write_stats_csv(path, rows):
    """``rows`` is a list of (manager, BatchStats)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(STATS_COLUMNS)
        for manager, stats in rows:
            writer.writerow([
                manager,
                stats.runs,
                _fmt(stats.search_time_mean),
                _fmt(stats.search_time_std),
                _fmt(stats.distance_mean),
                _fmt(stats.distance_std),
            ])


def read_results_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [line for line in handle if not line.startswith("#")]
    return [
        RunMetrics(
            seed=int(row["seed"]),
            pipeline_found=row["pipeline_found"] == "true",
            search_time=float(row["search_time_s"]),
            distance_inspected=float(row["distance_inspected_m"]),
        )
        for row in csv.DictReader(rows)
    ]


def _run_seeds(config, workers, trace_dir, snapshot_kb):
    """Results in seed order; on failure, the runs completed before it and the error."""
    job = partial(run_once, config, trace_dir=trace_dir, snapshot_kb=snapshot_kb)
    completed = []
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for metrics in pool.map(job, config.seeds):
                    completed.append(metrics)
        else:
            for seed in config.seeds:
                completed.append(job(seed))
    except Exception as exc:
        return completed, exc
    return completed, None


def run_batch(config, workers=1, trace=False, snapshot_kb=False):
    """Runs seeds base_seed .. base_seed+runs-1 and writes results, summary and manifest."""
    out_dir = Path(config.output or "results")
    out_dir.mkdir(parents=True, exist_ok=True)
    manager = config.manager.kind.value
    trace_dir = out_dir if trace else None
    logger.info("Batch %s: %d runs from seed %d, %d worker(s)", manager, config.runs, config.base_seed, workers)

    started = time.perf_counter()
    metrics, error = _run_seeds(config, workers, trace_dir, snapshot_kb)
    if error is not None:
        partial_path = out_dir / f"results_{manager}.partial.csv"
        write_results_csv(partial_path, manager, metrics, config, incomplete=f"{type(error).__name__}: {error}")
        logger.error("Batch %s aborted after %d run(s); partial results in %s", manager, len(metrics), partial_path)
        raise error

    stats = compute_stats(metrics)
    write_results_csv(out_dir / f"results_{manager}.csv", manager, metrics, config)
    write_stats_csv(out_dir / f"summary_{manager}.csv", [(manager, stats)])
    manifest = {
        "config": config_to_dict(config),
        "manager": manager,
        "seeds": config.seeds,
        "workers": workers,
        "wall_clock_s": round(time.perf_counter() - started, 3),
    }
    (out_dir / f"batch_{manager}.json").write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    logger.info(
        "Batch %s done: search %.2f s, inspected %.2f m",
        manager,
        stats.search_time_mean,
        stats.distance_mean,
    )
    return metrics, stats


def run_comparison(config, managers=tuple(ManagerKind), workers=1):
    """Same batch for every manager; writes ``comparison.csv``."""
    results = {}
    for kind in managers:
        kind = ManagerKind(kind)
        batch_config = replace(config, manager=replace(config.manager, kind=kind))
        results[kind.value] = run_batch(batch_config, workers=workers)
    write_stats_csv(
        Path(config.output or "results") / "comparison.csv",
        [(manager, stats) for manager, (_, stats) in results.items()],
    )
    return results
