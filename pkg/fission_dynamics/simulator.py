"""
Direct Gillespie simulation of the death / fission jump process.

Each particle x dies at rate m(x) + E^a(x, γ∖x) and undergoes fission at rate <b>; a fission
removes x and inserts two offspring drawn from b(x|·,·). Waiting times are exponential with the
exact total rate Ψ(γ) kept by the Configuration cache. Mollified fission kernels are handled by
thinning: proposals rejected by the mollifier are null events that only advance the clock.

The same direct method runs on a DiscreteSpace (site counts) through `run_discrete`.
"""

from __future__ import annotations

import logging
import math
import time as wallclock
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from fission_dynamics.configuration import RECOMPUTE_INTERVAL, Configuration, Snapshot, TorusWindow
from fission_dynamics.errors import EmptyConfiguration, GuardTripped
from fission_dynamics.kernels import ModelParams

if TYPE_CHECKING:
    from fission_dynamics.gamma0_oracle import DiscreteSpace

logger = logging.getLogger(__name__)

DEFAULT_GUARD = 1_000_000


@dataclass(frozen=True)
class InitialCondition:
    """Either a Poisson(κ) sample on the window or an explicit list of points."""

    kind: str = "poisson"
    intensity: float = 0.0
    points: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("poisson", "points"):
            raise ValueError(f"Unknown initial condition: {self.kind!r}")
        if self.intensity < 0.0:
            raise ValueError("initial intensity must be >= 0")


@dataclass(frozen=True)
class SimConfig:
    window: TorusWindow
    end_time: float
    initial: InitialCondition
    seed: int = 0
    snapshot_times: tuple[float, ...] = ()
    max_population: int = DEFAULT_GUARD
    record_events: bool = True

    def __post_init__(self) -> None:
        if self.end_time < 0.0:
            raise ValueError("end time must be >= 0")
        if self.max_population <= 0:
            raise ValueError("population guard must be positive")
        times = tuple(sorted(float(t) for t in self.snapshot_times))
        if any(t < 0.0 or t > self.end_time for t in times):
            raise ValueError("snapshot times must lie in [0, end_time]")
        object.__setattr__(self, "snapshot_times", times)


@dataclass(frozen=True)
class EventRecord:
    time: float
    kind: str
    parent: NDArray[np.float64]
    offspring: tuple[NDArray[np.float64], NDArray[np.float64]] | None
    population: int
    remap: tuple[int, int] | None = None


@dataclass
class Trajectory:
    events: list[EventRecord]
    snapshots: list[tuple[float, NDArray[np.float64]]]
    final: NDArray[np.float64]
    seed: int
    final_time: float
    status: str = "completed"
    event_count: int = 0
    wall_seconds: float = 0.0

    def population_at(self, index: int) -> int:
        return int(self.snapshots[index][1].shape[0])


def derive_seeds(master_seed: int, n: int) -> list[int]:
    """Decorrelated per-replica seeds from one master seed (numpy SeedSequence spawning)."""
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def initial_configuration(c: SimConfig, p: ModelParams, rng: np.random.Generator) -> Configuration:
    gamma = Configuration(c.window, p)
    d = c.window.dimension
    if c.initial.kind == "poisson":
        count = int(rng.poisson(c.initial.intensity * c.window.volume))
        for x in rng.random((count, d)) * c.window.side:
            gamma.insert(c.window.wrap(x))
    else:
        for x in c.initial.points:
            gamma.insert(np.asarray(x, dtype=np.float64))
    return gamma


def _waiting_time(gamma: Configuration, rng: np.random.Generator) -> float:
    total = gamma.total_rate
    if gamma.size == 0:
        raise EmptyConfiguration("no particles left")
    if total <= 0.0:
        return math.inf
    return float(rng.exponential(1.0 / total))


def _fire(gamma: Configuration, p: ModelParams, rng: np.random.Generator, when: float) -> EventRecord:
    """Select and apply one event at time `when`."""
    n = gamma.size
    death_rates = gamma.death_rates
    fission_total = gamma.fission_total
    u = rng.random() * gamma.total_rate

    if u < fission_total:
        i = int(rng.integers(n))
        parent = gamma.points[i].copy()
        y1, y2, accepted = p.fission.propose(parent, rng)
        if not accepted:
            return EventRecord(when, "null", parent, None, n)
        remap = gamma.remove(i)
        y1, y2 = gamma.window.wrap(y1), gamma.window.wrap(y2)
        gamma.insert(y1)
        gamma.insert(y2)
        return EventRecord(when, "fission", parent, (y1, y2), gamma.size, remap)

    cumulative = np.cumsum(death_rates)
    i = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    i = min(i, n - 1)
    parent = gamma.points[i].copy()
    remap = gamma.remove(i)
    return EventRecord(when, "death", parent, None, gamma.size, remap)


def next_event(gamma: Configuration, p: ModelParams, rng: np.random.Generator, now: float = 0.0) -> EventRecord:
    """
    Draw the next event of γ, apply it, and return its record.

    Raises:
        EmptyConfiguration: γ has no particles.
    """
    wait = _waiting_time(gamma, rng)
    return _fire(gamma, p, rng, now + wait)


def run(c: SimConfig, p: ModelParams) -> Trajectory:
    """
    Simulate one trajectory up to c.end_time, extinction or the population guard.

    Raises:
        GuardTripped: population exceeded c.max_population; the partial trajectory is attached.
    """
    started = wallclock.perf_counter()
    rng = np.random.default_rng(c.seed)
    gamma = initial_configuration(c, p, rng)
    events: list[EventRecord] = []
    snapshots: list[tuple[float, NDArray[np.float64]]] = []
    pending = list(c.snapshot_times)
    now = 0.0
    fired = 0
    status = "completed"

    def emit_until(limit: float, inclusive: bool) -> None:
        while pending and (pending[0] < limit or (inclusive and pending[0] <= limit)):
            snapshots.append((pending.pop(0), gamma.snapshot_points()))

    while True:
        if gamma.size == 0:
            status = "extinct"
            break
        wait = _waiting_time(gamma, rng)
        if now + wait > c.end_time:
            break
        emit_until(now + wait, inclusive=False)
        record = _fire(gamma, p, rng, now + wait)
        now = record.time
        if record.kind == "null":
            continue
        fired += 1
        if c.record_events:
            events.append(record)
        if fired % RECOMPUTE_INTERVAL == 0:
            gamma.recompute()
        if gamma.size > c.max_population:
            status = "guard"
            break

    emit_until(c.end_time, inclusive=True)
    trajectory = Trajectory(
        events=events,
        snapshots=snapshots,
        final=gamma.snapshot_points(),
        seed=c.seed,
        final_time=now if status == "guard" else c.end_time,
        status=status,
        event_count=fired,
        wall_seconds=wallclock.perf_counter() - started,
    )
    if status == "guard":
        raise GuardTripped(f"population {gamma.size} exceeded guard {c.max_population} at t={now:.6g}", trajectory)
    return trajectory


def _run_replica(args: tuple[SimConfig, ModelParams]) -> Trajectory:
    c, p = args
    try:
        return run(c, p)
    except GuardTripped as e:
        logger.warning(f"replica seed {c.seed}: {e}")
        partial: Trajectory = e.trajectory
        return partial


@dataclass
class Ensemble:
    config: SimConfig
    trajectories: list[Trajectory]
    seeds: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def snapshot_times(self) -> tuple[float, ...]:
        return self.config.snapshot_times

    def snapshot(self, index: int) -> Snapshot:
        """Configurations of every replica at snapshot `index`; replicas stopped early are skipped."""
        configs = tuple(t.snapshots[index][1] for t in self.trajectories if len(t.snapshots) > index)
        return Snapshot(self.config.snapshot_times[index], self.config.window, configs)

    def populations(self, index: int) -> NDArray[np.int64]:
        return np.array([t.population_at(index) for t in self.trajectories if len(t.snapshots) > index])

    def merge(self, other: "Ensemble") -> "Ensemble":
        if other.config.snapshot_times != self.config.snapshot_times:
            raise ValueError("cannot merge ensembles with different snapshot schedules")
        return Ensemble(self.config, self.trajectories + other.trajectories, self.seeds + other.seeds)

    def summary(self) -> dict[str, Any]:
        """Moments of N per snapshot time (exact integer sums, so merge order never matters)."""
        rows = []
        for k, t in enumerate(self.snapshot_times):
            counts = [int(n) for n in self.populations(k)]
            reps = len(counts)
            s1 = sum(counts)
            s2 = sum(n * n for n in counts)
            mean = s1 / reps if reps else 0.0
            var = (s2 - s1 * s1 / reps) / (reps - 1) if reps > 1 else 0.0
            rows.append(
                {
                    "time": t,
                    "replicas": reps,
                    "mean_population": mean,
                    "var_population": var,
                    "mean_intensity": mean / self.config.window.volume,
                    "extinct": sum(1 for n in counts if n == 0),
                }
            )
        return {
            "replicas": len(self.trajectories),
            "end_time": self.config.end_time,
            "window_side": self.config.window.side,
            "dimension": self.config.window.dimension,
            "guard_trips": sum(1 for t in self.trajectories if t.status == "guard"),
            "snapshots": rows,
        }


def replicate(c: SimConfig, p: ModelParams, n: int, workers: int = 1) -> Ensemble:
    """
    Run n independent replicas with seeds derived from c.seed.

    Output order follows replica index, so any value of `workers` gives identical results.
    """
    if n < 1:
        raise ValueError("need at least one replica")
    seeds = derive_seeds(c.seed, n)
    jobs = [(replace(c, seed=s), p) for s in seeds]
    logger.info(f"running {n} replicas with {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(_run_replica, jobs, chunksize=max(1, n // (4 * workers))))
    else:
        trajectories = [_run_replica(job) for job in jobs]
    return Ensemble(c, trajectories, seeds)


# ----------------------------------------------------------------------------- discrete sites
def run_discrete(
    space: "DiscreteSpace",
    initial: ArrayLike,
    end_time: float,
    rng: np.random.Generator,
    max_population: int = DEFAULT_GUARD,
) -> NDArray[np.int64]:
    """Direct Gillespie run on site counts; returns the counts at end_time."""
    counts = np.asarray(initial, dtype=np.int64).copy()
    m, a, b_rows = space.m, space.a, space.b_mass
    b_flat = space.b.reshape(space.sites, -1)
    b_cumulative = np.cumsum(b_flat, axis=1)
    a_diag = np.diag(a)
    now = 0.0
    while counts.sum() > 0:
        n = counts.astype(np.float64)
        load = a @ n - a_diag
        rates = np.concatenate([n * (m + load), n * b_rows])
        total = rates.sum()
        if total <= 0.0:
            break
        now += rng.exponential(1.0 / total)
        if now > end_time:
            break
        cumulative = np.cumsum(rates)
        choice = min(int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right")), rates.size - 1)
        site = choice % space.sites
        counts[site] -= 1
        if choice >= space.sites:
            row = b_cumulative[site]
            pair = min(int(np.searchsorted(row, rng.random() * row[-1], side="right")), row.size - 1)
            j, k = divmod(pair, space.sites)
            counts[j] += 1
            counts[k] += 1
            if counts.sum() > max_population:
                raise GuardTripped(f"discrete population exceeded guard {max_population}", counts)
    return counts


def replicate_discrete(
    space: "DiscreteSpace", initial: Sequence[int], end_time: float, n: int, seed: int = 0
) -> NDArray[np.int64]:
    """Final site counts of n replicas, shape (n, sites)."""
    out = np.empty((n, space.sites), dtype=np.int64)
    for r, s in enumerate(derive_seeds(seed, n)):
        out[r] = run_discrete(space, initial, end_time, np.random.default_rng(s))
    return out
