"""
Finite point configurations on a periodic window.

A Configuration keeps, for every particle, its mortality m(x) and its competition load
E^a(x, γ∖x) = Σ_{y≠x} a(x−y), plus the aggregates M(γ), E^a(γ) and Ψ(γ) = M + E^a + <b>|γ|.
Neighbours are found through a cell list whose cells are at least as wide as the largest
interaction radius, so only the 3^d surrounding cells are visited.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from fission_dynamics.errors import BadIndex, OutOfWindow
from fission_dynamics.kernels import ModelParams

logger = logging.getLogger(__name__)

RECOMPUTE_INTERVAL = 10_000


class KahanSum:
    """Compensated running sum."""

    __slots__ = ("value", "_carry")

    def __init__(self, value: float = 0.0) -> None:
        self.value = value
        self._carry = 0.0

    def add(self, x: float) -> None:
        y = x - self._carry
        t = self.value + y
        self._carry = (t - self.value) - y
        self.value = t

    def reset(self, value: float) -> None:
        self.value = value
        self._carry = 0.0


@dataclass(frozen=True)
class TorusWindow:
    side: float
    dimension: int
    interaction_radius: float = 0.0

    def __post_init__(self) -> None:
        if not self.side > 0.0:
            raise ValueError("window side must be positive")
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.interaction_radius < 0.0:
            raise ValueError("interaction radius must be >= 0")

    @property
    def cells_per_axis(self) -> int:
        if self.interaction_radius <= 0.0:
            return 1
        return max(1, int(math.floor(self.side / self.interaction_radius)))

    @property
    def cell_size(self) -> float:
        return self.side / self.cells_per_axis

    @property
    def volume(self) -> float:
        return float(self.side**self.dimension)

    def contains(self, x: NDArray[np.float64]) -> bool:
        return bool(np.all(x >= 0.0) and np.all(x < self.side))

    def wrap(self, x: ArrayLike) -> NDArray[np.float64]:
        wrapped = np.mod(np.asarray(x, dtype=np.float64), self.side)
        # mod can round up to exactly `side` for tiny negative inputs
        return np.asarray(np.where(wrapped >= self.side, 0.0, wrapped), dtype=np.float64)

    def displacement(self, x: ArrayLike, y: ArrayLike) -> NDArray[np.float64]:
        """Minimum-image displacement x − y."""
        delta = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
        return np.asarray(delta - self.side * np.round(delta / self.side), dtype=np.float64)

    def distance(self, x: ArrayLike, y: ArrayLike) -> NDArray[np.float64]:
        return np.asarray(np.linalg.norm(self.displacement(x, y), axis=-1), dtype=np.float64)

    def cell_of(self, x: NDArray[np.float64]) -> int:
        n = self.cells_per_axis
        idx = np.minimum((x / self.cell_size).astype(np.int64), n - 1)
        return int(np.ravel_multi_index(tuple(idx), (n,) * self.dimension))

    def neighbour_cells(self, cell: int) -> list[int]:
        n = self.cells_per_axis
        shape = (n,) * self.dimension
        centre = np.unravel_index(cell, shape)
        seen: dict[int, None] = {}
        for offset in itertools.product((-1, 0, 1), repeat=self.dimension):
            idx = tuple((c + o) % n for c, o in zip(centre, offset))
            seen.setdefault(int(np.ravel_multi_index(idx, shape)), None)
        return list(seen)


@dataclass(frozen=True)
class Snapshot:
    """Read-only copy of a configuration at one time, shared with the estimators."""

    time: float
    window: TorusWindow
    configurations: tuple[NDArray[np.float64], ...] = field(default=())

    @property
    def replicas(self) -> int:
        return len(self.configurations)


class Configuration:
    """Mutable point set with incrementally maintained rates; owned by one replica."""

    def __init__(self, window: TorusWindow, params: ModelParams, capacity: int = 64) -> None:
        if window.dimension != params.dimension:
            raise ValueError("window and model dimensions differ")
        if window.interaction_radius < params.interaction_radius:
            raise ValueError("window cells are narrower than the interaction radius")
        if params.interaction_radius > window.side / 2.0:
            logger.warning("interaction radius exceeds half the window side; pairs see several images")
        self.window = window
        self.params = params
        d = window.dimension
        self._pos = np.empty((capacity, d))
        self._m = np.empty(capacity)
        self._ea = np.empty(capacity)
        self._cell = np.empty(capacity, dtype=np.int64)
        self._cells: dict[int, set[int]] = {}
        self.size = 0
        self._mortality = KahanSum()
        self._competition = KahanSum()
        self._neighbour_cache: dict[int, list[int]] = {}

    # ---------------------------------------------------------------- accessors
    def __len__(self) -> int:
        return self.size

    @property
    def points(self) -> NDArray[np.float64]:
        return self._pos[: self.size]

    @property
    def mortality_rates(self) -> NDArray[np.float64]:
        return self._m[: self.size]

    @property
    def competition_rates(self) -> NDArray[np.float64]:
        return self._ea[: self.size]

    @property
    def death_rates(self) -> NDArray[np.float64]:
        return self._m[: self.size] + self._ea[: self.size]

    @property
    def mortality_total(self) -> float:
        return self._mortality.value

    @property
    def competition_total(self) -> float:
        return self._competition.value

    @property
    def fission_total(self) -> float:
        return self.params.fission.total_mass * self.size

    @property
    def total_rate(self) -> float:
        """Ψ(γ)."""
        return self._mortality.value + self._competition.value + self.fission_total

    # ---------------------------------------------------------------- neighbours
    def _neighbour_cells(self, cell: int) -> list[int]:
        cells = self._neighbour_cache.get(cell)
        if cells is None:
            cells = self.window.neighbour_cells(cell)
            self._neighbour_cache[cell] = cells
        return cells

    def neighbours(self, x: NDArray[np.float64], exclude: int = -1) -> NDArray[np.int64]:
        """Indices of all particles in the cells around x (a superset of those within range)."""
        found: list[int] = []
        for cell in self._neighbour_cells(self.window.cell_of(x)):
            members = self._cells.get(cell)
            if members:
                found.extend(members)
        idx = np.fromiter((i for i in found if i != exclude), dtype=np.int64)
        return idx

    def _competition_with(self, x: NDArray[np.float64], exclude: int = -1) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
        idx = self.neighbours(x, exclude)
        if idx.size == 0:
            return idx, np.empty(0)
        dist = self.window.distance(self._pos[idx], x)
        return idx, self.params.competition.evaluate(dist)

    # ---------------------------------------------------------------- mutation
    def _grow(self) -> None:
        cap = 2 * self._pos.shape[0]
        self._pos = np.resize(self._pos, (cap, self.window.dimension))
        self._m = np.resize(self._m, cap)
        self._ea = np.resize(self._ea, cap)
        self._cell = np.resize(self._cell, cap)

    def insert(self, x: ArrayLike) -> int:
        """Add a point and update every rate it touches; returns its index."""
        point = np.asarray(x, dtype=np.float64).reshape(self.window.dimension)
        if not self.window.contains(point):
            raise OutOfWindow(f"point {point.tolist()} outside [0, {self.window.side})^{self.window.dimension}")
        if self.size == self._pos.shape[0]:
            self._grow()

        idx, values = self._competition_with(point)
        load = float(values.sum())
        if idx.size:
            self._ea[idx] += values

        i = self.size
        cell = self.window.cell_of(point)
        self._pos[i] = point
        self._m[i] = float(self.params.mortality.evaluate(point)[0])
        self._ea[i] = load
        self._cell[i] = cell
        self._cells.setdefault(cell, set()).add(i)
        self.size += 1

        self._mortality.add(self._m[i])
        self._competition.add(2.0 * load)
        return i

    def remove(self, i: int) -> tuple[int, int] | None:
        """
        Delete particle i by swap-remove.

        Returns:
            (old_index, new_index) of the particle moved into slot i, or None when i was last.
        """
        if not 0 <= i < self.size:
            raise BadIndex(f"particle index {i} not in [0, {self.size})")
        point = self._pos[i].copy()
        idx, values = self._competition_with(point, exclude=i)
        if idx.size:
            self._ea[idx] -= values
        self._mortality.add(-self._m[i])
        self._competition.add(-2.0 * float(values.sum()))

        self._cells[int(self._cell[i])].discard(i)
        last = self.size - 1
        remap = None
        if i != last:
            self._pos[i] = self._pos[last]
            self._m[i] = self._m[last]
            self._ea[i] = self._ea[last]
            self._cell[i] = self._cell[last]
            members = self._cells[int(self._cell[i])]
            members.discard(last)
            members.add(i)
            remap = (last, i)
        self.size -= 1
        if self.size == 0:
            self._mortality.reset(0.0)
            self._competition.reset(0.0)
        return remap

    def recompute(self) -> float:
        """Rebuild every cached rate from scratch; returns the relative drift of Ψ that was removed."""
        before = self.total_rate
        n = self.size
        pts = self.points
        self._ea[:n] = 0.0
        for i in range(n):
            idx, values = self._competition_with(pts[i], exclude=i)
            self._ea[i] = float(values.sum())
        self._m[:n] = self.params.mortality.evaluate(pts) if n else self._m[:n]
        self._mortality.reset(float(math.fsum(self._m[:n])))
        self._competition.reset(float(math.fsum(self._ea[:n])))
        after = self.total_rate
        drift = abs(before - after) / after if after > 0.0 else abs(before)
        logger.debug(f"rate cache recomputed: n={n}, relative drift {drift:.3e}")
        return drift

    # ---------------------------------------------------------------- aggregates
    def pair_sum(self, values_of: str = "competition") -> float:
        """Double pair sum Σ_x Σ_{y≠x} f(x−y) with f = a or β, via the cell list."""
        total = KahanSum()
        pts = self.points
        for i in range(self.size):
            idx = self.neighbours(pts[i], exclude=i)
            if idx.size == 0:
                continue
            dist = self.window.distance(pts[idx], pts[i])
            if values_of == "competition":
                total.add(float(self.params.competition.evaluate(dist).sum()))
            else:
                total.add(float(self.params.fission.beta_radial(dist).sum()))
        return total.value

    def snapshot_points(self) -> NDArray[np.float64]:
        return self.points.copy()

    @classmethod
    def from_points(cls, window: TorusWindow, params: ModelParams, points: ArrayLike) -> "Configuration":
        config = cls(window, params)
        for x in np.atleast_2d(np.asarray(points, dtype=np.float64)).reshape(-1, window.dimension):
            config.insert(x)
        return config


def insert(gamma: Configuration, x: ArrayLike) -> Configuration:
    gamma.insert(x)
    return gamma


def remove(gamma: Configuration, i: int) -> Configuration:
    gamma.remove(i)
    return gamma


def energies(gamma: Configuration) -> tuple[float, float, float, float]:
    """(E^a, E^b, M, Ψ) of the configuration; E^b is recomputed as a double pair sum of β."""
    e_b = gamma.pair_sum("beta")
    return gamma.competition_total, e_b, gamma.mortality_total, gamma.total_rate


def brute_force_energies(window: TorusWindow, params: ModelParams, points: ArrayLike) -> tuple[float, float, float, float]:
    """O(n²) reference for energies(); no cell list, no caching."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64)).reshape(-1, window.dimension)
    n = pts.shape[0]
    mortality = float(math.fsum(params.mortality.evaluate(pts))) if n else 0.0
    if n < 2:
        return 0.0, 0.0, mortality, mortality + params.fission.total_mass * n
    dist = window.distance(pts[:, None, :], pts[None, :, :])
    off = ~np.eye(n, dtype=bool)
    e_a = float(math.fsum(params.competition.evaluate(dist[off])))
    e_b = float(math.fsum(params.fission.beta_radial(dist[off])))
    return e_a, e_b, mortality, mortality + e_a + params.fission.total_mass * n
