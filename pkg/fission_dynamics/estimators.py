"""
Ensemble estimators: intensity, pair correlation, factorial moments, the generating functional
E Π(1 + θ(x)) and a Poisson goodness-of-fit test for window counts.

All estimators are folds over the replicas of a Snapshot. The partial results (CountStats,
PairStats, ThetaStats) merge exactly: counts are Python integers and float sums go through
math.fsum over the stored per-replica values, so splitting an ensemble and merging the halves
reproduces the one-pass numbers bit for bit.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from fission_dynamics.configuration import Snapshot, TorusWindow
from fission_dynamics.errors import EmptyWindow, NoPairs
from fission_dynamics.kernels import unit_ball_volume

DEFAULT_CI_SIGMA = 3.0


@dataclass(frozen=True)
class Box:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    @classmethod
    def whole(cls, window: TorusWindow) -> "Box":
        return cls((0.0,) * window.dimension, (window.side,) * window.dimension)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def contains(self, points: NDArray[np.float64]) -> NDArray[np.bool_]:
        pts = np.asarray(points).reshape(-1, len(self.lower))
        return np.asarray(np.all((pts >= self.lower) & (pts < self.upper), axis=1))

    def eroded(self, margin: float) -> "Box":
        return Box(tuple(x + margin for x in self.lower), tuple(x - margin for x in self.upper))

    def check(self, window: TorusWindow) -> None:
        if len(self.lower) != window.dimension or len(self.upper) != window.dimension:
            raise EmptyWindow("box dimension differs from the window")
        if any(lo < 0.0 or hi > window.side for lo, hi in zip(self.lower, self.upper)):
            raise EmptyWindow(f"box {self.lower}..{self.upper} leaves the window [0, {window.side})")
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise EmptyWindow("box has zero volume")


def _falling(n: int, m: int) -> int:
    out = 1
    for j in range(m):
        out *= n - j
    return out


@dataclass
class CountStats:
    """Histogram of window counts over replicas."""

    volume: float
    histogram: Counter[int] = field(default_factory=Counter)

    @property
    def replicas(self) -> int:
        return sum(self.histogram.values())

    def add(self, count: int) -> None:
        self.histogram[int(count)] += 1

    def merge(self, other: "CountStats") -> "CountStats":
        if other.volume != self.volume:
            raise ValueError("cannot merge counts taken on different windows")
        return CountStats(self.volume, self.histogram + other.histogram)

    def factorial_sum(self, m: int, power: int = 1) -> int:
        return sum(reps * _falling(n, m) ** power for n, reps in self.histogram.items())

    def mean_and_stderr(self, m: int) -> tuple[float, float]:
        reps = self.replicas
        if reps == 0:
            return 0.0, 0.0
        s1 = self.factorial_sum(m)
        mean = s1 / reps
        if reps < 2:
            return mean, 0.0
        s2 = self.factorial_sum(m, power=2)
        var = max((s2 - s1 * s1 / reps) / (reps - 1), 0.0)
        return mean, math.sqrt(var / reps)


def count_stats(snapshot: Snapshot, box: Box | None = None) -> CountStats:
    region = box or Box.whole(snapshot.window)
    region.check(snapshot.window)
    acc = CountStats(region.volume)
    for pts in snapshot.configurations:
        acc.add(int(region.contains(pts).sum()) if len(pts) else 0)
    return acc


@dataclass(frozen=True)
class IntensityEstimate:
    value: float
    stderr: float
    replicas: int
    volume: float


def intensity(snapshot: Snapshot, box: Box | None = None) -> IntensityEstimate:
    """
    Mean number of points in the box per unit volume.

    Raises:
        EmptyWindow: the box is degenerate or leaves the window.
    """
    acc = count_stats(snapshot, box)
    mean, se = acc.mean_and_stderr(1)
    return IntensityEstimate(mean / acc.volume, se / acc.volume, acc.replicas, acc.volume)


# ----------------------------------------------------------------------------- pair correlation
@dataclass
class PairStats:
    edges: NDArray[np.float64]
    reference_volume: float
    window_volume: float
    replicas: int = 0
    counts: list[NDArray[np.int64]] = field(default_factory=list)
    population: list[int] = field(default_factory=list)

    def merge(self, other: "PairStats") -> "PairStats":
        if not np.array_equal(self.edges, other.edges) or self.reference_volume != other.reference_volume:
            raise ValueError("cannot merge pair statistics with different bins or windows")
        return PairStats(
            self.edges,
            self.reference_volume,
            self.window_volume,
            self.replicas + other.replicas,
            self.counts + other.counts,
            self.population + other.population,
        )


@dataclass(frozen=True)
class PairCorrelationEstimate:
    edges: NDArray[np.float64]
    k2: NDArray[np.float64]
    stderr: NDArray[np.float64]
    intensity: float
    intensity_stderr: float
    replicas: int

    @property
    def centres(self) -> NDArray[np.float64]:
        return np.asarray(0.5 * (self.edges[1:] + self.edges[:-1]))

    def as_dict(self) -> dict[str, Any]:
        return {
            "edges": self.edges.tolist(),
            "k2": self.k2.tolist(),
            "stderr": self.stderr.tolist(),
            "intensity": self.intensity,
            "intensity_stderr": self.intensity_stderr,
            "replicas": self.replicas,
        }


def shell_volumes(edges: NDArray[np.float64], d: int) -> NDArray[np.float64]:
    return np.asarray(unit_ball_volume(d) * (edges[1:] ** d - edges[:-1] ** d), dtype=np.float64)


def pair_stats(snapshot: Snapshot, edges: ArrayLike, box: Box | None = None) -> PairStats:
    """
    Ordered-pair distance histograms, one per replica.

    On the whole torus every point is a reference point. With a sub-box, reference points are
    those of the box eroded by the largest bin edge (minus sampling), and partners may lie anywhere.
    """
    window = snapshot.window
    bins = np.asarray(edges, dtype=np.float64)
    if bins.ndim != 1 or bins.size < 2 or np.any(np.diff(bins) <= 0.0) or bins[0] < 0.0:
        raise ValueError("bin edges must be increasing and nonnegative")
    r_max = float(bins[-1])
    if r_max > window.side / 2.0:
        raise ValueError(f"largest bin edge {r_max} exceeds half the window side")

    if box is None:
        reference = None
        ref_volume = window.volume
    else:
        box.check(window)
        reference = box.eroded(r_max)
        if any(hi <= lo for lo, hi in zip(reference.lower, reference.upper)):
            raise EmptyWindow("box is too small for the minus-sampling margin")
        ref_volume = reference.volume

    acc = PairStats(bins, ref_volume, window.volume)
    for pts in snapshot.configurations:
        hist = np.zeros(bins.size - 1, dtype=np.int64)
        n = len(pts)
        if n >= 2:
            refs = np.arange(n) if reference is None else np.flatnonzero(reference.contains(pts))
            if refs.size:
                dist = window.distance(pts[refs][:, None, :], pts[None, :, :])
                dist[np.arange(refs.size), refs] = np.inf
                hist, _ = np.histogram(dist[dist < r_max], bins=bins)
        acc.counts.append(np.asarray(hist, dtype=np.int64))
        acc.population.append(n)
        acc.replicas += 1
    return acc


def estimate_from_pairs(acc: PairStats, d: int) -> PairCorrelationEstimate:
    if acc.replicas == 0 or max(acc.population, default=0) < 2:
        raise NoPairs("no replica holds two particles")
    norm = acc.reference_volume * shell_volumes(acc.edges, d)
    per_replica = np.vstack(acc.counts).astype(np.float64) / norm
    reps = acc.replicas
    k2 = np.array([math.fsum(col) for col in per_replica.T]) / reps
    stderr = per_replica.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.zeros_like(k2)
    dens = np.asarray(acc.population, dtype=np.float64) / acc.window_volume
    k1 = math.fsum(dens) / reps
    k1_se = float(dens.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return PairCorrelationEstimate(acc.edges, k2, np.asarray(stderr), k1, k1_se, reps)


def pair_correlation(snapshot: Snapshot, bins: ArrayLike, box: Box | None = None) -> PairCorrelationEstimate:
    """
    Estimate k⁽²⁾ on radial bins.

    Raises:
        NoPairs: no replica contains at least two particles.
    """
    return estimate_from_pairs(pair_stats(snapshot, bins, box), snapshot.window.dimension)


# ----------------------------------------------------------------------------- factorial moments
@dataclass(frozen=True)
class FactorialMomentReport:
    volume: float
    orders: tuple[int, ...]
    moments: tuple[float, ...]
    stderr: tuple[float, ...]
    poisson_reference: tuple[float, ...]
    envelope_kappa: float | None
    envelope: tuple[float, ...]
    violations: tuple[int, ...]
    ci_sigma: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "volume": self.volume,
            "orders": list(self.orders),
            "moments": list(self.moments),
            "stderr": list(self.stderr),
            "poisson_reference": list(self.poisson_reference),
            "envelope_kappa": self.envelope_kappa,
            "envelope": list(self.envelope),
            "violations": list(self.violations),
            "ci_sigma": self.ci_sigma,
        }


def factorial_moments(
    snapshot: Snapshot,
    box: Box | None,
    m_max: int,
    envelope_kappa: float | None = None,
    ci_sigma: float = DEFAULT_CI_SIGMA,
) -> FactorialMomentReport:
    """
    Empirical E[N(N−1)…(N−m+1)] for m = 1..m_max against (κ|Λ|)^m.

    The Poisson reference uses the estimated intensity. The envelope is a model bound, so it must
    come from the caller (see analytics.envelope_plan); without one no violation is checked. Order
    m is flagged when its moment exceeds (κ_t|Λ|)^m by more than ci_sigma standard errors.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    acc = count_stats(snapshot, box)
    vol = acc.volume
    orders = tuple(range(1, m_max + 1))
    pairs = [acc.mean_and_stderr(m) for m in orders]
    kappa = pairs[0][0] / vol
    envelope: tuple[float, ...] = ()
    violations: tuple[int, ...] = ()
    if envelope_kappa is not None:
        envelope = tuple((float(envelope_kappa) * vol) ** m for m in orders)
        violations = tuple(m for m, (mean, se), bound in zip(orders, pairs, envelope) if mean - ci_sigma * se > bound)
    return FactorialMomentReport(
        volume=vol,
        orders=orders,
        moments=tuple(p[0] for p in pairs),
        stderr=tuple(p[1] for p in pairs),
        poisson_reference=tuple((kappa * vol) ** m for m in orders),
        envelope_kappa=None if envelope_kappa is None else float(envelope_kappa),
        envelope=envelope,
        violations=violations,
        ci_sigma=ci_sigma,
    )


def poisson_count_test(snapshot: Snapshot, box: Box | None, kappa: float, min_expected: float = 5.0) -> dict[str, float]:
    """Chi-square fit of window counts to Poisson(κ|Λ|); neighbouring cells are pooled until expected >= 5."""
    acc = count_stats(snapshot, box)
    reps = acc.replicas
    mu = kappa * acc.volume
    top = int(max(max(acc.histogram, default=0), stats.poisson.ppf(1.0 - 1e-9, mu))) + 1
    expected = list(reps * stats.poisson.pmf(np.arange(top), mu))
    expected.append(reps * float(stats.poisson.sf(top - 1, mu)))
    observed = [acc.histogram.get(k, 0) for k in range(top)]
    observed.append(sum(v for k, v in acc.histogram.items() if k >= top))

    pooled_obs: list[float] = []
    pooled_exp: list[float] = []
    run_obs, run_exp = 0.0, 0.0
    for o, e in zip(observed, expected):
        run_obs += o
        run_exp += e
        if run_exp >= min_expected:
            pooled_obs.append(run_obs)
            pooled_exp.append(run_exp)
            run_obs, run_exp = 0.0, 0.0
    if pooled_exp:
        pooled_obs[-1] += run_obs
        pooled_exp[-1] += run_exp
    else:
        pooled_obs, pooled_exp = [run_obs], [run_exp]

    if len(pooled_exp) < 2:
        return {"statistic": 0.0, "pvalue": 1.0, "dof": 0.0, "mean": mu}
    scale = sum(pooled_obs) / sum(pooled_exp)
    result = stats.chisquare(pooled_obs, [e * scale for e in pooled_exp])
    return {"statistic": float(result.statistic), "pvalue": float(result.pvalue), "dof": float(len(pooled_exp) - 1), "mean": mu}


# ----------------------------------------------------------------------------- generating functional
@dataclass(frozen=True)
class ThetaFunction:
    """
    θ with values in (−1, 0] and support in a box.

    constant: θ = value on the box.
    bump:     θ = value·(1 − |x−c|²/ρ²)² inside the ball of radius ρ (half the shortest box side)
              around the box centre c.
    """

    shape: str
    value: float
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.shape not in ("constant", "bump"):
            raise ValueError(f"Unknown theta shape: {self.shape!r}")
        if not -1.0 < self.value <= 0.0:
            raise ValueError("theta values must lie in (-1, 0]")
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("theta support box is empty")

    @property
    def support(self) -> Box:
        return Box(self.lower, self.upper)

    def evaluate(self, points: ArrayLike) -> NDArray[np.float64]:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, len(self.lower))
        inside = self.support.contains(pts)
        if self.shape == "constant":
            return np.where(inside, self.value, 0.0)
        centre = 0.5 * (np.asarray(self.lower) + np.asarray(self.upper))
        rho = 0.5 * float(np.min(np.subtract(self.upper, self.lower)))
        s = np.sum((pts - centre) ** 2, axis=1) / rho**2
        return np.where(inside & (s < 1.0), self.value * (1.0 - s) ** 2, 0.0)

    def range_check(self, samples: int = 4096, seed: int = 0) -> bool:
        rng = np.random.default_rng(seed)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        span = hi - lo
        pts = lo - span + rng.random((samples, lo.size)) * 3.0 * span
        vals = self.evaluate(pts)
        outside = ~self.support.contains(pts)
        return bool(np.all(vals > -1.0) and np.all(vals <= 0.0) and np.all(vals[outside] == 0.0))


@dataclass
class ThetaStats:
    products: list[float] = field(default_factory=list)
    truncated: list[float] = field(default_factory=list)

    def merge(self, other: "ThetaStats") -> "ThetaStats":
        return ThetaStats(self.products + other.products, self.truncated + other.truncated)


@dataclass(frozen=True)
class BogoliubovEstimate:
    value: float
    stderr: float
    truncated: float
    truncated_stderr: float
    replicas: int

    def as_dict(self) -> dict[str, float]:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "truncated_order2": self.truncated,
            "truncated_order2_stderr": self.truncated_stderr,
            "replicas": self.replicas,
        }


def theta_stats(snapshot: Snapshot, theta: ThetaFunction) -> ThetaStats:
    acc = ThetaStats()
    for pts in snapshot.configurations:
        vals = theta.evaluate(pts) if len(pts) else np.empty(0)
        acc.products.append(float(np.prod(1.0 + vals)))
        s1 = math.fsum(vals)
        pair = s1 * s1 - math.fsum(vals * vals)
        acc.truncated.append(1.0 + s1 + 0.5 * pair)
    return acc


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    if n == 0:
        return 1.0, 0.0
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def estimate_from_theta(acc: ThetaStats) -> BogoliubovEstimate:
    value, se = _mean_se(acc.products)
    trunc, trunc_se = _mean_se(acc.truncated)
    return BogoliubovEstimate(value, se, trunc, trunc_se, len(acc.products))


def bogoliubov_functional(snapshot: Snapshot, theta: ThetaFunction) -> BogoliubovEstimate:
    """Replica mean of Π_{x∈γ}(1+θ(x)) and of its expansion truncated after the pair term."""
    return estimate_from_theta(theta_stats(snapshot, theta))
