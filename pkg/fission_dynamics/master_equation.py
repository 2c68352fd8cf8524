"""
Truncated master equation on discrete configurations.

States are all multisets over M sites with at most N_max points plus one absorbing sink. A
fission out of a size-N_max state would leave the table; its rate is routed to the sink so
every column of the generator still sums to zero and total probability is conserved. The sink
mass is the truncation leak and is reported with every result.

Convention: Q[target, source] holds the jump rate, so Ṗ = Q P for a column vector P.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.sparse as sp
from numpy.typing import NDArray

from fission_dynamics.errors import SizeOverflow, StepTooLarge
from fission_dynamics.gamma0_oracle import DiscreteSpace, Multiset, encode, multisets, size

logger = logging.getLogger(__name__)

MAX_STATES = 1_000_000
MAX_DENSE_STATES = 500
MAX_STEP_RATE = 0.5
AUTO_STEP_FRACTION = 0.1
NEGATIVE_TOLERANCE = 1e-12
LEAK_WARNING = 1e-6


def state_count(sites: int, n_max: int) -> int:
    """Σ_{n ≤ N_max} C(M+n−1, n), sink excluded."""
    return math.comb(sites + n_max, n_max)


@dataclass(frozen=True)
class StateSpace:
    sites: int
    n_max: int
    states: tuple[Multiset, ...]
    index: Mapping[Multiset, int] = field(repr=False)

    @property
    def sink(self) -> int:
        return len(self.states)

    @property
    def dimension(self) -> int:
        return len(self.states) + 1

    @property
    def sizes(self) -> NDArray[np.int64]:
        return np.array([size(s) for s in self.states], dtype=np.int64)

    def label(self, i: int) -> str:
        return "sink" if i == self.sink else encode(self.states[i])


def enumerate_states(sites: int, n_max: int) -> StateSpace:
    """
    Enumerate every multiset of size 0..N_max, ordered by size.

    Raises:
        SizeOverflow: more than MAX_STATES states would be produced.
    """
    if sites < 1 or n_max < 0:
        raise ValueError(f"need sites >= 1 and n_max >= 0, got {sites}, {n_max}")
    count = state_count(sites, n_max)
    if count + 1 > MAX_STATES:
        raise SizeOverflow(f"{count + 1} states exceed the limit of {MAX_STATES}")
    states = tuple(multisets(sites, n_max))
    return StateSpace(sites, n_max, states, {s: i for i, s in enumerate(states)})


def build_generator(space: DiscreteSpace, ss: StateSpace) -> sp.csc_matrix:
    """
    Sparse generator: death η → η − x at rate m(x) + E^a(x, η − x) and fission η → η − x + {j, k}
    at the unordered-pair rate. Jumps above N_max go to the sink; the sink is absorbing.
    """
    if space.sites != ss.sites:
        raise ValueError(f"model has {space.sites} sites, state space has {ss.sites}")
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for col, eta in enumerate(ss.states):
        for target, rate in space.transitions(eta):
            rows.append(ss.index.get(target, ss.sink))
            cols.append(col)
            vals.append(rate)
    off = sp.coo_matrix((vals, (rows, cols)), shape=(ss.dimension, ss.dimension)).tocsc()
    off.sum_duplicates()
    # diagonal taken from the merged column sums so each column cancels
    column_sums = np.asarray(off.sum(axis=0)).ravel()
    Q = (off - sp.diags(column_sums)).tocsc()
    logger.debug("generator: %d states, %d nonzeros, max exit rate %.4g", ss.dimension, Q.nnz, max_exit_rate(Q))
    return Q


def column_sum_defect(Q: sp.spmatrix) -> float:
    """max_j |Σ_i Q_ij|."""
    return float(np.max(np.abs(np.asarray(Q.sum(axis=0)).ravel()), initial=0.0))


def max_exit_rate(Q: sp.spmatrix) -> float:
    return float(np.max(np.abs(Q.diagonal()), initial=0.0))


def auto_step(Q: sp.spmatrix, fraction: float = AUTO_STEP_FRACTION) -> float:
    rate = max_exit_rate(Q)
    return math.inf if rate == 0.0 else fraction / rate


@dataclass
class ClipAudit:
    steps: int = 0
    clipped_entries: int = 0
    clipped_mass: float = 0.0
    most_negative: float = 0.0
    violations: int = 0

    def as_dict(self) -> dict[str, Any]:
        return {
            "steps": self.steps,
            "clipped_entries": self.clipped_entries,
            "clipped_mass": self.clipped_mass,
            "most_negative": self.most_negative,
            "violations": self.violations,
        }


@dataclass
class DistributionVector:
    state_space: StateSpace
    probabilities: NDArray[np.float64]
    time: float = 0.0
    audit: ClipAudit = field(default_factory=ClipAudit)

    @classmethod
    def point_mass(cls, ss: StateSpace, eta: Multiset) -> "DistributionVector":
        if eta not in ss.index:
            raise ValueError(f"initial state {eta} is not in the state space (n_max={ss.n_max})")
        p = np.zeros(ss.dimension)
        p[ss.index[eta]] = 1.0
        return cls(ss, p)

    @classmethod
    def from_weights(cls, ss: StateSpace, weights: Mapping[Multiset, float]) -> "DistributionVector":
        p = np.zeros(ss.dimension)
        for eta, w in weights.items():
            p[ss.index[eta]] += w
        return cls(ss, p / p.sum())

    @property
    def total(self) -> float:
        return math.fsum(self.probabilities)

    @property
    def leak(self) -> float:
        return float(self.probabilities[self.state_space.sink])

    def to_json(self) -> dict[str, Any]:
        ss = self.state_space
        return {
            "time": self.time,
            "sites": ss.sites,
            "n_max": ss.n_max,
            "states": {ss.label(i): float(p) for i, p in enumerate(self.probabilities[:-1]) if p != 0.0},
            "sink": self.leak,
            "total": self.total,
            "audit": self.audit.as_dict(),
        }


def _rk4_step(Q: sp.spmatrix, p: NDArray[np.float64], h: float) -> NDArray[np.float64]:
    k1 = Q @ p
    k2 = Q @ (p + 0.5 * h * k1)
    k3 = Q @ (p + 0.5 * h * k2)
    k4 = Q @ (p + h * k3)
    return np.asarray(p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), dtype=np.float64)


def evolve(P0: DistributionVector, Q: sp.spmatrix, t: float, dt: float | None = None) -> DistributionVector:
    """
    Integrate Ṗ = QP over [0, t] with fixed-step RK4.

    The step count is ceil(t / dt) so the final step lands on t exactly. Entries that go
    negative are clipped to zero and recorded in the audit.

    Raises:
        StepTooLarge: dt · max|Q_ii| exceeds 0.5.
    """
    if t < 0.0:
        raise ValueError(f"t must be nonnegative, got {t}")
    rate = max_exit_rate(Q)
    step = auto_step(Q) if dt is None else dt
    if step <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if step * rate > MAX_STEP_RATE:
        raise StepTooLarge(f"dt={step:.4g} with max exit rate {rate:.4g} gives {step * rate:.3g} > {MAX_STEP_RATE}")
    audit = ClipAudit(**P0.audit.as_dict())
    p = P0.probabilities.astype(np.float64, copy=True)
    if t == 0.0 or rate == 0.0:
        return DistributionVector(P0.state_space, p, P0.time + t, audit)

    n_steps = math.ceil(t / step)
    h = t / n_steps
    for _ in range(n_steps):
        p = _rk4_step(Q, p, h)
        low = float(p.min())
        if low < 0.0:
            negative = p < 0.0
            audit.clipped_entries += int(negative.sum())
            audit.clipped_mass += float(-p[negative].sum())
            audit.most_negative = min(audit.most_negative, low)
            if low < -NEGATIVE_TOLERANCE:
                audit.violations += 1
                logger.warning("probability %.3e below tolerance at step %d", low, audit.steps)
            p[negative] = 0.0
        audit.steps += 1

    result = DistributionVector(P0.state_space, p, P0.time + t, audit)
    if result.leak > LEAK_WARNING:
        logger.warning("truncation leak %.3e at t=%.4g exceeds %.0e; raise n_max or shorten t", result.leak, result.time, LEAK_WARNING)
    logger.info("evolved %d steps of %.4g to t=%.4g (leak %.3e)", n_steps, h, result.time, result.leak)
    return result


def expm_reference(Q: sp.spmatrix, P0: DistributionVector, t: float) -> DistributionVector:
    """
    Dense matrix-exponential solution e^{tQ}P0.

    Raises:
        SizeOverflow: more than MAX_DENSE_STATES states.
    """
    n = Q.shape[0]
    if n > MAX_DENSE_STATES:
        raise SizeOverflow(f"dense exponential refused for {n} states (limit {MAX_DENSE_STATES})")
    p = scipy.linalg.expm(t * Q.toarray()) @ P0.probabilities
    return DistributionVector(P0.state_space, np.asarray(p, dtype=np.float64), P0.time + t)


def moments(P: DistributionVector, m_max: int) -> list[float]:
    """[Σ_η (1+|η|)^m P(η) for m = 0..m_max], sink excluded."""
    n = P.state_space.sizes.astype(np.float64)
    weights = P.probabilities[:-1]
    return [math.fsum((1.0 + n) ** m * weights) for m in range(m_max + 1)]


def exp_moment(P: DistributionVector, kappa: float) -> float:
    """Σ_η e^{κ|η|} P(η), sink excluded."""
    n = P.state_space.sizes.astype(np.float64)
    return math.fsum(np.exp(kappa * n) * P.probabilities[:-1])


class Marginal(NamedTuple):
    probabilities: NDArray[np.float64]
    leak: float


def marginal_n(P: DistributionVector) -> Marginal:
    """Law of N = |η| on 0..N_max; the sink mass is returned separately."""
    out = np.bincount(P.state_space.sizes, weights=P.probabilities[:-1], minlength=P.state_space.n_max + 1)
    return Marginal(np.asarray(out, dtype=np.float64), P.leak)


def marginal_table(P: DistributionVector) -> pd.DataFrame:
    law = marginal_n(P)
    return pd.DataFrame({"n": np.arange(law.probabilities.size), "probability": law.probabilities})


def total_variation(p: Sequence[float] | NDArray[np.float64], q: Sequence[float] | NDArray[np.float64]) -> float:
    """½ Σ |p − q|, the shorter vector padded with zeros."""
    a = np.asarray(p, dtype=np.float64)
    b = np.asarray(q, dtype=np.float64)
    n = max(a.size, b.size)
    a = np.pad(a, (0, n - a.size))
    b = np.pad(b, (0, n - b.size))
    return 0.5 * float(np.abs(a - b).sum())


def empirical_law(counts: Sequence[int] | NDArray[np.int64], n_max: int | None = None) -> NDArray[np.float64]:
    values = np.asarray(counts, dtype=np.int64)
    length = int(values.max(initial=0)) + 1 if n_max is None else n_max + 1
    hist = np.bincount(values, minlength=length).astype(np.float64)
    return np.asarray(hist / max(values.size, 1), dtype=np.float64)


# ----------------------------------------------------------------------------- model builders
def _ring_adjacency(sites: int) -> NDArray[np.float64]:
    adj = np.zeros((sites, sites))
    if sites > 1:
        for i in range(sites):
            adj[i, (i + 1) % sites] = 1.0
            adj[i, (i - 1) % sites] = 1.0
    return adj


def dispersal_matrix(sites: int, kind: str) -> NDArray[np.float64]:
    """Row-stochastic offspring displacement on a ring: uniform, or nearest (stay/left/right)."""
    if kind == "uniform":
        return np.full((sites, sites), 1.0 / sites)
    if kind == "nearest":
        P = np.zeros((sites, sites))
        for i in range(sites):
            for step in (-1, 0, 1):
                P[i, (i + step) % sites] += 1.0 / 3.0
        return P
    raise ValueError(f"unknown dispersal '{kind}'")


def ring_space(
    sites: int,
    mortality: float | Sequence[float],
    same_site: float,
    neighbour: float,
    fission_rate: float,
    dispersal: str = "uniform",
) -> DiscreteSpace:
    """
    Ring of sites: a = same_site·I + neighbour·adjacency, and offspring placed independently by
    the dispersal matrix P, so b[i, j, k] = ⟨b⟩ P[i, j] P[i, k] and every row mass is ⟨b⟩.
    """
    m = np.broadcast_to(np.asarray(mortality, dtype=np.float64), (sites,)).copy()
    a = same_site * np.eye(sites) + neighbour * _ring_adjacency(sites)
    P = dispersal_matrix(sites, dispersal)
    b = fission_rate * np.einsum("ij,ik->ijk", P, P)
    return DiscreteSpace(m, a, b)


def discrete_space_from_config(section: Mapping[str, Any]) -> DiscreteSpace:
    competition = section.get("competition", {})
    return ring_space(
        int(section["sites"]),
        section.get("mortality", 1.0),
        float(competition.get("same_site", 0.0)),
        float(competition.get("neighbour", 0.0)),
        float(section.get("fission_rate", 0.0)),
        str(section.get("dispersal", "uniform")),
    )
