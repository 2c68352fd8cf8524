"""
Exact calculus on finite configurations over a small set of sites.

A configuration is a multiset over sites 0..M-1, stored as a tuple of occupation numbers
(n_0, ..., n_{M-1}). Integrals over R^d become sums over sites, and the Lebesgue–Poisson
measure becomes the weight

    λ(η) = 1 / Π_i n_i!

so that Σ_η λ(η) G(η) equals Σ_n (1/n!) Σ_{ordered n-tuples of sites} G. Sub-configurations are
subsets of particles: a sub-multiset ξ ≤ η is counted Π_i C(n_i, ξ_i) times.

With these conventions every identity used here is an exact finite sum:

    K-transform     (KG)(γ) = Σ_{ξ ≤ γ} Π C(γ_i, ξ_i) G(ξ)
    correlation     k(η)    = Σ_ξ λ(ξ) R(η ⊎ ξ)
    inverse         R(η)    = Σ_ξ (−1)^{|ξ|} λ(ξ) k(η ⊎ ξ)
    pairing         Σ_γ (KG)(γ) μ(γ) = Σ_η λ(η) G(η) k_μ(η),    μ = R λ
"""

from __future__ import annotations

import functools
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from fission_dynamics.errors import TruncationOverflow

logger = logging.getLogger(__name__)

Multiset = tuple[int, ...]

DEFAULT_SITES = 3
DEFAULT_N_MAX = 5


# ----------------------------------------------------------------------------- multisets
@functools.lru_cache(maxsize=None)
def multisets_of_size(sites: int, n: int) -> tuple[Multiset, ...]:
    """All occupation vectors over `sites` with total n, in lexicographic order of sorted sites."""
    out = []
    for combo in itertools.combinations_with_replacement(range(sites), n):
        counts = [0] * sites
        for s in combo:
            counts[s] += 1
        out.append(tuple(counts))
    return tuple(out)


def multisets(sites: int, n_max: int) -> Iterator[Multiset]:
    for n in range(n_max + 1):
        yield from multisets_of_size(sites, n)


def size(eta: Multiset) -> int:
    return sum(eta)


def lp_weight(eta: Multiset) -> float:
    return 1.0 / math.prod(math.factorial(c) for c in eta)


def sub_multisets(eta: Multiset) -> Iterator[tuple[Multiset, int]]:
    """(ξ, multiplicity Π C(η_i, ξ_i)) for every ξ ≤ η."""
    for xi in itertools.product(*(range(c + 1) for c in eta)):
        yield tuple(xi), math.prod(math.comb(c, k) for c, k in zip(eta, xi))


def add(eta: Multiset, xi: Multiset) -> Multiset:
    return tuple(a + b for a, b in zip(eta, xi))


def subtract(eta: Multiset, xi: Multiset) -> Multiset:
    return tuple(a - b for a, b in zip(eta, xi))


def shift(eta: Multiset, *changes: tuple[int, int]) -> Multiset | None:
    """η with (site, delta) changes applied; None if a count would go negative."""
    counts = list(eta)
    for site, delta in changes:
        counts[site] += delta
    if min(counts) < 0:
        return None
    return tuple(counts)


def encode(eta: Multiset) -> str:
    """Canonical encoding: sorted site indices joined by commas ('' for the empty configuration)."""
    return ",".join(str(i) for i, c in enumerate(eta) for _ in range(c))


def decode(key: str, sites: int) -> Multiset:
    counts = [0] * sites
    for token in filter(None, key.split(",")):
        counts[int(token)] += 1
    return tuple(counts)


# ----------------------------------------------------------------------------- tables
@dataclass
class FiniteFunctionOnGamma0:
    """A real function on multisets over `sites` sites with at most `n_max` points."""

    sites: int
    n_max: int
    values: dict[Multiset, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.sites < 1 or self.n_max < 0:
            raise ValueError("need sites >= 1 and n_max >= 0")
        for eta in multisets(self.sites, self.n_max):
            self.values.setdefault(eta, 0.0)

    @classmethod
    def from_callable(cls, sites: int, n_max: int, f: Callable[[Multiset], float]) -> "FiniteFunctionOnGamma0":
        return cls(sites, n_max, {eta: float(f(eta)) for eta in multisets(sites, n_max)})

    @classmethod
    def indicator_empty(cls, sites: int, n_max: int) -> "FiniteFunctionOnGamma0":
        return cls.from_callable(sites, n_max, lambda eta: 1.0 if size(eta) == 0 else 0.0)

    def __call__(self, eta: Multiset) -> float:
        if size(eta) > self.n_max:
            raise TruncationOverflow(f"table defined up to {self.n_max} points, asked for {size(eta)}")
        return self.values.get(eta, 0.0)

    def __iter__(self) -> Iterator[tuple[Multiset, float]]:
        return iter(self.values.items())

    def extended(self, n_max: int) -> "FiniteFunctionOnGamma0":
        """Same function, declared zero on sizes n_max+1.. up to the new bound."""
        return FiniteFunctionOnGamma0(self.sites, max(n_max, self.n_max), dict(self.values))

    def restricted(self, n_max: int) -> "FiniteFunctionOnGamma0":
        return FiniteFunctionOnGamma0(self.sites, n_max, {e: v for e, v in self.values.items() if size(e) <= n_max})

    def scaled(self, c: float) -> "FiniteFunctionOnGamma0":
        return FiniteFunctionOnGamma0(self.sites, self.n_max, {e: c * v for e, v in self.values.items()})

    def max_abs_difference(self, other: "FiniteFunctionOnGamma0") -> float:
        n = min(self.n_max, other.n_max)
        return max(abs(self(e) - other(e)) for e in multisets(self.sites, n))

    def to_json(self) -> dict[str, Any]:
        return {
            "sites": self.sites,
            "n_max": self.n_max,
            "values": {encode(e): v for e, v in sorted(self.values.items(), key=lambda kv: (size(kv[0]), kv[0]))},
        }

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "FiniteFunctionOnGamma0":
        sites = int(payload["sites"])
        return cls(sites, int(payload["n_max"]), {decode(k, sites): float(v) for k, v in payload["values"].items()})

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ----------------------------------------------------------------------------- discrete model
@dataclass(frozen=True, eq=False)
class DiscreteSpace:
    """
    Site-level model: mortality m[i], symmetric competition a[i][j] (a[i][i] acts between two
    particles on the same site) and fission densities b[i][j][k] over ordered offspring sites,
    symmetric in (j, k), with row masses <b>_i = Σ_{j,k} b[i][j][k].
    """

    m: NDArray[np.float64]
    a: NDArray[np.float64]
    b: NDArray[np.float64]

    def __post_init__(self) -> None:
        m = np.asarray(self.m, dtype=np.float64)
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        M = m.size
        if a.shape != (M, M) or b.shape != (M, M, M):
            raise ValueError(f"inconsistent shapes: m {m.shape}, a {a.shape}, b {b.shape}")
        if np.any(m < 0.0) or np.any(a < 0.0) or np.any(b < 0.0):
            raise ValueError("discrete kernels must be nonnegative")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-15):
            raise ValueError("competition matrix must be symmetric")
        if not np.allclose(b, b.transpose(0, 2, 1), rtol=0.0, atol=1e-15):
            raise ValueError("fission tensor must be symmetric in the offspring sites")
        if not np.all(np.isfinite(b.sum(axis=(1, 2)))):
            raise ValueError("fission row masses must be finite")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def sites(self) -> int:
        return int(self.m.size)

    @property
    def b_mass(self) -> NDArray[np.float64]:
        return np.asarray(self.b.sum(axis=(1, 2)), dtype=np.float64)

    def competition_load(self, eta: Multiset) -> NDArray[np.float64]:
        """E^a(x_i, η∖x_i) for a particle at each site i (meaningful where n_i >= 1)."""
        n = np.asarray(eta, dtype=np.float64)
        return np.asarray(self.a @ n - np.diag(self.a), dtype=np.float64)

    def energy_a(self, eta: Multiset) -> float:
        n = np.asarray(eta, dtype=np.float64)
        return float(n @ self.competition_load(eta))

    def mortality(self, eta: Multiset) -> float:
        return float(np.asarray(eta, dtype=np.float64) @ self.m)

    def psi(self, eta: Multiset) -> float:
        """Ψ(η) = M(η) + E^a(η) + Σ_i n_i <b>_i."""
        n = np.asarray(eta, dtype=np.float64)
        return float(n @ (self.m + self.b_mass)) + self.energy_a(eta)

    def transitions(self, eta: Multiset) -> list[tuple[Multiset, float]]:
        """Outgoing jumps (target, rate); fission offspring pairs listed once as unordered {j, k}."""
        out: list[tuple[Multiset, float]] = []
        load = self.competition_load(eta)
        M = self.sites
        for i, count in enumerate(eta):
            if count == 0:
                continue
            death = count * (self.m[i] + load[i])
            if death > 0.0:
                target = shift(eta, (i, -1))
                assert target is not None
                out.append((target, float(death)))
            for j in range(M):
                for k in range(j, M):
                    weight = self.b[i, j, k] if j == k else 2.0 * self.b[i, j, k]
                    if weight > 0.0:
                        target = shift(eta, (i, -1), (j, 1), (k, 1))
                        assert target is not None
                        out.append((target, float(count * weight)))
        return out


# ----------------------------------------------------------------------------- sums and transforms
def lp_sum(G: FiniteFunctionOnGamma0, n_max: int | None = None) -> float:
    """Σ_{|η| ≤ n_max} λ(η) G(η)."""
    top = G.n_max if n_max is None else n_max
    return math.fsum(lp_weight(eta) * G(eta) for eta in multisets(G.sites, top))


def lp_pairing(G: FiniteFunctionOnGamma0, k: FiniteFunctionOnGamma0, n_max: int | None = None) -> float:
    """⟨⟨G, k⟩⟩ = Σ_η λ(η) G(η) k(η)."""
    top = min(G.n_max, k.n_max) if n_max is None else n_max
    return math.fsum(lp_weight(eta) * G(eta) * k(eta) for eta in multisets(G.sites, top))


def measure_pairing(F: FiniteFunctionOnGamma0, mu: FiniteFunctionOnGamma0) -> float:
    """Σ_γ F(γ) μ(γ) over the support of μ."""
    return math.fsum(F(gamma) * w for gamma, w in mu if w != 0.0)


def k_transform(G: FiniteFunctionOnGamma0, gamma: Multiset) -> float:
    """(KG)(γ): sum of G over all sub-configurations of γ."""
    return math.fsum(mult * G(xi) for xi, mult in sub_multisets(gamma))


def k_transform_table(G: FiniteFunctionOnGamma0) -> FiniteFunctionOnGamma0:
    return FiniteFunctionOnGamma0.from_callable(G.sites, G.n_max, lambda gamma: k_transform(G, gamma))


def correlation_from_density(R: FiniteFunctionOnGamma0) -> FiniteFunctionOnGamma0:
    """k(η) = Σ_ξ λ(ξ) R(η ⊎ ξ), summed over every ξ the table allows."""
    M, N = R.sites, R.n_max

    def k_at(eta: Multiset) -> float:
        rest = N - size(eta)
        return math.fsum(lp_weight(xi) * R(add(eta, xi)) for xi in multisets(M, rest))

    return FiniteFunctionOnGamma0.from_callable(M, N, k_at)


def density_from_correlation(k: FiniteFunctionOnGamma0) -> FiniteFunctionOnGamma0:
    """R(η) = Σ_ξ (−1)^{|ξ|} λ(ξ) k(η ⊎ ξ); inverse of correlation_from_density on the same table."""
    M, N = k.sites, k.n_max

    def r_at(eta: Multiset) -> float:
        rest = N - size(eta)
        return math.fsum((-1) ** size(xi) * lp_weight(xi) * k(add(eta, xi)) for xi in multisets(M, rest))

    return FiniteFunctionOnGamma0.from_callable(M, N, r_at)


def weights_to_density(mu: FiniteFunctionOnGamma0) -> FiniteFunctionOnGamma0:
    """R = μ / λ."""
    return FiniteFunctionOnGamma0(mu.sites, mu.n_max, {e: w / lp_weight(e) for e, w in mu})


def density_to_weights(R: FiniteFunctionOnGamma0) -> FiniteFunctionOnGamma0:
    return FiniteFunctionOnGamma0(R.sites, R.n_max, {e: r * lp_weight(e) for e, r in R})


def product_density(sites: int, n_max: int, z: float | Sequence[float]) -> FiniteFunctionOnGamma0:
    """Density of independent Poisson(z_i) site counts: R(η) = e^{−Σz} Π z_i^{n_i}."""
    rates = np.broadcast_to(np.asarray(z, dtype=np.float64), (sites,))
    norm = math.exp(-float(rates.sum()))
    return FiniteFunctionOnGamma0.from_callable(
        sites, n_max, lambda eta: norm * math.prod(float(r) ** c for r, c in zip(rates, eta))
    )


def e_theta(theta: ArrayLike, n_max: int) -> FiniteFunctionOnGamma0:
    """e(θ; η) = Π_{x∈η} θ(x)."""
    th = np.asarray(theta, dtype=np.float64)
    return FiniteFunctionOnGamma0.from_callable(th.size, n_max, lambda eta: math.prod(float(t) ** c for t, c in zip(th, eta)))


def f_theta(theta: ArrayLike, n_max: int) -> FiniteFunctionOnGamma0:
    """F^θ(γ) = Π_{x∈γ} (1 + θ(x)) = K e(θ; ·)(γ)."""
    th = np.asarray(theta, dtype=np.float64)
    return FiniteFunctionOnGamma0.from_callable(
        th.size, n_max, lambda eta: math.prod((1.0 + float(t)) ** c for t, c in zip(th, eta))
    )


# ----------------------------------------------------------------------------- operators
def _output_bound(requested: int | None, available: int, headroom: int) -> int:
    top = available - headroom if requested is None else requested
    if top < 0 or top + headroom > available:
        raise TruncationOverflow(f"input defined up to {available} points; output up to {top} needs {top + headroom}")
    return top


def apply_generator(F: FiniteFunctionOnGamma0, space: DiscreteSpace, n_max: int | None = None) -> FiniteFunctionOnGamma0:
    """
    (LF)(γ) = Σ_jumps rate · (F(target) − F(γ)).

    Raises:
        TruncationOverflow: F is not defined one point above the requested output size.
    """
    top = _output_bound(n_max, F.n_max, 1)

    def lf(gamma: Multiset) -> float:
        base = F(gamma)
        return math.fsum(rate * (F(target) - base) for target, rate in space.transitions(gamma))

    return FiniteFunctionOnGamma0.from_callable(space.sites, top, lf)


def apply_fokker_planck(
    mu: FiniteFunctionOnGamma0, space: DiscreteSpace, n_max: int | None = None
) -> FiniteFunctionOnGamma0:
    """
    L*μ: every configuration loses μ(γ)Ψ(γ) and pushes μ(γ)·rate to each jump target.

    The output is defined one point above μ by default.

    Raises:
        TruncationOverflow: mass would be pushed above a requested output size.
    """
    top = mu.n_max + 1 if n_max is None else n_max
    out: dict[Multiset, list[float]] = {}
    for gamma, weight in mu:
        if weight == 0.0:
            continue
        for target, rate in space.transitions(gamma):
            if size(target) > top:
                raise TruncationOverflow(f"mass flows to size {size(target)} above output bound {top}")
            out.setdefault(target, []).append(rate * weight)
            out.setdefault(gamma, []).append(-rate * weight)
    return FiniteFunctionOnGamma0(space.sites, top, {e: math.fsum(v) for e, v in out.items()})


def apply_l_delta(k: FiniteFunctionOnGamma0, space: DiscreteSpace, n_max: int | None = None) -> FiniteFunctionOnGamma0:
    """
    Evolution operator of correlation functions, term by term:

        A1(η) = −Ψ(η) k(η)
        A2(η) = Σ_{ordered particle pairs (y1,y2) in η} Σ_x b_x(y1,y2) k(η − y1 − y2 + x)
        B1(η) = −Σ_x k(η + x) Σ_{y∈η} a(x, y)
        B2(η) = 2 Σ_{y1∈η} Σ_x Σ_{y2} b_x(y1,y2) k(η − y1 + x)

    Raises:
        TruncationOverflow: k is not defined one point above the requested output size.
    """
    top = _output_bound(n_max, k.n_max, 1)
    M = space.sites
    a, b = space.a, space.b
    b_marginal = b.sum(axis=2)  # b_marginal[x, j] = Σ_k b_x(j, k)

    def value(eta: Multiset) -> float:
        n = np.asarray(eta, dtype=np.float64)
        terms = [-space.psi(eta) * k(eta)]
        for j in range(M):
            if eta[j] == 0:
                continue
            for kk in range(M):
                pairs = eta[j] * (eta[kk] - (1 if j == kk else 0))
                if pairs <= 0:
                    continue
                for x in range(M):
                    if b[x, j, kk] > 0.0:
                        target = shift(eta, (j, -1), (kk, -1), (x, 1))
                        assert target is not None
                        terms.append(pairs * b[x, j, kk] * k(target))
        load = a @ n
        for x in range(M):
            if load[x] != 0.0:
                up = shift(eta, (x, 1))
                assert up is not None
                terms.append(-load[x] * k(up))
        for j in range(M):
            if eta[j] == 0:
                continue
            for x in range(M):
                if b_marginal[x, j] > 0.0:
                    target = shift(eta, (j, -1), (x, 1))
                    assert target is not None
                    terms.append(2.0 * eta[j] * b_marginal[x, j] * k(target))
        return math.fsum(terms)

    return FiniteFunctionOnGamma0.from_callable(M, top, value)


def local_truncation(
    R: FiniteFunctionOnGamma0, region: Sequence[int], N: int
) -> tuple[FiniteFunctionOnGamma0, FiniteFunctionOnGamma0]:
    """
    Project the density onto configurations inside `region`, then drop configurations above N.

    The projection density is R^Λ(η) = Σ_{ζ outside Λ} λ(ζ) R(η ⊎ ζ) for η inside Λ, so for
    N = R.n_max the correlation function of the truncation equals k restricted to Γ_Λ.

    Returns:
        (R^{Λ,N}, q₀^{Λ,N}) with q₀ = correlation_from_density(R^{Λ,N}).
    """
    M = R.sites
    inside = set(region)
    if not inside <= set(range(M)):
        raise ValueError(f"region {sorted(inside)} has sites outside 0..{M - 1}")

    def in_region(eta: Multiset) -> bool:
        return all(c == 0 or i in inside for i, c in enumerate(eta))

    def projected(eta: Multiset) -> float:
        if size(eta) > N or not in_region(eta):
            return 0.0
        rest = R.n_max - size(eta)
        return math.fsum(
            lp_weight(zeta) * R(add(eta, zeta))
            for zeta in multisets(M, rest)
            if not any(zeta[i] for i in inside)
        )

    truncated = FiniteFunctionOnGamma0.from_callable(M, R.n_max, projected)
    return truncated, correlation_from_density(truncated)


def k_alpha_norm(k: FiniteFunctionOnGamma0, alpha: float) -> float:
    """sup over represented η of e^{−α|η|} |k(η)|."""
    return max(math.exp(-alpha * size(eta)) * abs(v) for eta, v in k)


# ----------------------------------------------------------------------------- identity checks
def product_recursion_residual(g: ArrayLike, gamma: Multiset, site: int) -> float:
    """|Σ_{η≤γ} Π g − (1 + g(x)) Σ_{η≤γ∖x} Π g| for a particle x at `site` of γ."""
    weights = np.asarray(g, dtype=np.float64)
    rest = shift(gamma, (site, -1))
    if rest is None:
        raise ValueError(f"site {site} is empty in {gamma}")

    def product_sum(conf: Multiset) -> float:
        return math.fsum(mult * math.prod(float(w) ** c for w, c in zip(weights, xi)) for xi, mult in sub_multisets(conf))

    return abs(product_sum(gamma) - (1.0 + float(weights[site])) * product_sum(rest))


def double_sum_residual(
    G: Callable[[Multiset, Multiset, Multiset], float], sites: int, n_max: int
) -> float:
    """|Σ_η λ(η) Σ_{ξ≤η} G(ξ, η, η∖ξ) − Σ_{ξ,ζ} λ(ξ) λ(ζ) G(ξ, ξ⊎ζ, ζ)| with |η| ≤ n_max."""
    left = math.fsum(
        lp_weight(eta) * math.fsum(mult * G(xi, eta, subtract(eta, xi)) for xi, mult in sub_multisets(eta))
        for eta in multisets(sites, n_max)
    )
    right = math.fsum(
        lp_weight(xi) * lp_weight(zeta) * G(xi, add(xi, zeta), zeta)
        for xi in multisets(sites, n_max)
        for zeta in multisets(sites, n_max - size(xi))
    )
    return abs(left - right)


def pairing_residual(G: FiniteFunctionOnGamma0, mu: FiniteFunctionOnGamma0) -> float:
    """|Σ_γ (KG)(γ) μ(γ) − ⟨⟨G, k_μ⟩⟩|; μ and G on the same table."""
    k = correlation_from_density(weights_to_density(mu))
    return abs(measure_pairing(k_transform_table(G), mu) - lp_pairing(G, k))


def growth_bound_holds(G: FiniteFunctionOnGamma0, gamma: Multiset) -> bool:
    """|KG(γ)| ≤ C_G (1 + |γ ∩ Λ_G|)^{N_G} with C_G = max|G|, N_G, Λ_G from the support of G."""
    support = [eta for eta, v in G if v != 0.0]
    if not support:
        return k_transform(G, gamma) == 0.0
    c_g = max(abs(G(eta)) for eta in support)
    n_g = max(size(eta) for eta in support)
    region = {i for eta in support for i, c in enumerate(eta) if c}
    local = sum(c for i, c in enumerate(gamma) if i in region)
    return abs(k_transform(G, gamma)) <= c_g * (1 + local) ** n_g * (1.0 + 1e-12)


def positivity_holds(G: FiniteFunctionOnGamma0, mu: FiniteFunctionOnGamma0) -> bool | None:
    """
    For G with KG ≥ 0 on every represented configuration, check ⟨⟨G, k_μ⟩⟩ ≥ 0.

    Returns None when KG takes a negative value (G is outside the positivity class).
    """
    kg = k_transform_table(G)
    if min(v for _, v in kg) < 0.0:
        return None
    k = correlation_from_density(weights_to_density(mu))
    return lp_pairing(G, k) >= -1e-12


def duality_residual(space: DiscreteSpace, mu: FiniteFunctionOnGamma0, theta: ArrayLike) -> float:
    """
    |Σ_γ μ(γ) (L F^θ)(γ) − ⟨⟨L^Δ k_μ, e(θ;·)⟩⟩| for μ supported on at most mu.n_max points.
    """
    N = mu.n_max
    lhs = measure_pairing(apply_generator(f_theta(theta, N + 1), space), mu)
    k = correlation_from_density(weights_to_density(mu)).extended(N + 2)
    rhs = lp_pairing(apply_l_delta(k, space), e_theta(theta, N + 1))
    return abs(lhs - rhs)


def random_space(sites: int, rng: np.random.Generator, scale: float = 1.0) -> DiscreteSpace:
    """Random symmetric discrete model (used by property checks)."""
    a = rng.random((sites, sites)) * scale
    b = rng.random((sites, sites, sites)) * scale / sites**2
    return DiscreteSpace(rng.random(sites) * scale, 0.5 * (a + a.T), 0.5 * (b + b.transpose(0, 2, 1)))


def random_measure(sites: int, n_max: int, rng: np.random.Generator) -> FiniteFunctionOnGamma0:
    """Random probability weights on all multisets up to n_max."""
    raw = {eta: float(rng.random()) for eta in multisets(sites, n_max)}
    total = math.fsum(raw.values())
    return FiniteFunctionOnGamma0(sites, n_max, {e: v / total for e, v in raw.items()})
