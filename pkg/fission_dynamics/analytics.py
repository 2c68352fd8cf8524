"""
Constructive constants of the model: the domination pair (ω, υ), time horizons for the
correlation-function evolution, growth of the sub-Poissonian envelope and the continuation
schedule that covers any finite horizon.

Everything here is a pure function of the derived kernel constants; nothing is simulated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, NamedTuple, Sequence

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import pdist

from fission_dynamics.errors import (
    AlphaTooSmall,
    BadOmega,
    BadOrdering,
    HorizonNotReached,
    NoAdmissibleR,
    OutOfDomain,
    RiemannBoundFailed,
    ScheduleInvariantBroken,
)
from fission_dynamics.kernels import DerivedConstants, FissionKernel, ModelParams, RadialKernel, unit_ball_volume

logger = logging.getLogger(__name__)

INV_E = math.exp(-1.0)
LAMBERT_MAX_ITER = 100
LAMBERT_RESIDUAL = 1e-12

# Densest ball-packing fractions; Δ = 1 is the conservative fallback above d = 3.
PACKING_DENSITY = {1: 1.0, 2: math.pi / math.sqrt(12.0), 3: math.pi / math.sqrt(18.0)}

MAX_RIEMANN_CELLS = 4_000_000
MAX_H_HALVINGS = 10
MAX_R_HALVINGS = 30
MAX_SCHEDULE_STEPS = 100_000


# ----------------------------------------------------------------------------- Lambert W
def lambert_w0(x: float) -> float:
    """
    Principal branch of Lambert's W, the solution of w·e^w = x with w ≥ −1.

    Halley iteration started from the branch-point series sqrt(2(ex + 1)) − 1 when |x + 1/e| ≤ 1.5
    and from the asymptote log x − log log x otherwise; stops when the update is below
    0.7e−16·(2 + |w|).

    Raises:
        OutOfDomain: x < −1/e or x is NaN.
    """
    if math.isnan(x) or x < -INV_E:
        raise OutOfDomain(f"Lambert W0 is defined for x >= -1/e, got {x!r}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf

    if abs(x + INV_E) <= 1.5:
        w = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0)) - 1.0
    else:
        lx = math.log(x)
        w = lx - math.log(lx)

    for _ in range(LAMBERT_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        w1 = w + 1.0 if w != -1.0 else w
        denom = ew * w1 - (w + 2.0) * f / (2.0 * w1)
        if denom == 0.0:
            break
        dw = f / denom
        w -= dw
        if abs(dw) < 0.7e-16 * (2.0 + abs(w)):
            break

    residual = abs(w * math.exp(w) - x)
    if residual > LAMBERT_RESIDUAL * max(1.0, abs(x)):
        logger.warning("Lambert W0(%r) residual %.3e above tolerance", x, residual)
    return w


# ----------------------------------------------------------------------------- time bounds
def growth_exponent(c: DerivedConstants, upsilon: float) -> float:
    """c = ⟨b⟩ + υ − m_*."""
    return c.b_mass + upsilon - c.m_lower


def _growth_rate(b_mass: float, upsilon: float) -> float:
    return 2.0 * b_mass + upsilon


def time_horizon(alpha2: float, alpha1: float, a_mass: float, b_mass: float, upsilon: float) -> float:
    """T(α₂, α₁) = (α₂ − α₁) / (2⟨b⟩ + υ + ⟨a⟩e^{α₂})."""
    return (alpha2 - alpha1) / (_growth_rate(b_mass, upsilon) + a_mass * math.exp(alpha2))


def optimal_gap(alpha: float, a_mass: float, b_mass: float, upsilon: float) -> float:
    """δ(α) = 1 + W(((2⟨b⟩ + υ)/⟨a⟩) e^{−α−1}), the maximizing α₂ − α₁."""
    if a_mass <= 0.0:
        raise OutOfDomain("optimal gap needs <a> > 0")
    return 1.0 + lambert_w0(_growth_rate(b_mass, upsilon) / a_mass * math.exp(-alpha - 1.0))


def max_horizon(alpha1: float, a_mass: float, b_mass: float, upsilon: float) -> float:
    """T_max(α₁) = e^{−α₁−δ(α₁)}/⟨a⟩ = max over α₂ of T(α₂, α₁)."""
    return math.exp(-alpha1 - optimal_gap(alpha1, a_mass, b_mass, upsilon)) / a_mass


def exp_moment_horizon(kappa: float, kappa_prime: float, b_mass: float) -> float:
    """T(κ, κ′) = ((κ − κ′)/⟨b⟩) e^{−κ}."""
    return (kappa - kappa_prime) / b_mass * math.exp(-kappa)


def exp_moment_horizon_max(kappa_prime: float, b_mass: float) -> float:
    """max_κ T(κ, κ′), attained at κ = κ′ + 1."""
    return math.exp(-kappa_prime) / (math.e * b_mass)


def generating_functional_horizon(vartheta: float, b_mass: float) -> float:
    """Horizon on which the Bogoliubov functional stays controlled for ‖θ‖ = e^ϑ."""
    return 1.0 / (math.e * b_mass * (1.0 + math.exp(vartheta)))


def ovsyannikov_time_b2(alpha2: float, alpha1: float, b_mass: float, upsilon: float) -> float:
    """(α₂ − α₁)/(2⟨b⟩ + υ): horizon of the B₂,υ part alone."""
    return (alpha2 - alpha1) / _growth_rate(b_mass, upsilon)


def q_norm_bound(T: float, t: float) -> float:
    """Norm bound T/(T − t) of the resolvent series for 0 ≤ t < T."""
    if not 0.0 <= t < T:
        raise BadOrdering(f"need 0 <= t < T, got t={t}, T={T}")
    return T / (T - t)


def l_delta_norm_bound(c: DerivedConstants, alpha: float, alpha_prime: float) -> dict[str, float]:
    """Bounds on ‖L^Δ‖ and on its A₁ part as operators from the α′ space to the α space."""
    if alpha <= alpha_prime:
        raise BadOrdering(f"need alpha > alpha', got {alpha} <= {alpha_prime}")
    gap = alpha - alpha_prime
    quadratic = 4.0 * (c.m_upper + c.b_mass + c.a_star) / (math.e**2 * gap**2)
    full = (
        4.0 * (c.m_upper + c.b_mass + c.a_star + c.beta_star * math.exp(-alpha_prime)) / (math.e**2 * gap**2)
        + (c.a_mass * math.exp(alpha_prime) + 2.0 * c.b_mass) / (math.e * gap)
    )
    return {"l_delta": full, "a1": quadratic}


def psi_moment_bound(alpha: float, c: DerivedConstants, volume: float, k_norm: float = 1.0) -> float:
    """Bound on the Ψ-weighted moment of a local truncation with ‖k‖_α = k_norm on a region of given volume."""
    z = volume * math.exp(alpha)
    return k_norm * (c.m_upper + c.a_star + c.b_mass) * z * (2.0 + z) * math.exp(2.0 * z)


@dataclass(frozen=True)
class TimeBoundReport:
    alpha1: float
    alpha2: float
    upsilon: float
    T: float
    tau: float
    varpi_b_upsilon: float
    varpi_b2_upsilon: float
    delta_alpha1: float
    T_max_alpha1: float
    kappa: float
    kappa_prime: float
    T_kappa: float
    T_b2: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def time_bounds(
    c: DerivedConstants, upsilon: float, alpha1: float, alpha2: float, kappa: float, kappa_prime: float
) -> TimeBoundReport:
    """
    Horizons for given norm indices. ϖ values are the operator-norm growth factors at α₂.

    Raises:
        BadOrdering: α₂ ≤ α₁ or not κ > κ′ > 0.
    """
    if alpha2 <= alpha1:
        raise BadOrdering(f"need alpha2 > alpha1, got {alpha2} <= {alpha1}")
    if not kappa > kappa_prime > 0.0:
        raise BadOrdering(f"need kappa > kappa' > 0, got {kappa}, {kappa_prime}")
    T = time_horizon(alpha2, alpha1, c.a_mass, c.b_mass, upsilon)
    return TimeBoundReport(
        alpha1=alpha1,
        alpha2=alpha2,
        upsilon=upsilon,
        T=T,
        tau=T / 3.0,
        varpi_b_upsilon=_growth_rate(c.b_mass, upsilon) + c.a_mass * math.exp(alpha2),
        varpi_b2_upsilon=_growth_rate(c.b_mass, upsilon),
        delta_alpha1=optimal_gap(alpha1, c.a_mass, c.b_mass, upsilon),
        T_max_alpha1=max_horizon(alpha1, c.a_mass, c.b_mass, upsilon),
        kappa=kappa,
        kappa_prime=kappa_prime,
        T_kappa=exp_moment_horizon(kappa, kappa_prime, c.b_mass),
        T_b2=ovsyannikov_time_b2(alpha2, alpha1, c.b_mass, upsilon),
    )


# ----------------------------------------------------------------------------- domination certificate
def packing_factor(h: float, r: float, d: int) -> float:
    """g_d(h, r) = (Δ(d)/c_d)((h + 2r)/(hr))^d."""
    return PACKING_DENSITY.get(d, 1.0) / unit_ball_volume(d) * ((h + 2.0 * r) / (h * r)) ** d


def _competition_floor(a: RadialKernel, r: float) -> tuple[float, float]:
    """(a_r, margin): min of a on the ball of radius 2r, certified for monotone kernels."""
    if a.radially_nonincreasing:
        return float(a.evaluate(2.0 * r)), 0.0
    grid = np.linspace(0.0, 2.0 * r, 4097)
    values = a.evaluate(grid)
    margin = float(np.max(np.abs(np.diff(values)), initial=0.0))
    return max(float(values.min()) - margin, 0.0), margin


def riemann_upper_sum(f: FissionKernel, h: float) -> tuple[float, int]:
    """
    h^d Σ_l sup_{cell l} β on a grid of side-h cubes aligned at the origin covering supp β.

    Raises:
        RiemannBoundFailed: β is not radially nonincreasing or the grid is too large.
    """
    d = f.dimension
    if not f.beta_nonincreasing:
        raise RiemannBoundFailed("per-cell suprema need a radially nonincreasing beta", {"h": h})
    half = max(1, math.ceil(f.beta_support / h))
    cells = (2 * half) ** d
    if cells > MAX_RIEMANN_CELLS:
        raise RiemannBoundFailed(f"{cells} cells exceed the limit {MAX_RIEMANN_CELLS}", {"h": h, "cells": cells})
    lower = np.arange(-half, half) * h
    # distance from the origin to the nearest point of [lower, lower + h] along one axis
    nearest = np.where(lower >= 0.0, lower, np.where(lower + h <= 0.0, -(lower + h), 0.0))
    sq = nearest**2
    total = sq
    for _ in range(d - 1):
        total = np.add.outer(total, sq)
    sup = f.beta_radial(np.sqrt(total))
    return float(h**d * sup.sum()), cells


@dataclass(frozen=True)
class DominationCertificate:
    dimension: int
    epsilon: float
    h: float
    r: float
    a_r: float
    a_r_margin: float
    riemann_sum: float
    b_mass: float
    beta_star: float
    packing: float
    g_d: float
    delta: float
    omega: float
    omega_max: float
    upsilon: float
    h_halvings: int
    competition: RadialKernel = field(repr=False, compare=False)
    fission: FissionKernel = field(repr=False, compare=False)

    def as_dict(self) -> dict[str, Any]:
        return {
            "dimension": self.dimension,
            "epsilon": self.epsilon,
            "h": self.h,
            "r": self.r,
            "a_r": self.a_r,
            "a_r_margin": self.a_r_margin,
            "riemann_sum": self.riemann_sum,
            "b_mass": self.b_mass,
            "beta_star": self.beta_star,
            "packing": self.packing,
            "g_d": self.g_d,
            "delta": self.delta,
            "omega": self.omega,
            "omega_max": self.omega_max,
            "upsilon": self.upsilon,
            "h_halvings": self.h_halvings,
        }


def domination_certificate(
    a: RadialKernel,
    f: FissionKernel,
    epsilon: float,
    r: float | None = None,
    h: float | None = None,
    omega: float | None = None,
) -> DominationCertificate:
    """
    Build (ω, υ) with Σ_{x≠y∈η}[a(x−y) − ωβ(x−y)] ≥ −υ|η| for every finite η.

    r defaults to half the competition cutoff and is halved until a_r > 0. h starts at the
    β support (or the given value) and is halved until h^dΣβ_l ≤ ⟨b⟩ + ε. ω defaults to its
    largest admissible value a_r/δ, and υ = 2δω.

    Raises:
        NoAdmissibleR: a_r = 0 for every tried r.
        RiemannBoundFailed: the Riemann bound fails down to the finest admissible h.
        BadOmega: a requested ω is not in (0, a_r/δ].
    """
    d = f.dimension
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    radius = a.radius / 2.0 if r is None else r
    a_r, margin = (0.0, 0.0) if radius <= 0.0 else _competition_floor(a, radius)
    halvings = 0
    while a_r <= 0.0 and radius > 0.0 and halvings < MAX_R_HALVINGS:
        radius /= 2.0
        halvings += 1
        a_r, margin = _competition_floor(a, radius)
    if a_r <= 0.0:
        raise NoAdmissibleR(
            f"competition kernel vanishes on every tried ball (last r={radius:.3g}); "
            "check that a is positive near the origin"
        )

    b_mass = f.total_mass
    support = f.beta_support
    step = support if h is None else h
    floor = support / 2**MAX_H_HALVINGS if support > 0.0 else step
    h_halvings = 0
    if support == 0.0:
        raise RiemannBoundFailed("beta has no spread-out part; beta* is infinite", {"support": support})
    riemann, _ = riemann_upper_sum(f, step)
    while riemann > b_mass + epsilon:
        if step / 2.0 < floor:
            raise RiemannBoundFailed(
                f"upper Riemann sum {riemann:.6g} > <b> + eps = {b_mass + epsilon:.6g} at h={step:.3g}",
                {"h": step, "riemann_sum": riemann, "target": b_mass + epsilon, "halvings": h_halvings},
            )
        step /= 2.0
        h_halvings += 1
        riemann, _ = riemann_upper_sum(f, step)

    g = packing_factor(step, radius, d)
    delta = max(f.beta_star, (b_mass + epsilon) * g)
    omega_max = a_r / delta
    chosen = omega_max if omega is None else omega
    if not 0.0 < chosen <= omega_max:
        raise BadOmega(f"omega must lie in (0, {omega_max:.6g}], got {chosen}")
    cert = DominationCertificate(
        dimension=d,
        epsilon=epsilon,
        h=step,
        r=radius,
        a_r=a_r,
        a_r_margin=margin,
        riemann_sum=riemann,
        b_mass=b_mass,
        beta_star=f.beta_star,
        packing=PACKING_DENSITY.get(d, 1.0),
        g_d=g,
        delta=delta,
        omega=chosen,
        omega_max=omega_max,
        upsilon=2.0 * delta * chosen,
        h_halvings=h_halvings,
        competition=a,
        fission=f,
    )
    logger.info("domination certificate: omega=%.4g upsilon=%.4g (h=%.3g, r=%.3g)", cert.omega, cert.upsilon, step, radius)
    return cert


def rescale_upsilon(omega0: float, upsilon0: float, omega: float) -> float:
    """υ = υ₀ω/ω₀ for 0 < ω ≤ ω₀."""
    if not 0.0 < omega <= omega0:
        raise BadOmega(f"need 0 < omega <= {omega0}, got {omega}")
    return upsilon0 * omega / omega0


def rescaled(cert: DominationCertificate, omega: float) -> DominationCertificate:
    return replace(cert, omega=omega, upsilon=rescale_upsilon(cert.omega, cert.upsilon, omega))


class DominationCheck(NamedTuple):
    passed: bool
    min_ratio: float
    violations: int
    samples: int


def pair_energy(a: RadialKernel, f: FissionKernel, omega: float, points: ArrayLike) -> float:
    """Φ_ω(η) = Σ_x Σ_{y≠x} [a(x−y) − ωβ(x−y)]."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        return 0.0
    u = pdist(pts)
    return 2.0 * float(np.sum(a.evaluate(u) - omega * f.beta_radial(u)))


def verify_domination(
    cert: DominationCertificate, samples: Sequence[ArrayLike], tolerance: float = 1e-12
) -> DominationCheck:
    """Evaluate (Φ_ω(η) + υ|η|)/|η| on every sample; passes iff no value drops below −tolerance."""
    worst = math.inf
    violations = 0
    for points in samples:
        pts = np.asarray(points, dtype=np.float64)
        n = pts.shape[0]
        if n == 0:
            continue
        ratio = (pair_energy(cert.competition, cert.fission, cert.omega, pts) + cert.upsilon * n) / n
        worst = min(worst, ratio)
        if ratio < -tolerance:
            violations += 1
    return DominationCheck(violations == 0, worst, violations, len(samples))


def sample_configurations(
    d: int, n: int, mean_size: float, side: float, rng: np.random.Generator
) -> list[NDArray[np.float64]]:
    """n configurations of Poisson(mean_size) uniform points in the cube [0, side]^d."""
    return [rng.random((int(rng.poisson(mean_size)), d)) * side for _ in range(n)]


# ----------------------------------------------------------------------------- growth and schedule
@dataclass(frozen=True)
class GrowthReport:
    c: float
    invariant: bool
    non_growing: bool
    note: str
    alpha0: float
    t: float
    kappa_t: float
    alpha1: float
    k0_norm: float

    @property
    def envelope_alpha(self) -> float:
        return self.alpha1 + self.c * self.t

    def envelope(self, n: ArrayLike) -> NDArray[np.float64]:
        """r_t(η) = ‖k₀‖_{α₁} e^{(α₁ + ct)|η|} as a function of |η|."""
        return np.asarray(self.k0_norm * np.exp(self.envelope_alpha * np.asarray(n, dtype=np.float64)))

    def as_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["envelope_alpha"] = self.envelope_alpha
        out["envelope"] = f"r_t(eta) = {self.k0_norm:.6g} * exp({self.envelope_alpha:.6g} * |eta|)"
        return out


def growth_and_envelope(
    c: DerivedConstants,
    upsilon: float,
    omega: float,
    alpha0: float,
    t: float,
    alpha1: float | None = None,
    k0_norm: float = 1.0,
) -> GrowthReport:
    """
    Growth exponent c = ⟨b⟩ + υ − m_* of the envelope κ_t = e^{α₀ + ct}.

    Raises:
        AlphaTooSmall: α₀ ≤ −log ω.
    """
    if omega <= 0.0 or alpha0 <= -math.log(omega):
        raise AlphaTooSmall(f"alpha0={alpha0} must exceed -log(omega)={-math.log(omega) if omega > 0 else math.inf:.6g}")
    rate = growth_exponent(c, upsilon)
    invariant = c.m_lower > c.b_mass
    if invariant:
        note = "m_* > <b>: the initial space is left invariant"
    elif c.m_lower == c.b_mass:
        note = "m_* = <b>: invariance holds only in the short-dispersal case"
    else:
        note = "m_* < <b>: no invariance"
    return GrowthReport(
        c=rate,
        invariant=invariant,
        non_growing=rate <= 0.0,
        note=note,
        alpha0=alpha0,
        t=t,
        kappa_t=math.exp(alpha0 + rate * t),
        alpha1=alpha0 if alpha1 is None else alpha1,
        k0_norm=k0_norm,
    )


@dataclass(frozen=True)
class EnvelopePlan:
    """κ_t = e^{α₀ + ct} for a concrete model and initial intensity."""

    alpha0: float
    slack: float
    c: float
    upsilon: float
    omega: float | None
    certified: bool
    note: str

    def kappa(self, t: float) -> float:
        return math.exp(self.alpha0 + self.c * t)

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def envelope_plan(p: ModelParams, initial_intensity: float, slack: float = 0.1, epsilon: float = 0.1) -> EnvelopePlan:
    """
    Envelope for a Poisson(κ₀) start: α₀ = max(log κ₀, −log ω) + slack.

    A Poisson state lies in every K_α with e^α ≥ κ₀, so raising α₀ to clear −log ω keeps the start
    admissible. Without fission β ≡ 0 and domination holds with υ = 0 for any ω. When no
    certificate exists the exponent falls back to υ = 0 and the plan is marked uncertified.
    """
    if initial_intensity <= 0.0:
        raise ValueError(f"initial intensity must be positive, got {initial_intensity}")
    if slack <= 0.0:
        raise ValueError(f"slack must be positive, got {slack}")
    consts = p.constants
    floor = math.log(initial_intensity)
    if consts.b_mass == 0.0:
        alpha0 = floor + slack
        rate = growth_exponent(consts, 0.0)
        return EnvelopePlan(alpha0, slack, rate, 0.0, None, True, "no fission: domination holds with upsilon = 0")
    try:
        cert = domination_certificate(p.competition, p.fission, epsilon)
    except (NoAdmissibleR, RiemannBoundFailed) as e:
        logger.warning("envelope without domination certificate: %s", e)
        rate = growth_exponent(consts, 0.0)
        note = f"uncertified ({type(e).__name__}): exponent uses upsilon = 0"
        return EnvelopePlan(floor + slack, slack, rate, 0.0, None, False, note)
    alpha0 = max(floor, -math.log(cert.omega)) + slack
    growth = growth_and_envelope(consts, cert.upsilon, cert.omega, alpha0, 0.0)
    return EnvelopePlan(alpha0, slack, growth.c, cert.upsilon, cert.omega, True, growth.note)


class ScheduleStep(NamedTuple):
    n: int
    T: float
    alpha_star: float
    alpha: float
    cumulative: float


@dataclass(frozen=True)
class Schedule:
    alpha0: float
    c: float
    upsilon: float
    horizon: float
    steps: tuple[ScheduleStep, ...]

    @property
    def covered(self) -> float:
        return self.steps[-1].cumulative if self.steps else 0.0

    @property
    def reached(self) -> bool:
        return self.covered >= self.horizon

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(self.steps, columns=["n", "T_n", "alpha_star_n", "alpha_n", "cumulative"])

    def as_dict(self) -> dict[str, Any]:
        return {
            "alpha0": self.alpha0,
            "c": self.c,
            "upsilon": self.upsilon,
            "horizon": self.horizon,
            "covered": self.covered,
            "reached": self.reached,
            "steps": [s._asdict() for s in self.steps],
        }


def schedule(
    alpha0: float,
    c: DerivedConstants,
    upsilon: float,
    omega: float,
    horizon: float,
    max_steps: int = MAX_SCHEDULE_STEPS,
) -> Schedule:
    """
    T_n = T_max(α*_{n−1})/3, α*_n = α*_{n−1} + cT_n, α_n = α*_{n−1} + δ(α*_{n−1}) with α*_0 = α₀,
    until Σ T_n ≥ horizon.

    Raises:
        AlphaTooSmall: α₀ ≤ −log ω.
        ScheduleInvariantBroken: α*_n ≥ α_n at some step.
        HorizonNotReached: max_steps steps did not cover the horizon.
    """
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if omega <= 0.0 or alpha0 <= -math.log(omega):
        raise AlphaTooSmall(f"alpha0={alpha0} must exceed -log(omega)")
    rate = growth_exponent(c, upsilon)
    steps: list[ScheduleStep] = []
    prev = alpha0
    cumulative = 0.0
    for n in range(1, max_steps + 1):
        T = max_horizon(prev, c.a_mass, c.b_mass, upsilon) / 3.0
        alpha_star = prev + rate * T
        alpha = prev + optimal_gap(prev, c.a_mass, c.b_mass, upsilon)
        if not alpha_star < alpha:
            raise ScheduleInvariantBroken(f"step {n}: alpha*={alpha_star:.6g} >= alpha={alpha:.6g}")
        cumulative += T
        steps.append(ScheduleStep(n, T, alpha_star, alpha, cumulative))
        if cumulative >= horizon:
            logger.info("schedule covers %.4g in %d steps (c=%.4g)", horizon, n, rate)
            return Schedule(alpha0, rate, upsilon, horizon, tuple(steps))
        prev = alpha_star
    partial = Schedule(alpha0, rate, upsilon, horizon, tuple(steps))
    raise HorizonNotReached(
        f"{max_steps} steps covered {cumulative:.6g} of horizon {horizon}",
        {"steps": max_steps, "covered": cumulative, "last_alpha_star": prev, "last_T": steps[-1].T},
        partial=partial,
    )


# ----------------------------------------------------------------------------- dispersal regime
@dataclass(frozen=True)
class RegimeReport:
    tag: str
    omega: float
    witness: float | None
    grid_points: int
    method: str = "grid heuristic"

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def dispersal_regime(a: RadialKernel, f: FissionKernel, grid: ArrayLike | None = None) -> RegimeReport:
    """
    Short dispersal iff a ≥ ωβ for some ω > 0. Checked on a radial grid only: the tag is a heuristic.

    The default grid covers [0, β support] with 4097 points.
    """
    radii = np.linspace(0.0, f.beta_support, 4097) if grid is None else np.asarray(grid, dtype=np.float64)
    beta = f.beta_radial(radii)
    positive = beta > 0.0
    if not np.any(positive):
        return RegimeReport("short", math.inf, None, int(radii.size))
    ratio = a.evaluate(radii[positive]) / beta[positive]
    worst = int(np.argmin(ratio))
    omega = float(ratio[worst])
    if omega > 0.0 and math.isfinite(omega):
        return RegimeReport("short", omega, None, int(radii.size))
    return RegimeReport("long", 0.0, float(radii[positive][worst]), int(radii.size))
