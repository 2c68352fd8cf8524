"""
Self-check suites behind `fission-dynamics verify`.

quick: exact identities on the discrete oracle, generator column sums, Lambert/T_max consistency
and a small domination Monte Carlo. full: larger sweeps plus the simulator-versus-master-equation
law comparison and the dense exponential agreement.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy import optimize

from fission_dynamics import analytics, gamma0_oracle as g0, master_equation as me
from fission_dynamics.simulator import replicate_discrete
from fission_dynamics.testing import fixtures

logger = logging.getLogger(__name__)

LEVELS = ("quick", "full")
EXACT_TOL = 1e-12
COLUMN_SUM_TOL = 1e-14


class CheckResult(NamedTuple):
    passed: bool
    errors: list[str]
    warnings: list[str]


@dataclass
class VerificationReport:
    level: str
    checks: dict[str, CheckResult] = field(default_factory=dict)
    details: dict[str, dict[str, Any]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def as_dict(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "passed": self.passed,
            "checks": {
                name: {"passed": c.passed, "errors": c.errors, "warnings": c.warnings, **self.details.get(name, {})}
                for name, c in self.checks.items()
            },
        }


def _result(errors: list[str], warnings: list[str] | None = None) -> CheckResult:
    return CheckResult(passed=not errors, errors=errors, warnings=warnings or [])


def _relative(residual: float, scale: float) -> float:
    return residual / max(1.0, abs(scale))


# ----------------------------------------------------------------------------- individual checks
def check_generator(Q: sp.spmatrix, tolerance: float = COLUMN_SUM_TOL) -> CheckResult:
    """Off-diagonals nonnegative and every column summing to zero."""
    errors: list[str] = []
    scale = max(1.0, me.max_exit_rate(Q))
    defect = me.column_sum_defect(Q)
    if defect > tolerance * scale:
        sums = np.abs(np.asarray(Q.sum(axis=0)).ravel())
        worst = int(np.argmax(sums))
        errors.append(f"column sum defect {defect:.3e} at column {worst} (tolerance {tolerance * scale:.1e})")
    off = sp.coo_matrix(Q)
    negative = (off.data < 0.0) & (off.row != off.col)
    if np.any(negative):
        errors.append(f"{int(negative.sum())} negative off-diagonal rate(s)")
    return _result(errors)


def check_identities(sites: int, n_max: int, rng: np.random.Generator) -> tuple[CheckResult, dict[str, Any]]:
    """Product-sum recursion, the double-sum rearrangement, the pairing identity and the K growth bound."""
    errors: list[str] = []
    residuals: dict[str, float] = {}

    g = rng.uniform(-1.0, 1.0, sites)
    worst = 0.0
    for gamma in g0.multisets(sites, n_max + 1):
        for site, count in enumerate(gamma):
            if count:
                worst = max(worst, g0.product_recursion_residual(g, gamma, site))
    residuals["product_recursion"] = worst

    table = {
        (xi, zeta): float(rng.normal())
        for xi in g0.multisets(sites, n_max)
        for zeta in g0.multisets(sites, n_max - g0.size(xi))
    }
    residuals["double_sum"] = g0.double_sum_residual(lambda xi, eta, zeta: table[(xi, zeta)], sites, n_max)

    G = g0.FiniteFunctionOnGamma0.from_callable(sites, n_max, lambda eta: float(rng.normal()))
    mu = g0.random_measure(sites, n_max, rng)
    residuals["pairing"] = g0.pairing_residual(G, mu)

    local = g0.FiniteFunctionOnGamma0.from_callable(
        sites, n_max, lambda eta: float(rng.normal()) if g0.size(eta) <= 2 and eta[-1] == 0 else 0.0
    )
    bound_failures = sum(1 for gamma in g0.multisets(sites, n_max) if not g0.growth_bound_holds(local, gamma))

    R = g0.weights_to_density(mu)
    roundtrip = g0.density_from_correlation(g0.correlation_from_density(R)).max_abs_difference(R)
    residuals["inversion"] = _relative(roundtrip, max(abs(v) for _, v in R))

    for name, value in residuals.items():
        if value > EXACT_TOL:
            errors.append(f"{name} residual {value:.3e} > {EXACT_TOL:.0e}")
    if bound_failures:
        errors.append(f"K growth bound failed on {bound_failures} configuration(s)")
    return _result(errors), {"residuals": residuals, "bound_failures": bound_failures}


def check_duality(sites: int, n_max: int, trials: int, rng: np.random.Generator) -> tuple[CheckResult, dict[str, Any]]:
    """Σ_γ μ(γ)(LF^θ)(γ) = ⟨⟨L^Δ k_μ, e(θ;·)⟩⟩ for random models, measures and θ."""
    worst = 0.0
    for _ in range(trials):
        space = g0.random_space(sites, rng)
        mu = g0.random_measure(sites, n_max, rng)
        theta = rng.uniform(-1.0, 0.0, sites)
        lhs_scale = g0.measure_pairing(g0.apply_generator(g0.f_theta(theta, n_max + 1), space), mu)
        worst = max(worst, _relative(g0.duality_residual(space, mu, theta), lhs_scale))
    errors = [] if worst <= EXACT_TOL else [f"duality residual {worst:.3e} > {EXACT_TOL:.0e}"]
    return _result(errors), {"max_residual": worst, "trials": trials}


def check_lambert(points: int) -> tuple[CheckResult, dict[str, Any]]:
    xs = np.concatenate([[-analytics.INV_E + 1e-6], np.logspace(-12, 6, points - 1)])
    xs = np.concatenate([xs, -np.logspace(-12, math.log10(analytics.INV_E - 1e-6), points // 4)])
    worst = 0.0
    for x in xs:
        w = analytics.lambert_w0(float(x))
        worst = max(worst, abs(w * math.exp(w) - x) / max(1.0, abs(x)))
    errors = [] if worst <= analytics.LAMBERT_RESIDUAL else [f"Lambert residual {worst:.3e}"]
    return _result(errors), {"max_relative_residual": worst, "points": int(xs.size)}


def check_t_max(trials: int, rng: np.random.Generator) -> tuple[CheckResult, dict[str, Any]]:
    """Closed-form T_max against a bounded scalar maximization of α₂ ↦ T(α₂, α₁)."""
    worst = 0.0
    for _ in range(trials):
        a_mass, b_mass, upsilon = rng.uniform(0.2, 3.0), rng.uniform(0.1, 3.0), rng.uniform(0.0, 1.0)
        alpha1 = rng.uniform(-2.0, 2.0)
        closed = analytics.max_horizon(alpha1, a_mass, b_mass, upsilon)
        found = optimize.minimize_scalar(
            lambda a2: -analytics.time_horizon(a2, alpha1, a_mass, b_mass, upsilon),
            bounds=(alpha1, alpha1 + 20.0),
            method="bounded",
            options={"xatol": 1e-10},
        )
        worst = max(worst, abs(closed + float(found.fun)))
    errors = [] if worst < 1e-6 else [f"T_max differs from the numeric maximum by {worst:.3e}"]
    return _result(errors), {"max_difference": worst, "trials": trials}


def check_domination(samples: int, rng: np.random.Generator) -> tuple[CheckResult, dict[str, Any]]:
    params = fixtures.desk_params()
    cert = analytics.domination_certificate(params.competition, params.fission, epsilon=0.1)
    configs = analytics.sample_configurations(params.dimension, samples, 30.0, 4.0 * params.interaction_radius, rng)
    base = analytics.verify_domination(cert, configs)
    halved = analytics.verify_domination(analytics.rescaled(cert, cert.omega / 2.0), configs)
    errors = []
    if not base.passed:
        errors.append(f"certificate violated on {base.violations} of {base.samples} samples")
    if not halved.passed:
        errors.append(f"rescaled certificate violated on {halved.violations} of {halved.samples} samples")
    return _result(errors), {"omega": cert.omega, "upsilon": cert.upsilon, "min_ratio": base.min_ratio, "samples": samples}


def check_master_vs_expm() -> tuple[CheckResult, dict[str, Any]]:
    space = fixtures.desk_discrete_space(sites=2)
    ss = me.enumerate_states(2, 3)
    Q = me.build_generator(space, ss)
    p0 = me.DistributionVector.point_mass(ss, (1, 0))
    t = 0.5
    rk = me.evolve(p0, Q, t, dt=me.auto_step(Q, 0.01))
    ref = me.expm_reference(Q, p0, t)
    diff = float(np.max(np.abs(rk.probabilities - ref.probabilities)))
    errors = [] if diff < 1e-8 else [f"RK4 and dense exponential differ by {diff:.3e}"]
    return _result(errors), {"sup_difference": diff}


def check_simulator_law(replicas: int, seed: int) -> tuple[CheckResult, dict[str, Any]]:
    space = fixtures.desk_discrete_space(sites=3)
    initial = (1, 1, 0)
    t = 0.5
    ss = me.enumerate_states(3, 12)
    law = me.marginal_n(me.evolve(me.DistributionVector.point_mass(ss, initial), me.build_generator(space, ss), t))
    finals = replicate_discrete(space, initial, t, replicas, seed)
    empirical = me.empirical_law(finals.sum(axis=1))
    tv = me.total_variation(law.probabilities, empirical)
    errors = [] if tv < 0.02 else [f"total variation {tv:.4f} >= 0.02"]
    warnings = [f"truncation leak {law.leak:.2e}"] if law.leak > me.LEAK_WARNING else []
    return _result(errors, warnings), {"total_variation": tv, "replicas": replicas, "leak": law.leak}


# ----------------------------------------------------------------------------- suites
def run_suite(level: str = "quick", seed: int = 0) -> VerificationReport:
    if level not in LEVELS:
        raise ValueError(f"unknown verification level {level!r}; expected one of {LEVELS}")
    rng = np.random.default_rng(seed)
    full = level == "full"
    report = VerificationReport(level)

    steps: list[tuple[str, Callable[[], tuple[CheckResult, dict[str, Any]]]]] = [
        ("identities", lambda: check_identities(3, 5 if full else 4, rng)),
        ("duality", lambda: check_duality(3, 3, 100 if full else 10, rng)),
        ("lambert", lambda: check_lambert(1000 if full else 200)),
        ("t_max", lambda: check_t_max(20 if full else 5, rng)),
        ("domination", lambda: check_domination(10_000 if full else 500, rng)),
        ("master_vs_expm", check_master_vs_expm),
    ]
    if full:
        steps.append(("simulator_law", lambda: check_simulator_law(100_000, seed)))

    space = g0.random_space(3, rng)
    report.checks["generator"] = check_generator(me.build_generator(space, me.enumerate_states(3, 4)))
    for name, step in steps:
        logger.info(f"verify: {name}")
        result, details = step()
        report.checks[name] = result
        report.details[name] = details
    return report
