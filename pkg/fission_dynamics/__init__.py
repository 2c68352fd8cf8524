from fission_dynamics.analytics import (
    DominationCertificate,
    EnvelopePlan,
    Schedule,
    TimeBoundReport,
    dispersal_regime,
    domination_certificate,
    envelope_plan,
    growth_and_envelope,
    lambert_w0,
    max_horizon,
    schedule,
    time_bounds,
    time_horizon,
    verify_domination,
)
from fission_dynamics.configuration import Configuration, Snapshot, TorusWindow
from fission_dynamics.errors import FissionDynamicsError
from fission_dynamics.estimators import (
    Box,
    ThetaFunction,
    bogoliubov_functional,
    factorial_moments,
    intensity,
    pair_correlation,
)
from fission_dynamics.gamma0_oracle import (
    DiscreteSpace,
    FiniteFunctionOnGamma0,
    apply_fokker_planck,
    apply_generator,
    apply_l_delta,
    correlation_from_density,
    density_from_correlation,
    k_transform,
    local_truncation,
)
from fission_dynamics.kernels import FissionKernel, ModelParams, MortalityField, RadialKernel, validate_params
from fission_dynamics.master_equation import (
    DistributionVector,
    StateSpace,
    build_generator,
    enumerate_states,
    evolve,
    moments,
)
from fission_dynamics.run_config import RunConfig, load_config
from fission_dynamics.simulator import Ensemble, SimConfig, Trajectory, replicate, run

__all__ = [
    "Box",
    "Configuration",
    "DiscreteSpace",
    "DistributionVector",
    "DominationCertificate",
    "Ensemble",
    "EnvelopePlan",
    "FiniteFunctionOnGamma0",
    "FissionDynamicsError",
    "FissionKernel",
    "ModelParams",
    "MortalityField",
    "RadialKernel",
    "RunConfig",
    "Schedule",
    "SimConfig",
    "Snapshot",
    "StateSpace",
    "ThetaFunction",
    "TimeBoundReport",
    "TorusWindow",
    "Trajectory",
    "apply_fokker_planck",
    "apply_generator",
    "apply_l_delta",
    "bogoliubov_functional",
    "build_generator",
    "correlation_from_density",
    "density_from_correlation",
    "dispersal_regime",
    "domination_certificate",
    "enumerate_states",
    "envelope_plan",
    "evolve",
    "factorial_moments",
    "growth_and_envelope",
    "intensity",
    "k_transform",
    "lambert_w0",
    "load_config",
    "local_truncation",
    "max_horizon",
    "moments",
    "pair_correlation",
    "replicate",
    "run",
    "schedule",
    "time_bounds",
    "time_horizon",
    "validate_params",
    "verify_domination",
]
