"""
Desk-scale models shared by the test suite and the verify command.
"""

from __future__ import annotations

import copy
from typing import Any

from fission_dynamics.gamma0_oracle import DiscreteSpace
from fission_dynamics.kernels import FissionKernel, ModelParams, MortalityField, RadialKernel
from fission_dynamics.master_equation import ring_space

DESK_CONFIG: dict[str, Any] = {
    "version": "1.0",
    "model": {
        "dimension": 1,
        "mortality": {"kind": "constant", "value": 0.5},
        "competition": {"shape": "tophat", "amplitude": 1.0, "scale": 1.0},
        "fission": {
            "variant": "factorized",
            "total_mass": 1.0,
            "dispersal": {"shape": "gaussian", "amplitude": 1.0, "scale": 0.3},
        },
    },
    "simulation": {
        "window_side": 20.0,
        "end_time": 0.5,
        "replicas": 4,
        "seed": 7,
        "snapshots": [0.0, 0.25, 0.5],
        "initial": {"kind": "poisson", "intensity": 1.0},
    },
    "analysis": {"bins": 10, "r_max": 4.0, "moment_orders": 3},
    "analytics": {"alpha1": 0.0, "alpha2": 1.0, "kappa": 1.0, "kappa_prime": 0.5, "epsilon": 0.1, "horizon": 1.0},
    "master": {
        "sites": 3,
        "n_max": 6,
        "end_time": 0.5,
        "mortality": 1.0,
        "competition": {"same_site": 0.2, "neighbour": 0.1},
        "fission_rate": 0.5,
        "dispersal": "nearest",
        "initial": [1, 1, 0],
    },
}


def desk_config() -> dict[str, Any]:
    return copy.deepcopy(DESK_CONFIG)


def pure_death_config(mortality: float = 1.0, intensity: float = 2.0) -> dict[str, Any]:
    config = desk_config()
    config["model"]["mortality"] = {"kind": "constant", "value": mortality}
    config["model"]["competition"] = {"shape": "tophat", "amplitude": 0.0, "scale": 1.0}
    config["model"]["fission"]["total_mass"] = 0.0
    config["simulation"]["initial"] = {"kind": "poisson", "intensity": intensity}
    config["simulation"]["replicas"] = 1
    return config


def desk_params(mortality: float = 0.5, b_mass: float = 1.0) -> ModelParams:
    return ModelParams(
        mortality=MortalityField("constant", mortality),
        competition=RadialKernel("tophat", amplitude=1.0, scale=1.0),
        fission=FissionKernel("factorized", b_mass, RadialKernel("gaussian", scale=0.3), dimension=1),
        dimension=1,
    )


def pure_death_params(mortality: float = 1.0, dimension: int = 1) -> ModelParams:
    return ModelParams(
        mortality=MortalityField("constant", mortality),
        competition=RadialKernel("tophat", amplitude=0.0, scale=0.5),
        fission=FissionKernel("factorized", 0.0, RadialKernel("tophat", scale=0.5), dimension=dimension),
        dimension=dimension,
    )


def pure_fission_params(b_mass: float = 1.0, dimension: int = 1) -> ModelParams:
    return ModelParams(
        mortality=MortalityField("constant", 0.0),
        competition=RadialKernel("tophat", amplitude=0.0, scale=0.5),
        fission=FissionKernel("bolker-pacala", b_mass, RadialKernel("tophat", scale=0.5), dimension=dimension),
        dimension=dimension,
    )


def desk_discrete_space(sites: int = 3) -> DiscreteSpace:
    return ring_space(
        sites,
        mortality=1.0,
        same_site=0.2,
        neighbour=0.1,
        fission_rate=0.5,
        dispersal="nearest" if sites >= 3 else "uniform",
    )


def quiet_discrete_space(sites: int = 5) -> DiscreteSpace:
    """Low fission rate ring; from two particles the N_max = 6 sink stays below 1e-6 up to t = 1."""
    return ring_space(
        sites,
        mortality=1.0,
        same_site=0.02,
        neighbour=0.01,
        fission_rate=0.02,
        dispersal="nearest" if sites >= 3 else "uniform",
    )
