"""
Run configuration: loading, schema validation, defaults, and construction of the model objects.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from fission_dynamics.configuration import TorusWindow
from fission_dynamics.errors import ConfigInvalid, IoFailure
from fission_dynamics.estimators import Box, ThetaFunction
from fission_dynamics.gamma0_oracle import DiscreteSpace
from fission_dynamics.kernels import FissionKernel, ModelParams, MortalityField, RadialKernel
from fission_dynamics.master_equation import discrete_space_from_config
from fission_dynamics.simulator import InitialCondition, SimConfig
from fission_dynamics.utils.contracts import ContractError, schema_defaults, validate_output

logger = logging.getLogger(__name__)

SCHEMA = "run_config"
OPTIONAL_SECTIONS = ("simulation", "analysis", "analytics")


def apply_defaults(data: Mapping[str, Any]) -> dict[str, Any]:
    """Fill schema defaults; optional sections are created when absent, `master` only when present."""
    out = copy.deepcopy(dict(data))
    for section, defaults in schema_defaults(SCHEMA).items():
        if section not in out and section not in OPTIONAL_SECTIONS:
            continue
        merged = copy.deepcopy(defaults)
        merged.update(out.get(section, {}))
        out[section] = merged
    return out


def params_hash(data: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, compact separators)."""
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunConfig:
    data: dict[str, Any]
    base_dir: Path

    @property
    def model(self) -> dict[str, Any]:
        return dict(self.data["model"])

    @property
    def simulation(self) -> dict[str, Any]:
        return dict(self.data["simulation"])

    @property
    def analysis(self) -> dict[str, Any]:
        return dict(self.data["analysis"])

    @property
    def analytics(self) -> dict[str, Any]:
        return dict(self.data["analytics"])

    @property
    def master(self) -> dict[str, Any] | None:
        section = self.data.get("master")
        return None if section is None else dict(section)

    @property
    def hash(self) -> str:
        return params_hash(self.data)

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        data = copy.deepcopy(self.data)
        data["simulation"]["seed"] = int(seed)
        return RunConfig(data, self.base_dir)

    # ------------------------------------------------------------------ builders
    def kernel(self, spec: Mapping[str, Any]) -> RadialKernel:
        if "table" in spec:
            path = self.base_dir / str(spec["table"])
            if not path.exists():
                raise IoFailure(f"kernel table not found: {path}")
            return RadialKernel.from_csv(path, spec.get("cutoff"), float(spec.get("amplitude", 1.0)))
        if spec["shape"] == "tabulated":
            raise ConfigInvalid("tabulated kernel needs a 'table' CSV path")
        return RadialKernel(
            shape=str(spec["shape"]),
            amplitude=float(spec.get("amplitude", 1.0)),
            scale=float(spec.get("scale", 1.0)),
            cutoff=None if spec.get("cutoff") is None else float(spec["cutoff"]),
        )

    def model_params(self) -> ModelParams:
        model = self.model
        d = int(model["dimension"])
        mort = model["mortality"]
        if mort["kind"] == "constant":
            mortality = MortalityField("constant", float(mort.get("value", 0.0)))
        else:
            mortality = MortalityField(
                "tabulated-on-grid",
                grid_shape=tuple(int(n) for n in mort.get("grid_shape", ())),
                grid_values=tuple(float(v) for v in mort.get("values", ())),
                period=float(mort.get("period", self.simulation["window_side"])),
            )
        fission = model["fission"]
        return ModelParams(
            mortality=mortality,
            competition=self.kernel(model["competition"]),
            fission=FissionKernel(
                variant=str(fission["variant"]),
                total_mass=float(fission["total_mass"]),
                dispersal=self.kernel(fission["dispersal"]),
                dimension=d,
                sigma=float(fission.get("sigma", 0.0)),
            ),
            dimension=d,
        )

    def window(self, params: ModelParams) -> TorusWindow:
        return TorusWindow(float(self.simulation["window_side"]), params.dimension, params.interaction_radius)

    def sim_config(self, params: ModelParams) -> SimConfig:
        sim = self.simulation
        init = sim["initial"]
        initial = InitialCondition(
            kind=str(init["kind"]),
            intensity=float(init.get("intensity", 0.0)),
            points=tuple(tuple(float(x) for x in p) for p in init.get("points", ())),
        )
        return SimConfig(
            window=self.window(params),
            end_time=float(sim["end_time"]),
            initial=initial,
            seed=int(sim["seed"]),
            snapshot_times=tuple(float(t) for t in sim["snapshots"]),
            max_population=int(sim["max_population"]),
            record_events=bool(sim["record_events"]),
        )

    def initial_intensity(self, window: TorusWindow) -> float:
        """Intensity of the initial state: the Poisson intensity, or the point count over |Λ|."""
        init = self.simulation["initial"]
        if init["kind"] == "poisson":
            return float(init["intensity"])
        return len(init.get("points", ())) / window.volume

    def boxes(self) -> list[Box | None]:
        """Configured boxes, or [None] (the whole window) when none are given."""
        configured = [Box(tuple(b["lower"]), tuple(b["upper"])) for b in self.analysis["boxes"]]
        return configured or [None]

    def thetas(self) -> list[ThetaFunction]:
        return [
            ThetaFunction(str(t["shape"]), float(t["value"]), tuple(t["lower"]), tuple(t["upper"]))
            for t in self.analysis["theta"]
        ]

    def bin_edges(self, window: TorusWindow) -> np.ndarray:
        r_max = self.analysis["r_max"]
        top = window.side / 2.0 if r_max is None else float(r_max)
        return np.linspace(0.0, top, int(self.analysis["bins"]) + 1)

    def discrete_space(self) -> DiscreteSpace:
        section = self.master
        if section is None:
            raise ConfigInvalid("config has no 'master' section")
        return discrete_space_from_config(section)

    def master_initial(self) -> tuple[int, ...]:
        section = self.master
        if section is None:
            raise ConfigInvalid("config has no 'master' section")
        sites = int(section["sites"])
        initial = tuple(int(n) for n in section.get("initial", [1] + [0] * (sites - 1)))
        if len(initial) != sites:
            raise ConfigInvalid(f"master.initial has {len(initial)} entries for {sites} sites")
        if sum(initial) > int(section["n_max"]):
            raise ConfigInvalid("master.initial holds more points than n_max")
        return initial

    def alpha0(self, omega: float) -> float:
        value = self.analytics["alpha0"]
        return 1.0 - math.log(omega) if value is None else float(value)


def from_dict(data: Mapping[str, Any], base_dir: Path | None = None) -> RunConfig:
    """
    Validate and complete a configuration document.

    Raises:
        ContractError: the document violates the run_config schema.
    """
    validate_output(dict(data), SCHEMA, mode="STRICT")
    return RunConfig(apply_defaults(data), base_dir or Path.cwd())


def load_config(path: Path) -> RunConfig:
    """
    Read, validate and complete a JSON run configuration.

    Raises:
        IoFailure: the file is missing, unreadable or not JSON.
        ContractError: the document violates the run_config schema.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise IoFailure(f"config not found: {path}") from e
    except (OSError, json.JSONDecodeError) as e:
        raise IoFailure(f"cannot read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ContractError(f"Data Contract Violation ({SCHEMA}): top level must be an object")
    logger.info(f"loaded config {path}")
    return from_dict(data, Path(path).resolve().parent)
