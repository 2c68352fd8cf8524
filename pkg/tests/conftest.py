import json
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from fission_dynamics.gamma0_oracle import DiscreteSpace
from fission_dynamics.kernels import ModelParams
from fission_dynamics.testing import fixtures


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def desk_params() -> ModelParams:
    """d=1 model: m=0.5, tophat competition of radius 1, <b>=1 with gaussian dispersal."""
    return fixtures.desk_params()


@pytest.fixture
def desk_space() -> DiscreteSpace:
    """Three-site ring with nearest-neighbour dispersal."""
    return fixtures.desk_discrete_space(3)


@pytest.fixture
def desk_config() -> dict[str, Any]:
    return fixtures.desk_config()


@pytest.fixture
def config_file(tmp_path: Path, desk_config: dict[str, Any]) -> Path:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(desk_config), encoding="utf-8")
    return path
