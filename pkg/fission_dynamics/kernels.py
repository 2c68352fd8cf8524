"""
Model ingredients: mortality m, competition kernel a and fission kernel b.

All continuum kernels are radial and carry a hard cutoff radius, so every integral over R^d
reduces to a one-dimensional radial integral:

    ∫ f(|x|) dx = d * c_d * ∫_0^R f(r) r^(d-1) dr,    c_d = volume of the unit ball.

Closed forms are used where they exist (gaussian, tophat, exponential); tabulated kernels go
through scipy.integrate.quad with the table nodes as break points.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, signal, special

from fission_dynamics.errors import MissingCutoff, NegativeKernel, NonFiniteMass, SamplerExhausted

logger = logging.getLogger(__name__)

RADIAL_SHAPES = ("gaussian", "tophat", "exponential", "tabulated", "dirac")
FISSION_VARIANTS = ("factorized", "bolker-pacala")
MORTALITY_KINDS = ("constant", "tabulated-on-grid")

QUAD_RELTOL = 1e-10
TAIL_WARN = 1e-8
# Analytic tails below this relative size are dropped when a cutoff is not declared.
DEFAULT_TAIL = 1e-16
MAX_REJECTIONS = 1_000_000


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def sphere_area(d: int) -> float:
    return d * unit_ball_volume(d)


def radial_integral(f: Callable[[float], float], d: int, upper: float, points: Sequence[float] = ()) -> float:
    """Integrate a radial function over the ball of radius `upper` in R^d."""
    if upper <= 0.0:
        return 0.0
    breaks = [p for p in points if 0.0 < p < upper] or None
    value, _ = integrate.quad(
        lambda r: float(f(r)) * r ** (d - 1), 0.0, upper, points=breaks, epsabs=1e-15, epsrel=QUAD_RELTOL, limit=500
    )
    return sphere_area(d) * float(value)


def random_directions(d: int, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    v = rng.normal(size=(n, d))
    norms = np.linalg.norm(v, axis=1)
    # a zero gaussian vector has probability zero; redraw to stay exact
    while np.any(norms == 0.0):
        bad = norms == 0.0
        v[bad] = rng.normal(size=(int(bad.sum()), d))
        norms = np.linalg.norm(v, axis=1)
    return np.asarray(v / norms[:, None], dtype=np.float64)


def phi_sigma(y: ArrayLike, sigma: float) -> NDArray[np.float64]:
    """Mollifier exp(-sigma |y|^2) evaluated along the last axis."""
    arr = np.atleast_2d(np.asarray(y, dtype=np.float64))
    return np.asarray(np.exp(-sigma * np.sum(arr * arr, axis=-1)), dtype=np.float64)


@dataclass(frozen=True)
class RadialKernel:
    """
    A nonnegative radial kernel with compact support [0, cutoff].

    `amplitude` is the value at the origin for gaussian / tophat / exponential shapes; tabulated
    kernels take their values from (table_r, table_v) with linear interpolation and are zero past
    the last node. The `dirac` shape is a unit point mass at the origin and is only meaningful as a
    dispersal law.
    """

    shape: str
    amplitude: float = 1.0
    scale: float = 1.0
    cutoff: float | None = None
    table_r: tuple[float, ...] = ()
    table_v: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.shape not in RADIAL_SHAPES:
            raise ValueError(f"Unknown kernel shape: {self.shape!r}")
        if not math.isfinite(self.amplitude):
            raise NonFiniteMass(f"{self.shape} kernel amplitude is not finite")
        if self.amplitude < 0.0:
            raise NegativeKernel(f"{self.shape} kernel amplitude {self.amplitude} is negative")
        if self.shape in ("gaussian", "exponential") and self.scale <= 0.0:
            raise ValueError(f"{self.shape} kernel needs a positive scale")

        if self.shape == "tabulated":
            if self.cutoff is None:
                raise MissingCutoff("tabulated kernel declared without a cutoff radius")
            r = np.asarray(self.table_r, dtype=np.float64)
            v = np.asarray(self.table_v, dtype=np.float64)
            if r.size < 2 or r.size != v.size:
                raise ValueError("tabulated kernel needs matching position/value columns with >= 2 rows")
            if r[0] < 0.0 or np.any(np.diff(r) <= 0.0):
                raise ValueError("tabulated kernel positions must be increasing and nonnegative")
            if not np.all(np.isfinite(v)):
                raise NonFiniteMass("tabulated kernel holds non-finite values")
            if np.any(v < 0.0):
                raise NegativeKernel("tabulated kernel holds negative values")
        elif self.cutoff is None:
            object.__setattr__(self, "cutoff", self._default_cutoff())

        if self.cutoff is None or not math.isfinite(self.cutoff) or self.cutoff < 0.0:
            raise MissingCutoff(f"{self.shape} kernel needs a finite nonnegative cutoff")

    def _default_cutoff(self) -> float:
        if self.shape == "gaussian":
            return self.scale * math.sqrt(-2.0 * math.log(DEFAULT_TAIL))
        if self.shape == "exponential":
            return -self.scale * math.log(DEFAULT_TAIL)
        if self.shape == "tophat":
            return self.scale
        return 0.0

    @classmethod
    def from_csv(cls, path: str | Path, cutoff: float | None, amplitude: float = 1.0) -> "RadialKernel":
        """Load a two-column (position, value) table; a header row is skipped if present."""
        frame = pd.read_csv(path, header=None).apply(pd.to_numeric, errors="coerce").dropna()
        if frame.shape[1] < 2:
            raise ValueError(f"{path}: expected two columns (position, value)")
        return cls(
            shape="tabulated",
            amplitude=amplitude,
            cutoff=cutoff,
            table_r=tuple(float(x) for x in frame.iloc[:, 0]),
            table_v=tuple(float(x) * amplitude for x in frame.iloc[:, 1]),
        )

    @property
    def radius(self) -> float:
        assert self.cutoff is not None
        return float(self.cutoff)

    @property
    def sup(self) -> float:
        if self.shape == "dirac":
            return math.inf
        if self.shape == "tabulated":
            return float(max(self.table_v))
        return float(self.amplitude)

    @property
    def radially_nonincreasing(self) -> bool:
        if self.shape == "tabulated":
            return bool(np.all(np.diff(np.asarray(self.table_v)) <= 0.0))
        return True

    def evaluate(self, r: ArrayLike) -> NDArray[np.float64]:
        """Kernel value at distance(s) r; exactly zero beyond the cutoff."""
        dist = np.asarray(r, dtype=np.float64)
        if self.shape == "gaussian":
            values = self.amplitude * np.exp(-(dist**2) / (2.0 * self.scale**2))
        elif self.shape == "tophat":
            values = np.full_like(dist, self.amplitude)
        elif self.shape == "exponential":
            values = self.amplitude * np.exp(-dist / self.scale)
        elif self.shape == "tabulated":
            values = np.interp(dist, self.table_r, self.table_v, right=0.0)
        else:
            values = np.where(dist == 0.0, math.inf, 0.0)
        return np.asarray(np.where(dist <= self.radius, values, 0.0), dtype=np.float64)

    def __call__(self, r: ArrayLike) -> NDArray[np.float64]:
        return self.evaluate(r)

    def mass(self, d: int) -> float:
        """Total integral of the kernel over R^d."""
        R = self.radius
        if self.shape == "gaussian":
            s2 = self.scale**2
            value = self.amplitude * (2.0 * math.pi * s2) ** (d / 2) * float(special.gammainc(d / 2, R * R / (2 * s2)))
        elif self.shape == "tophat":
            value = self.amplitude * unit_ball_volume(d) * R**d
        elif self.shape == "exponential":
            s = self.scale
            value = self.amplitude * sphere_area(d) * s**d * math.gamma(d) * float(special.gammainc(d, R / s))
        elif self.shape == "tabulated":
            value = radial_integral(lambda x: float(self.evaluate(x)), d, R, self.table_r)
        else:
            value = self.amplitude

        if not math.isfinite(value):
            raise NonFiniteMass(f"{self.shape} kernel has non-finite mass in d={d}")
        return float(value)

    def truncated_tail(self, d: int) -> float:
        """Mass the untruncated analytic shape places beyond the cutoff."""
        R = self.radius
        if self.shape == "gaussian":
            s2 = self.scale**2
            return self.amplitude * (2 * math.pi * s2) ** (d / 2) * float(special.gammaincc(d / 2, R * R / (2 * s2)))
        if self.shape == "exponential":
            s = self.scale
            return self.amplitude * sphere_area(d) * s**d * math.gamma(d) * float(special.gammaincc(d, R / s))
        return 0.0

    def normalized(self, d: int) -> "RadialKernel":
        """Copy scaled to unit mass in R^d (a dispersal density)."""
        if self.shape == "dirac":
            return replace(self, amplitude=1.0)
        total = self.mass(d)
        if total <= 0.0:
            raise NonFiniteMass(f"{self.shape} kernel has zero mass and cannot be normalized")
        if self.shape == "tabulated":
            return replace(self, amplitude=1.0, table_v=tuple(v / total for v in self.table_v))
        return replace(self, amplitude=self.amplitude / total)

    def sample_displacements(self, d: int, rng: np.random.Generator, n: int = 1) -> NDArray[np.float64]:
        """Draw n displacements from the normalized kernel, shape (n, d)."""
        if self.shape == "dirac" or self.radius == 0.0:
            return np.zeros((n, d))
        R = self.radius
        if self.shape == "gaussian":
            out = rng.normal(0.0, self.scale, size=(n, d))
            bad = np.linalg.norm(out, axis=1) > R
            while np.any(bad):
                out[bad] = rng.normal(0.0, self.scale, size=(int(bad.sum()), d))
                bad = np.linalg.norm(out, axis=1) > R
            return out

        if self.shape == "tophat":
            radii = R * rng.random(n) ** (1.0 / d)
        elif self.shape == "exponential":
            radii = rng.gamma(d, self.scale, size=n)
            bad = radii > R
            while np.any(bad):
                radii[bad] = rng.gamma(d, self.scale, size=int(bad.sum()))
                bad = radii > R
        else:
            grid, cdf = _radial_cdf(self, d)
            radii = np.interp(rng.random(n), cdf, grid)
        return radii[:, None] * random_directions(d, n, rng)


@functools.lru_cache(maxsize=64)
def _radial_cdf(kernel: RadialKernel, d: int, nodes: int = 4097) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    grid = np.linspace(0.0, kernel.radius, nodes)
    density = kernel.evaluate(grid) * grid ** (d - 1)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(grid))])
    if cdf[-1] <= 0.0:
        raise NonFiniteMass("tabulated dispersal kernel has zero mass")
    return grid, cdf / cdf[-1]


def ball_intersection_volume(u: NDArray[np.float64], R: float, d: int) -> NDArray[np.float64]:
    """Volume of the intersection of two radius-R balls at center distance u (d = 1, 2, 3)."""
    u = np.clip(u, 0.0, 2.0 * R)
    if d == 1:
        return np.asarray(2.0 * R - u, dtype=np.float64)
    if d == 2:
        half = u / (2.0 * R)
        return np.asarray(
            2.0 * R * R * np.arccos(half) - 0.5 * u * np.sqrt(np.maximum(4.0 * R * R - u * u, 0.0)), dtype=np.float64
        )
    return np.asarray(math.pi / 12.0 * (4.0 * R + u) * (2.0 * R - u) ** 2, dtype=np.float64)


# Points per half axis for the FFT autocorrelation grid.
_AUTOCORR_POINTS = {1: 4096, 2: 160, 3: 40}


def autocorrelation_table(q: RadialKernel, d: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Radial profile of (q ⋆ q)(u) on a uniform grid of |u| in [0, 2R].

    Computed by FFT convolution of q sampled on a cubic grid, read along one axis, then rescaled so
    the profile integrates to exactly 1 over R^d.
    """
    n = _AUTOCORR_POINTS[d]
    R = q.radius
    step = R / n
    axis = np.arange(-n, n + 1) * step
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    radius = np.sqrt(sum(m * m for m in mesh))
    sampled = q.evaluate(radius)
    conv = signal.fftconvolve(sampled, sampled, mode="full") * step**d
    centre = 2 * n
    index: list[Any] = [slice(centre, None)] + [centre] * (d - 1)
    profile = np.maximum(np.asarray(conv[tuple(index)], dtype=np.float64), 0.0)
    grid = np.arange(profile.size) * step
    weights = profile * grid ** (d - 1)
    total = sphere_area(d) * float(np.sum(0.5 * (weights[1:] + weights[:-1]) * step))
    return grid, profile / total


@dataclass(frozen=True)
class FissionKernel:
    """
    Translation-invariant fission kernel b(x | y1, y2) with total mass <b> = `total_mass`.

    factorized:     b(x|y1,y2) = <b> q(y1-x) q(y2-x)
    bolker-pacala:  one offspring stays at x, the other lands at x + ξ with ξ ~ q, then the pair
                    is swapped with probability 1/2.

    `sigma` > 0 multiplies the density by exp(-σ|y1|²) exp(-σ|y2|²).
    """

    variant: str
    total_mass: float
    dispersal: RadialKernel
    dimension: int
    sigma: float = 0.0
    _beta_table: tuple[NDArray[np.float64], NDArray[np.float64]] | None = field(
        default=None, init=False, repr=False, compare=False, hash=False
    )

    def __post_init__(self) -> None:
        if self.variant not in FISSION_VARIANTS:
            raise ValueError(f"Unknown fission variant: {self.variant!r}")
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if not math.isfinite(self.total_mass):
            raise NonFiniteMass("fission total mass is not finite")
        if self.total_mass < 0.0:
            raise NegativeKernel("fission total mass is negative")
        if self.sigma < 0.0:
            raise ValueError("mollification parameter sigma must be >= 0")
        if (
            self.variant == "factorized"
            and self.dispersal.shape in ("exponential", "tabulated")
            and self.dispersal.radius > 0.0
        ):
            object.__setattr__(self, "_beta_table", autocorrelation_table(self.q, self.dimension))

    @cached_property
    def q(self) -> RadialKernel:
        """The dispersal density normalized in this kernel's dimension."""
        return self.dispersal.normalized(self.dimension)

    @property
    def beta_support(self) -> float:
        R = self.dispersal.radius
        return 2.0 * R if self.variant == "factorized" else R

    def beta_radial(self, r: ArrayLike) -> NDArray[np.float64]:
        """β as a function of |y1 - y2|."""
        dist = np.asarray(r, dtype=np.float64)
        d = self.dimension
        b = self.total_mass
        q = self.q
        if self.variant == "bolker-pacala":
            return np.asarray(b * q.evaluate(dist), dtype=np.float64)
        if q.shape == "dirac" or q.radius == 0.0:
            return np.where(dist == 0.0, math.inf, 0.0)
        R = q.radius
        if q.shape == "gaussian":
            s2 = q.scale**2
            values = b * (4.0 * math.pi * s2) ** (-d / 2) * np.exp(-(dist**2) / (4.0 * s2))
        elif q.shape == "tophat":
            values = b * ball_intersection_volume(dist, R, d) / (unit_ball_volume(d) * R**d) ** 2
        else:
            assert self._beta_table is not None
            grid, profile = self._beta_table
            values = b * np.interp(dist, grid, profile, right=0.0)
        return np.asarray(np.where(dist <= 2.0 * R, values, 0.0), dtype=np.float64)

    @property
    def beta_star(self) -> float:
        # autocorrelations peak at the origin; bolker-pacala inherits the sup of q
        if self.variant == "bolker-pacala":
            return self.total_mass * self.q.sup
        return float(self.beta_radial(0.0))

    @property
    def beta_nonincreasing(self) -> bool:
        if self.variant == "bolker-pacala":
            return self.q.radially_nonincreasing
        return True

    def beta_mass(self) -> float:
        """∫β(u)du computed by radial quadrature."""
        points: Sequence[float] = ()
        if self._beta_table is not None:
            points = tuple(self._beta_table[0][:: max(1, self._beta_table[0].size // 64)])
        elif self.q.shape == "tabulated":
            points = self.q.table_r
        return radial_integral(lambda x: float(self.beta_radial(x)), self.dimension, self.beta_support, points)

    def propose(self, x: NDArray[np.float64], rng: np.random.Generator) -> tuple[NDArray[np.float64], NDArray[np.float64], bool]:
        """Unmollified offspring pair plus the mollifier acceptance decision."""
        d = self.dimension
        x = np.asarray(x, dtype=np.float64).reshape(d)
        if self.variant == "factorized":
            xi = self.q.sample_displacements(d, rng, 2)
            y1, y2 = x + xi[0], x + xi[1]
        else:
            xi = self.q.sample_displacements(d, rng, 1)[0]
            y1, y2 = x.copy(), x + xi
            if rng.random() < 0.5:
                y1, y2 = y2, y1
        if self.sigma == 0.0:
            return y1, y2, True
        accept_prob = float(phi_sigma(y1, self.sigma)[0] * phi_sigma(y2, self.sigma)[0])
        return y1, y2, bool(rng.random() < accept_prob)

    def mass_at(self, x: ArrayLike) -> float:
        """Total mass of the (possibly mollified) kernel for a parent at x."""
        if self.sigma == 0.0:
            return self.total_mass
        point = np.asarray(x, dtype=np.float64).reshape(self.dimension)
        overlap = self._mollified_overlap(point)
        if self.variant == "factorized":
            return self.total_mass * overlap * overlap
        return self.total_mass * float(phi_sigma(point, self.sigma)[0]) * overlap

    def _mollified_overlap(self, x: NDArray[np.float64]) -> float:
        """∫ q(ξ) exp(-σ|x+ξ|²) dξ."""
        q, d, sigma = self.q, self.dimension, self.sigma
        if q.shape == "dirac" or q.radius == 0.0:
            return float(phi_sigma(x, sigma)[0])
        if q.shape == "gaussian":
            scale = 1.0 + 2.0 * sigma * q.scale**2
            return float(scale ** (-d / 2) * math.exp(-sigma * float(x @ x) / scale))
        R = q.radius

        def integrand(*xi: float) -> float:
            v = np.asarray(xi)
            return float(q.evaluate(np.linalg.norm(v))) * math.exp(-sigma * float((x + v) @ (x + v)))

        value, _ = integrate.nquad(integrand, [[-R, R]] * d, opts={"epsrel": 1e-8, "epsabs": 1e-13, "limit": 200})
        return float(value)


def beta_of(f: FissionKernel, u: ArrayLike) -> NDArray[np.float64]:
    """β(u) for displacement(s) u; the last axis holds coordinates (scalars allowed in d=1)."""
    arr = np.asarray(u, dtype=np.float64)
    if f.dimension == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        dist = np.abs(arr)
    else:
        dist = np.linalg.norm(arr, axis=-1)
    return f.beta_radial(dist)


def sample_offspring(f: FissionKernel, x: ArrayLike, rng: np.random.Generator) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Offspring pair drawn from b(x|·,·)/<b>; mollified kernels are sampled by rejection."""
    point = np.asarray(x, dtype=np.float64)
    for _ in range(MAX_REJECTIONS):
        y1, y2, accepted = f.propose(point, rng)
        if accepted:
            return y1, y2
    raise SamplerExhausted(f"mollified sampler rejected {MAX_REJECTIONS} proposals at x={point.tolist()}")


def mollify(f: FissionKernel, sigma: float) -> FissionKernel:
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    if sigma == f.sigma:
        return f
    return replace(f, sigma=float(sigma))


@dataclass(frozen=True)
class MortalityField:
    """
    Death rate m(x). `tabulated-on-grid` holds a regular grid over [0, period)^d (row-major values)
    and returns the value of the cell containing x, with periodic wrap.
    """

    kind: str = "constant"
    value: float = 0.0
    grid_shape: tuple[int, ...] = ()
    grid_values: tuple[float, ...] = ()
    period: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in MORTALITY_KINDS:
            raise ValueError(f"Unknown mortality kind: {self.kind!r}")
        values = self.values
        if not np.all(np.isfinite(values)):
            raise NonFiniteMass("mortality holds non-finite values")
        if np.any(values < 0.0):
            raise NegativeKernel("mortality must be nonnegative")
        if self.kind == "tabulated-on-grid":
            if not self.grid_shape or int(np.prod(self.grid_shape)) != len(self.grid_values):
                raise ValueError("tabulated mortality grid shape does not match its values")
            if self.period <= 0.0:
                raise ValueError("tabulated mortality needs a positive period")

    @property
    def values(self) -> NDArray[np.float64]:
        if self.kind == "constant":
            return np.array([self.value], dtype=np.float64)
        return np.asarray(self.grid_values, dtype=np.float64)

    @property
    def upper(self) -> float:
        return float(self.values.max())

    @property
    def lower(self) -> float:
        return float(self.values.min())

    def evaluate(self, points: ArrayLike) -> NDArray[np.float64]:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.kind == "constant":
            return np.full(pts.shape[0], self.value)
        shape = np.asarray(self.grid_shape)
        cells = np.floor(np.mod(pts, self.period) / self.period * shape).astype(np.int64) % shape
        flat = np.ravel_multi_index(tuple(cells.T), self.grid_shape)
        return np.asarray(self.values[flat], dtype=np.float64)


@dataclass(frozen=True)
class DerivedConstants:
    a_star: float
    a_mass: float
    a_lower: float
    r: float
    b_mass: float
    beta_star: float
    m_upper: float
    m_lower: float

    def as_dict(self) -> dict[str, float]:
        return {
            "a_star": self.a_star,
            "a_mass": self.a_mass,
            "a_lower": self.a_lower,
            "r": self.r,
            "b_mass": self.b_mass,
            "beta_star": self.beta_star,
            "m_upper": self.m_upper,
            "m_lower": self.m_lower,
        }


@dataclass(frozen=True)
class ModelParams:
    mortality: MortalityField
    competition: RadialKernel
    fission: FissionKernel
    dimension: int

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.fission.dimension != self.dimension:
            raise ValueError("fission kernel dimension differs from model dimension")

    @cached_property
    def constants(self) -> DerivedConstants:
        a = self.competition
        r = a.radius / 2.0
        grid = np.linspace(0.0, r, 257)
        a_lower = float(a.evaluate(r)) if a.radially_nonincreasing else float(a.evaluate(grid).min())
        return DerivedConstants(
            a_star=a.sup,
            a_mass=a.mass(self.dimension),
            a_lower=a_lower,
            r=r,
            b_mass=self.fission.total_mass,
            beta_star=self.fission.beta_star,
            m_upper=self.mortality.upper,
            m_lower=self.mortality.lower,
        )

    @property
    def interaction_radius(self) -> float:
        """Largest distance at which a or β is nonzero."""
        return max(self.competition.radius, self.fission.beta_support)


@dataclass
class ValidationReport:
    items: dict[str, bool]
    constants: dict[str, float]
    messages: list[str]

    @property
    def passed(self) -> bool:
        return all(self.items.values())

    def as_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "items": self.items, "constants": self.constants, "messages": self.messages}


def validate_params(p: ModelParams) -> ValidationReport:
    """
    Check the standing assumptions on (m, a, b) item by item.

    Raises:
        NonFiniteMass: a kernel mass is not finite.
    """
    messages: list[str] = []
    c = p.constants
    for name, value in (("<a>", c.a_mass), ("<b>", c.b_mass), ("m*", c.m_upper)):
        if not math.isfinite(value):
            raise NonFiniteMass(f"{name} is not finite")

    items = {
        "i": c.m_lower >= 0.0 and math.isfinite(c.m_upper),
        "ii": math.isfinite(c.a_star) and c.a_lower > 0.0,
        "iii": math.isfinite(p.fission.q.mass(p.dimension)),
        "iv": math.isfinite(c.beta_star),
    }
    if not items["ii"]:
        messages.append(f"(ii) competition kernel has no ball around 0 with a_* > 0 (a_* = {c.a_lower})")
    if not items["iv"]:
        messages.append("(iv) beta is unbounded: dispersal law has an atom")

    for label, kernel in (("competition", p.competition), ("dispersal", p.fission.dispersal)):
        tail = kernel.truncated_tail(p.dimension)
        total = kernel.mass(p.dimension) if kernel.shape != "dirac" else 1.0
        if total > 0.0 and tail / total > TAIL_WARN:
            messages.append(f"{label} kernel truncation drops relative mass {tail / total:.3e}")
            logger.warning(f"{label} kernel truncation drops relative mass {tail / total:.3e}")

    return ValidationReport(items=items, constants=c.as_dict(), messages=messages)
