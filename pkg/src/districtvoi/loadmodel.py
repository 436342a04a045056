"""Probabilistic model of uncertain building electrical load.

A building's hourly load profile is described by four parameters: a
categorical profile shape (``type_id``), a categorical weather/occupancy year
(``year_id``, shared across the district), a mean load and a peak load (kW).
This module holds the priors over those parameters, the monitoring
measurement likelihoods, grid-quadrature posterior inference, and the
construction of concrete hourly profiles from sampled parameters.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

log = logging.getLogger(__name__)

MEAN_GRID_HALF_WIDTH_SIGMAS = 6.0
DEFAULT_GRID_POINTS = 1024
MAX_JOINT_REDRAWS = 1000

LoadProfile = np.ndarray  # hourly energy sequence, kWh, length T


class DatasetError(ValueError):
    """Raised when a load/solar dataset is malformed or inconsistent."""


class InferenceError(RuntimeError):
    """Raised when posterior inference or posterior sampling fails."""


class DegenerateProfileError(ValueError):
    """Raised when a raw profile cannot be rescaled (max equals mean)."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LoadDataset:
    """Hourly load profiles keyed by (type_id, year_id).

    Every pair in the cross product of ``type_ids`` x ``year_ids`` must be
    present with the same length, all entries nonnegative, and every profile
    must have max > mean so that the two-point affine rescaling is defined.
    """

    profiles: dict[tuple[str, str], np.ndarray]
    type_ids: tuple[str, ...]
    year_ids: tuple[str, ...]
    timestep_hours: float = 1.0

    def __post_init__(self) -> None:
        if not self.type_ids or not self.year_ids:
            raise DatasetError("dataset must have at least one type and one year")
        if self.timestep_hours <= 0:
            raise DatasetError("timestep_hours must be positive")
        lengths = set()
        for tid in self.type_ids:
            for yid in self.year_ids:
                key = (tid, yid)
                if key not in self.profiles:
                    raise DatasetError(f"missing profile for type={tid!r} year={yid!r}")
                x = np.asarray(self.profiles[key], dtype=float)
                if x.ndim != 1:
                    raise DatasetError(f"profile {key} is not a 1-D sequence")
                lengths.add(x.shape[0])
                if np.any(x < 0):
                    raise DatasetError(f"profile {key} contains negative load")
                if not x.max() > x.mean():
                    raise DatasetError(f"profile {key} is constant (max == mean)")
                self.profiles[key] = _freeze(x)
        if len(lengths) != 1:
            raise DatasetError(f"profiles have inconsistent lengths: {sorted(lengths)}")

    @property
    def n_steps(self) -> int:
        first = next(iter(self.profiles.values()))
        return int(first.shape[0])


@dataclass(frozen=True)
class PriorSpec:
    """Prior over the four load parameters.

    Mean load is Gaussian in kW, peak load uniform in kW, and the two
    categorical parameters are uniform over the dataset's ids.
    """

    type_ids: tuple[str, ...]
    year_ids: tuple[str, ...]
    mean_mu: float = 100.0
    mean_sigma: float = 25.0
    peak_min: float = 200.0
    peak_max: float = 400.0

    def __post_init__(self) -> None:
        if not self.type_ids or not self.year_ids:
            raise ValueError("prior needs non-empty type and year id sets")
        if self.mean_sigma <= 0:
            raise ValueError("mean_sigma must be positive")
        if not (self.peak_max > self.peak_min > 0):
            raise ValueError("peak bounds must satisfy peak_max > peak_min > 0")


@dataclass(frozen=True)
class MeasurementModel:
    """Monitoring measurement likelihoods.

    Monitoring reveals the profile type exactly and estimates mean/peak load
    with Gaussian imprecision: z | theta ~ N(theta, eps * theta), where
    eps * theta is the standard deviation. The year parameter is never
    observable (it stands in for inherent year-to-year variability).
    """

    eps_mean: float = 0.1
    eps_peak: float = 0.075
    type_observed: bool = True
    year_observed: bool = False

    def __post_init__(self) -> None:
        if self.eps_mean < 0 or self.eps_peak < 0:
            raise ValueError("measurement error fractions must be >= 0")
        if self.year_observed:
            raise ValueError("year measurements are not supported: monitoring provides no year information")


@dataclass(frozen=True)
class BuildingLoadParams:
    """One realization of the uncertain parameter vector for a building."""

    type_id: str
    year_id: str
    mean_kw: float
    peak_kw: float

    def __post_init__(self) -> None:
        if not self.mean_kw > 0:
            raise ValueError("mean_kw must be positive")
        if not self.peak_kw > self.mean_kw:
            raise ValueError("peak_kw must exceed mean_kw")


@dataclass(frozen=True)
class Measurement:
    """Monitoring data for one building: exact type plus noisy mean/peak."""

    observed_type: str
    z_mean: float
    z_peak: float

    def __post_init__(self) -> None:
        if self.z_mean <= 0 or self.z_peak <= 0:
            raise ValueError("measured mean and peak must be positive")


@dataclass(frozen=True)
class GridPdf:
    """A 1-D density tabulated on a uniform grid, normalized by trapezoid rule.

    ``point`` marks an exact point mass (zero-noise measurement); sampling and
    moments then bypass the tabulation, which still integrates to one so the
    normalization invariant holds uniformly.
    """

    grid: np.ndarray
    density: np.ndarray
    cdf: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    point: float | None = None

    @classmethod
    def from_unnormalized(cls, grid: np.ndarray, unnorm: np.ndarray, name: str) -> "GridPdf":
        z = float(np.trapezoid(unnorm, grid))
        if not np.isfinite(z) or z < 1e-300:
            raise InferenceError(
                f"posterior normalization for parameter {name!r} underflowed "
                "(measurement is wildly inconsistent with the prior)"
            )
        density = unnorm / z
        cdf = cumulative_trapezoid(density, grid, initial=0.0)
        cdf = cdf / cdf[-1]
        return cls(grid=_freeze(grid), density=_freeze(density), cdf=_freeze(cdf))

    @classmethod
    def point_mass(cls, grid: np.ndarray, value: float, name: str) -> "GridPdf":
        if not (grid[0] <= value <= grid[-1]):
            raise InferenceError(
                f"zero-noise measurement of {name!r} at {value} lies outside the support "
                f"[{grid[0]}, {grid[-1]}]"
            )
        j = int(np.argmin(np.abs(grid - value)))
        dx = float(grid[1] - grid[0])
        density = np.zeros_like(grid)
        # Single-node spike whose trapezoid integral is exactly one.
        density[j] = (2.0 / dx) if j in (0, len(grid) - 1) else (1.0 / dx)
        cdf = cumulative_trapezoid(density, grid, initial=0.0)
        cdf = cdf / cdf[-1]
        return cls(grid=_freeze(grid), density=_freeze(density), cdf=_freeze(cdf), point=float(value))

    def mean(self) -> float:
        if self.point is not None:
            return self.point
        return float(np.trapezoid(self.grid * self.density, self.grid))

    def variance(self) -> float:
        if self.point is not None:
            return 0.0
        m = self.mean()
        return float(np.trapezoid((self.grid - m) ** 2 * self.density, self.grid))

    def ppf(self, u: float | np.ndarray) -> float | np.ndarray:
        """Inverse CDF by linear interpolation of the tabulated CDF."""
        if self.point is not None:
            return self.point if np.isscalar(u) else np.full(np.shape(u), self.point)
        return np.interp(u, self.cdf, self.grid)


@dataclass(frozen=True)
class PosteriorDistribution:
    """Per-building posterior: categorical type, uniform year, tabulated mean/peak."""

    type_probs: dict[str, float]
    year_ids: tuple[str, ...]
    mean_pdf: GridPdf
    peak_pdf: GridPdf


# ---------------------------------------------------------------------------
# Synthetic dataset generation and CSV I/O
# ---------------------------------------------------------------------------

def generate_synthetic_dataset(n_types: int, n_years: int, n_steps: int, seed: int) -> LoadDataset:
    """Generate a deterministic synthetic profile dataset.

    Profiles combine a type-specific diurnal shape, a weekday/weekend factor,
    a seasonal cycle, and year-specific multiplicative noise. Mean level is
    around one (units are irrelevant: profiles are affinely rescaled to the
    sampled mean/peak when scenarios are built).
    """
    if n_types < 1 or n_years < 1:
        raise ValueError("n_types and n_years must be >= 1")
    if n_steps < 24:
        raise ValueError("n_steps must be at least 24 (one full day)")

    hod = np.arange(n_steps) % 24
    dow = (np.arange(n_steps) // 24) % 7
    doy = (np.arange(n_steps) // 24) % 365

    profiles: dict[tuple[str, str], np.ndarray] = {}
    type_ids = tuple(f"t{k}" for k in range(n_types))
    year_ids = tuple(f"y{k}" for k in range(n_years))
    for ti, tid in enumerate(type_ids):
        shape_rng = np.random.default_rng(np.random.SeedSequence([seed, 1, ti]))
        peak_hour = 8.0 + 9.0 * shape_rng.random()
        width = 2.0 + 3.0 * shape_rng.random()
        evening_frac = 0.6 * shape_rng.random()
        weekend_factor = 0.35 + 0.5 * shape_rng.random()
        seasonal_amp = 0.1 + 0.3 * shape_rng.random()
        base = 0.35 + 0.3 * shape_rng.random()

        day_shape = np.exp(-0.5 * ((hod - peak_hour) / width) ** 2)
        day_shape = day_shape + evening_frac * np.exp(-0.5 * ((hod - 19.0) / 1.5) ** 2)
        weekly = np.where(dow >= 5, weekend_factor, 1.0)
        seasonal = 1.0 + seasonal_amp * np.cos(2.0 * np.pi * (doy - 15.0) / 365.0)

        for yi, yid in enumerate(year_ids):
            year_rng = np.random.default_rng(np.random.SeedSequence([seed, 2, ti, yi]))
            phase = 2.0 * np.pi * year_rng.random()
            slow = 1.0 + 0.08 * np.sin(2.0 * np.pi * doy / 365.0 + phase)
            noise = np.exp(0.10 * year_rng.standard_normal(n_steps) - 0.005)
            x = (base + day_shape) * weekly * seasonal * slow * noise
            x = x / x.mean()
            profiles[(tid, yid)] = x
    return LoadDataset(profiles=profiles, type_ids=type_ids, year_ids=year_ids)


def load_dataset(path: str | Path, timestep_hours: float = 1.0) -> LoadDataset:
    """Load a profile dataset from CSV with header ``type_id,year_id,t,load_kwh``.

    Rows must cover the full (type, year) cross product with a contiguous,
    uniform-length hour index per pair; negative loads are rejected.
    """
    path = Path(path)
    rows: dict[tuple[str, str], list[tuple[int, float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"type_id", "year_id", "t", "load_kwh"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise DatasetError(f"{path}: expected columns {sorted(expected)}, got {reader.fieldnames}")
        for rec in reader:
            key = (rec["type_id"], rec["year_id"])
            value = float(rec["load_kwh"])
            if value < 0:
                raise DatasetError(f"{path}: negative load {value} for {key} at t={rec['t']}")
            rows.setdefault(key, []).append((int(rec["t"]), value))

    if not rows:
        raise DatasetError(f"{path}: no data rows")
    type_ids = tuple(sorted({k[0] for k in rows}))
    year_ids = tuple(sorted({k[1] for k in rows}))
    profiles: dict[tuple[str, str], np.ndarray] = {}
    for tid in type_ids:
        for yid in year_ids:
            if (tid, yid) not in rows:
                raise DatasetError(f"{path}: missing (type={tid!r}, year={yid!r}) combination")
            entries = sorted(rows[(tid, yid)])
            ts = [t for t, _ in entries]
            if ts != list(range(len(ts))):
                raise DatasetError(f"{path}: non-contiguous hour index for (type={tid!r}, year={yid!r})")
            profiles[(tid, yid)] = np.array([v for _, v in entries], dtype=float)
    return LoadDataset(profiles=profiles, type_ids=type_ids, year_ids=year_ids, timestep_hours=timestep_hours)


def write_dataset(ds: LoadDataset, path: str | Path) -> None:
    """Write a dataset in the CSV format accepted by :func:`load_dataset`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["type_id", "year_id", "t", "load_kwh"])
        for tid in ds.type_ids:
            for yid in ds.year_ids:
                for t, value in enumerate(ds.profiles[(tid, yid)]):
                    writer.writerow([tid, yid, t, repr(float(value))])


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_district_params(
    prior: PriorSpec, n_buildings: int, rng: np.random.Generator
) -> list[BuildingLoadParams]:
    """Draw a joint district realization: one shared year, independent buildings.

    The mean draw for each building is rejected and redrawn while it is
    nonpositive or not below the building's sampled peak.
    """
    if n_buildings < 1:
        raise ValueError("n_buildings must be >= 1")
    year = prior.year_ids[rng.integers(len(prior.year_ids))]
    out = []
    for _ in range(n_buildings):
        type_id = prior.type_ids[rng.integers(len(prior.type_ids))]
        peak = float(rng.uniform(prior.peak_min, prior.peak_max))
        mean = _draw_truncated_mean(prior, peak, rng)
        out.append(BuildingLoadParams(type_id=type_id, year_id=year, mean_kw=mean, peak_kw=peak))
    return out


def _draw_truncated_mean(prior: PriorSpec, peak: float, rng: np.random.Generator) -> float:
    for _ in range(100_000):
        m = float(rng.normal(prior.mean_mu, prior.mean_sigma))
        if 0.0 < m < peak:
            return m
    raise InferenceError("mean-load prior is inconsistent with the sampled peak (rejection loop exhausted)")


def sample_measurement(
    truth: BuildingLoadParams, model: MeasurementModel, rng: np.random.Generator
) -> Measurement:
    """Simulate monitoring of a building with known true parameters."""
    z_mean = _positive_normal(truth.mean_kw, model.eps_mean * truth.mean_kw, rng)
    z_peak = _positive_normal(truth.peak_kw, model.eps_peak * truth.peak_kw, rng)
    return Measurement(observed_type=truth.type_id, z_mean=z_mean, z_peak=z_peak)


def _positive_normal(loc: float, scale: float, rng: np.random.Generator) -> float:
    if scale == 0.0:
        return loc
    for _ in range(100_000):
        z = float(rng.normal(loc, scale))
        if z > 0.0:
            return z
    raise InferenceError("measurement redraw loop exhausted (noise scale far exceeds the mean)")


# ---------------------------------------------------------------------------
# Posterior inference
# ---------------------------------------------------------------------------

def _normal_pdf(x: np.ndarray | float, loc: np.ndarray | float, scale: np.ndarray | float) -> np.ndarray:
    return np.exp(-0.5 * ((x - loc) / scale) ** 2) / (np.sqrt(2.0 * np.pi) * scale)


def posterior_update(
    prior: PriorSpec,
    msmt: Measurement,
    model: MeasurementModel,
    *,
    observe_type: bool | None = None,
    observe_mean: bool = True,
    observe_peak: bool = True,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> PosteriorDistribution:
    """Update the prior of one building given its monitoring measurement.

    The mean and peak posteriors are computed by deterministic quadrature on
    uniform grids (at least 1024 points): the mean grid spans the prior mean
    +/- 6 sigma intersected with (0, inf), the peak grid spans exactly the
    uniform prior support. Unobserved components keep their prior, and the
    year is never updated. A zero noise fraction collapses the posterior to a
    point mass at the measured value.

    Args:
        prior: district-wide prior specification.
        msmt: this building's measurement.
        model: measurement likelihood parameters.
        observe_type: override for type observability (defaults to the model flag).
        observe_mean: whether the mean component of the measurement is used.
        observe_peak: whether the peak component of the measurement is used.
        grid_points: quadrature resolution (>= 1024 enforced by default config).
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    if observe_type is None:
        observe_type = model.type_observed

    if observe_type:
        if msmt.observed_type not in prior.type_ids:
            raise InferenceError(f"observed type {msmt.observed_type!r} is not in the prior support")
        type_probs = {tid: (1.0 if tid == msmt.observed_type else 0.0) for tid in prior.type_ids}
    else:
        p = 1.0 / len(prior.type_ids)
        type_probs = {tid: p for tid in prior.type_ids}

    lo = max(prior.mean_mu - MEAN_GRID_HALF_WIDTH_SIGMAS * prior.mean_sigma, 1e-9)
    hi = prior.mean_mu + MEAN_GRID_HALF_WIDTH_SIGMAS * prior.mean_sigma
    mean_grid = np.linspace(lo, hi, grid_points)
    if not observe_mean:
        mean_pdf = GridPdf.from_unnormalized(mean_grid, _normal_pdf(mean_grid, prior.mean_mu, prior.mean_sigma), "mean")
    elif model.eps_mean == 0.0:
        mean_pdf = GridPdf.point_mass(mean_grid, msmt.z_mean, "mean")
    else:
        unnorm = _normal_pdf(mean_grid, prior.mean_mu, prior.mean_sigma) * _normal_pdf(
            msmt.z_mean, mean_grid, model.eps_mean * mean_grid
        )
        mean_pdf = GridPdf.from_unnormalized(mean_grid, unnorm, "mean")

    peak_grid = np.linspace(prior.peak_min, prior.peak_max, grid_points)
    if not observe_peak:
        peak_pdf = GridPdf.from_unnormalized(peak_grid, np.ones_like(peak_grid), "peak")
    elif model.eps_peak == 0.0:
        peak_pdf = GridPdf.point_mass(peak_grid, msmt.z_peak, "peak")
    else:
        unnorm = _normal_pdf(msmt.z_peak, peak_grid, model.eps_peak * peak_grid)
        peak_pdf = GridPdf.from_unnormalized(peak_grid, unnorm, "peak")

    return PosteriorDistribution(
        type_probs=type_probs, year_ids=tuple(prior.year_ids), mean_pdf=mean_pdf, peak_pdf=peak_pdf
    )


def prior_as_posterior(prior: PriorSpec, grid_points: int = DEFAULT_GRID_POINTS) -> PosteriorDistribution:
    """The no-information posterior: every component keeps its prior."""
    dummy = Measurement(observed_type=prior.type_ids[0], z_mean=prior.mean_mu, z_peak=prior.peak_min + 1e-9)
    return posterior_update(
        prior, dummy, MeasurementModel(),
        observe_type=False, observe_mean=False, observe_peak=False, grid_points=grid_points,
    )


def _draw_building_from_posterior(post: PosteriorDistribution, year: str, rng: np.random.Generator) -> BuildingLoadParams:
    tids = list(post.type_probs)
    probs = np.array([post.type_probs[t] for t in tids])
    type_id = tids[int(rng.choice(len(tids), p=probs / probs.sum()))]
    for _ in range(MAX_JOINT_REDRAWS):
        u_mean, u_peak = rng.random(2)
        mean = float(post.mean_pdf.ppf(u_mean))
        peak = float(post.peak_pdf.ppf(u_peak))
        if 0.0 < mean < peak:
            return BuildingLoadParams(type_id=type_id, year_id=year, mean_kw=mean, peak_kw=peak)
    raise InferenceError(
        f"could not draw mean < peak from the posterior after {MAX_JOINT_REDRAWS} joint redraws "
        "(posterior mean and peak supports are inconsistent)"
    )


def sample_posterior_params(
    posteriors: PosteriorDistribution | Sequence[PosteriorDistribution],
    rng: np.random.Generator,
    n_buildings: int | None = None,
) -> list[BuildingLoadParams]:
    """Draw one district realization from per-building posteriors.

    The year is drawn uniformly once and shared by all buildings; mean and
    peak are drawn by inverse-CDF on the tabulated pdfs, jointly redrawn until
    peak > mean.
    """
    if isinstance(posteriors, PosteriorDistribution):
        if n_buildings is None or n_buildings < 1:
            raise ValueError("n_buildings must be given when a single posterior is shared")
        posteriors = [posteriors] * n_buildings
    posteriors = list(posteriors)
    if not posteriors:
        raise ValueError("need at least one posterior")
    year_ids = posteriors[0].year_ids
    year = year_ids[rng.integers(len(year_ids))]
    return [_draw_building_from_posterior(p, year, rng) for p in posteriors]


# ---------------------------------------------------------------------------
# Profile construction
# ---------------------------------------------------------------------------

def build_profile(params: BuildingLoadParams, ds: LoadDataset) -> LoadProfile:
    """Rescale the raw profile for (type, year) to the sampled mean and peak.

    Affine two-point rescaling: the output's per-step mean and max hit the
    targets exactly unless clamping at zero occurs (negative entries are
    clamped and counted, without re-normalization).
    """
    key = (params.type_id, params.year_id)
    if key not in ds.profiles:
        raise KeyError(f"(type={params.type_id!r}, year={params.year_id!r}) not in dataset")
    x = ds.profiles[key]
    x_mean = float(x.mean())
    x_max = float(x.max())
    if x_max <= x_mean:
        raise DegenerateProfileError(f"profile {key} has max == mean; cannot rescale")
    dt = ds.timestep_hours
    b = (params.peak_kw - params.mean_kw) * dt / (x_max - x_mean)
    a = params.mean_kw * dt - b * x_mean
    y = a + b * x
    n_clamped = int(np.count_nonzero(y < 0))
    if n_clamped:
        log.debug("build_profile clamped %d negative entries for %s", n_clamped, key)
        y = np.maximum(y, 0.0)
    return y
