"""District scenario assembly and Fast-Forward scenario reduction.

A scenario is a joint realization of every building's hourly load profile
plus a normalized solar generation year, carrying a probability weight.
Large Monte Carlo samples are reduced to a small representative set by
greedy Fast-Forward selection on z-scored aggregate-load features.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from districtvoi.loadmodel import BuildingLoadParams, DatasetError, LoadDataset, _freeze, build_profile

PROB_TOL = 1e-9


@dataclass(frozen=True)
class SolarDataset:
    """Normalized solar generation (kW per kWp) keyed by year id."""

    years: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if not self.years:
            raise DatasetError("solar dataset has no years")
        lengths = set()
        for yid, g in self.years.items():
            g = np.asarray(g, dtype=float)
            if np.any(g < 0) or np.any(g > 1.2):
                raise DatasetError(f"solar year {yid!r} has entries outside [0, 1.2]")
            lengths.add(g.shape[0])
            self.years[yid] = _freeze(g)
        if len(lengths) != 1:
            raise DatasetError(f"solar years have inconsistent lengths: {sorted(lengths)}")

    @property
    def year_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.years))

    @property
    def n_steps(self) -> int:
        return int(next(iter(self.years.values())).shape[0])


@dataclass(frozen=True)
class Scenario:
    """One joint district realization with probability weight."""

    loads: np.ndarray            # (B, T) kWh per step
    solar: np.ndarray            # (T,) kW per kWp
    probability: float
    params: tuple[BuildingLoadParams, ...]
    solar_year: str
    timestep_hours: float = 1.0

    def __post_init__(self) -> None:
        loads = np.atleast_2d(np.asarray(self.loads, dtype=float))
        if np.any(loads < 0):
            raise ValueError("scenario loads must be nonnegative")
        if not (0.0 <= self.probability <= 1.0 + PROB_TOL):
            raise ValueError("scenario probability must be in [0, 1]")
        object.__setattr__(self, "loads", _freeze(loads))
        object.__setattr__(self, "solar", _freeze(np.asarray(self.solar, dtype=float)))
        if self.solar.shape[0] != loads.shape[1]:
            raise ValueError("solar sequence length must match load length")

    @property
    def n_buildings(self) -> int:
        return int(self.loads.shape[0])

    @property
    def n_steps(self) -> int:
        return int(self.loads.shape[1])


@dataclass(frozen=True)
class FeatureVector:
    """Aggregate district load summary used for scenario reduction."""

    agg_mean: float
    agg_max: float
    agg_std: float


class ScenarioSet:
    """An ordered collection of scenarios whose probabilities sum to one."""

    def __init__(self, scenarios: Sequence[Scenario]):
        scenarios = list(scenarios)
        if not scenarios:
            raise ValueError("scenario set must be non-empty")
        b = {s.n_buildings for s in scenarios}
        t = {s.n_steps for s in scenarios}
        if len(b) != 1 or len(t) != 1:
            raise ValueError("scenarios have inconsistent building counts or lengths")
        total = sum(s.probability for s in scenarios)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"scenario probabilities sum to {total}, expected 1")
        self.scenarios = scenarios

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __getitem__(self, i: int) -> Scenario:
        return self.scenarios[i]

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])


def assemble_scenarios(
    param_draws: Sequence[Sequence[BuildingLoadParams]],
    load_ds: LoadDataset,
    solar_ds: SolarDataset,
    rng: np.random.Generator,
) -> ScenarioSet:
    """Build equally weighted scenarios from district parameter draws.

    A solar generation year is sampled uniformly for each scenario.
    """
    if load_ds.n_steps != solar_ds.n_steps:
        raise DatasetError("load and solar datasets have different lengths")
    n = len(param_draws)
    solar_years = solar_ds.year_ids
    out = []
    for draw in param_draws:
        loads = np.stack([build_profile(p, load_ds) for p in draw])
        sy = solar_years[rng.integers(len(solar_years))]
        out.append(
            Scenario(
                loads=loads,
                solar=solar_ds.years[sy],
                probability=1.0 / n,
                params=tuple(draw),
                solar_year=sy,
                timestep_hours=load_ds.timestep_hours,
            )
        )
    return ScenarioSet(out)


def features(s: Scenario) -> FeatureVector:
    """Mean, max, and population std of the aggregate district load (kW)."""
    agg = s.loads.sum(axis=0) / s.timestep_hours
    return FeatureVector(agg_mean=float(agg.mean()), agg_max=float(agg.max()), agg_std=float(agg.std()))


def _feature_matrix(sset: ScenarioSet) -> np.ndarray:
    f = [features(s) for s in sset]
    return np.array([[v.agg_mean, v.agg_max, v.agg_std] for v in f])


def reduce_fast_forward(sset: ScenarioSet, k: int) -> ScenarioSet:
    """Greedy Fast-Forward reduction to ``k`` scenarios.

    Features are z-scored over the input set (population std; zero-variance
    features dropped) and compared with Euclidean distance. Each step adds
    the scenario minimizing the probability-weighted sum, over scenarios not
    yet selected, of the distance to the nearest selected scenario. Dropped
    scenarios hand their probability to their nearest selected scenario.
    Ties break toward the lowest input index, so the output is deterministic.
    """
    n = len(sset)
    if not (1 <= k <= n):
        raise ValueError(f"k must be in [1, {n}], got {k}")

    feats = _feature_matrix(sset)
    std = feats.std(axis=0)
    keep = std > 0
    if keep.any():
        z = (feats[:, keep] - feats[:, keep].mean(axis=0)) / std[keep]
    else:
        z = np.zeros((n, 1))
    diff = z[:, None, :] - z[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))

    probs = sset.probabilities
    selected: list[int] = []
    min_dist = np.full(n, np.inf)
    unselected = np.ones(n, dtype=bool)
    for _ in range(k):
        best_obj = np.inf
        best_j = -1
        for j in range(n):
            if not unselected[j]:
                continue
            cand = np.minimum(min_dist, dist[:, j])
            mask = unselected.copy()
            mask[j] = False
            obj = float((probs * cand)[mask].sum())
            if obj < best_obj:
                best_obj = obj
                best_j = j
        selected.append(best_j)
        unselected[best_j] = False
        min_dist = np.minimum(min_dist, dist[:, best_j])

    selected_sorted = sorted(selected)
    new_probs = {j: sset[j].probability for j in selected_sorted}
    for u in range(n):
        if not unselected[u]:
            continue
        d_to_sel = [(dist[u, j], j) for j in selected_sorted]
        _, nearest = min(d_to_sel)
        new_probs[nearest] += sset[u].probability

    out = []
    for j in selected_sorted:
        s = sset[j]
        out.append(
            Scenario(
                loads=s.loads,
                solar=s.solar,
                probability=new_probs[j],
                params=s.params,
                solar_year=s.solar_year,
                timestep_hours=s.timestep_hours,
            )
        )
    return ScenarioSet(out)


# ---------------------------------------------------------------------------
# Synthetic solar generation and CSV I/O
# ---------------------------------------------------------------------------

def generate_synthetic_solar(n_years: int, n_steps: int, seed: int) -> SolarDataset:
    """Deterministic synthetic normalized PV generation years.

    Clear-sky diurnal bell with seasonal amplitude, modulated by a smooth
    per-day cloudiness factor specific to each weather year.
    """
    if n_years < 1:
        raise ValueError("n_years must be >= 1")
    if n_steps < 24:
        raise ValueError("n_steps must be at least 24")
    hod = np.arange(n_steps) % 24
    doy = (np.arange(n_steps) // 24) % 365
    elevation = np.sin(np.pi * np.clip((hod - 6.0) / 12.0, 0.0, 1.0))
    seasonal = 0.65 + 0.35 * np.cos(2.0 * np.pi * (doy - 172.0) / 365.0 + np.pi)
    clear_sky = np.clip(elevation, 0.0, None) ** 1.3 * seasonal

    years: dict[str, np.ndarray] = {}
    n_days = n_steps // 24 + 1
    for yi in range(n_years):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 3, yi]))
        daily = 0.25 + 0.75 * rng.beta(2.0, 1.2, size=n_days)
        # Average adjacent days so cloudiness varies smoothly.
        smooth = np.convolve(daily, np.ones(3) / 3.0, mode="same")
        cloud = smooth[np.arange(n_steps) // 24]
        years[f"s{yi}"] = np.clip(clear_sky * cloud, 0.0, 1.05)
    return SolarDataset(years=years)


def load_solar(path: str | Path) -> SolarDataset:
    """Load a solar dataset from CSV with header ``year_id,t,gen_kw_per_kwp``."""
    path = Path(path)
    rows: dict[str, list[tuple[int, float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"year_id", "t", "gen_kw_per_kwp"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise DatasetError(f"{path}: expected columns {sorted(expected)}, got {reader.fieldnames}")
        for rec in reader:
            rows.setdefault(rec["year_id"], []).append((int(rec["t"]), float(rec["gen_kw_per_kwp"])))
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    years = {}
    for yid, entries in rows.items():
        entries = sorted(entries)
        if [t for t, _ in entries] != list(range(len(entries))):
            raise DatasetError(f"{path}: non-contiguous hour index for solar year {yid!r}")
        years[yid] = np.array([v for _, v in entries])
    return SolarDataset(years=years)


def write_solar(ds: SolarDataset, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year_id", "t", "gen_kw_per_kwp"])
        for yid in ds.year_ids:
            for t, value in enumerate(ds.years[yid]):
                writer.writerow([yid, t, repr(float(value))])


def save_scenario_set(sset: ScenarioSet, out_dir: str | Path) -> None:
    """Serialize a scenario set as per-scenario CSVs plus a JSON manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for idx, s in enumerate(sset):
        name = f"scenario_{idx:04d}.csv"
        with (out_dir / name).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "solar_kw_per_kwp"] + [f"load_kwh_b{i}" for i in range(s.n_buildings)])
            for t in range(s.n_steps):
                writer.writerow([t, repr(float(s.solar[t]))] + [repr(float(s.loads[i, t])) for i in range(s.n_buildings)])
        manifest.append(
            {
                "file": name,
                "probability": s.probability,
                "solar_year": s.solar_year,
                "timestep_hours": s.timestep_hours,
                "params": [
                    {"type_id": p.type_id, "year_id": p.year_id, "mean_kw": p.mean_kw, "peak_kw": p.peak_kw}
                    for p in s.params
                ],
            }
        )
    with (out_dir / "manifest.json").open("w") as fh:
        json.dump({"schema_version": 1, "scenarios": manifest}, fh, indent=2, sort_keys=True)


def load_scenario_set(in_dir: str | Path) -> ScenarioSet:
    """Reconstruct a scenario set written by :func:`save_scenario_set`."""
    in_dir = Path(in_dir)
    with (in_dir / "manifest.json").open() as fh:
        manifest = json.load(fh)
    out = []
    for rec in manifest["scenarios"]:
        with (in_dir / rec["file"]).open(newline="") as fh:
            reader = csv.DictReader(fh)
            cols = [c for c in reader.fieldnames or [] if c.startswith("load_kwh_b")]
            solar, loads = [], [[] for _ in cols]
            for row in reader:
                solar.append(float(row["solar_kw_per_kwp"]))
                for i, c in enumerate(cols):
                    loads[i].append(float(row[c]))
        out.append(
            Scenario(
                loads=np.array(loads),
                solar=np.array(solar),
                probability=rec["probability"],
                params=tuple(
                    BuildingLoadParams(
                        type_id=p["type_id"], year_id=p["year_id"], mean_kw=p["mean_kw"], peak_kw=p["peak_kw"]
                    )
                    for p in rec["params"]
                ),
                solar_year=rec["solar_year"],
                timestep_hours=rec["timestep_hours"],
            )
        )
    return ScenarioSet(out)
