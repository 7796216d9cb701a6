"""Grid segmentation, traffic-tensor construction, corruption masks, metrics.

Cells live in a local equirectangular projection anchored at the bounding-box
center (1 degree latitude = 110.574 km, 1 degree longitude = 111.320 km scaled
by cos(center latitude)); city-scale distortion is negligible and the rule is
reproducible.  Region ids are ``row * n_cols + col`` with row 0 at ``lat_min``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KM_PER_DEG_LAT = 110.574
KM_PER_DEG_LON_EQUATOR = 111.320

TENSOR_MODES = ("all_locations", "source_to_destination")


@dataclass(frozen=True)
class GridSpec:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    cell_size_km: float
    n_rows: int
    n_cols: int

    @property
    def n_regions(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def cell_deg_lat(self) -> float:
        return self.cell_size_km / KM_PER_DEG_LAT

    @property
    def cell_deg_lon(self) -> float:
        lat_center = 0.5 * (self.lat_min + self.lat_max)
        return self.cell_size_km / (
            KM_PER_DEG_LON_EQUATOR * math.cos(math.radians(lat_center))
        )


def grid_segment(bbox: tuple[float, float, float, float], cell_size_km: float) -> GridSpec:
    """Divide a (lat_min, lat_max, lon_min, lon_max) box into square cells."""
    lat_min, lat_max, lon_min, lon_max = (float(v) for v in bbox)
    if not (lat_min < lat_max and lon_min < lon_max):
        raise ValueError(f"inverted bounding box: {bbox}")
    if cell_size_km <= 0:
        raise ValueError(f"cell_size_km must be positive, got {cell_size_km}")
    lat_center = 0.5 * (lat_min + lat_max)
    extent_ns_km = (lat_max - lat_min) * KM_PER_DEG_LAT
    extent_ew_km = (
        (lon_max - lon_min) * KM_PER_DEG_LON_EQUATOR * math.cos(math.radians(lat_center))
    )
    n_rows = max(1, math.ceil(extent_ns_km / cell_size_km - 1e-9))
    n_cols = max(1, math.ceil(extent_ew_km / cell_size_km - 1e-9))
    return GridSpec(lat_min, lat_max, lon_min, lon_max, float(cell_size_km), n_rows, n_cols)


def assign_region(lat: float, lon: float, grid: GridSpec) -> int | None:
    """Region id of the cell containing the point, or None when outside."""
    if not (grid.lat_min <= lat <= grid.lat_max and grid.lon_min <= lon <= grid.lon_max):
        return None
    row = min(int((lat - grid.lat_min) / grid.cell_deg_lat), grid.n_rows - 1)
    col = min(int((lon - grid.lon_min) / grid.cell_deg_lon), grid.n_cols - 1)
    return row * grid.n_cols + col


@dataclass(frozen=True)
class TrajectoryPoint:
    object_id: str
    timestamp: float
    latitude: float
    longitude: float


@dataclass
class BuildStats:
    points_seen: int = 0
    dropped_outside: int = 0
    dropped_out_of_horizon: int = 0
    points_binned: int = 0
    objects: int = 0


def _per_bin_regions(points, grid, time_bin_seconds, horizon, t_start, stats):
    """Last-sample region per time bin for one object's sorted points."""
    regions: dict[int, int] = {}
    for p in points:
        stats.points_seen += 1
        k = math.floor((p.timestamp - t_start) / time_bin_seconds)
        if k < 0 or k >= horizon:
            stats.dropped_out_of_horizon += 1
            continue
        region = assign_region(p.latitude, p.longitude, grid)
        if region is None:
            stats.dropped_outside += 1
            continue
        regions[k] = region  # later samples in the same bin win
        stats.points_binned += 1
    return regions


def build_tensor(
    points,
    grid: GridSpec,
    time_bin_seconds: float,
    horizon: int,
    mode: str = "all_locations",
    t_start: float | None = None,
) -> tuple[np.ndarray, BuildStats]:
    """Aggregate trajectory points into an M x M x T transition-count tensor.

    all_locations: every pair of consecutive occupied bins (k, k+1) of an
    object increments ``x[i, j, k]`` with i, j the bin regions.  Bins with no
    sample produce no transition (no interpolation).
    source_to_destination: each object (one trip) increments
    ``x[first_region, last_region, departure_bin]`` once.
    """
    if mode not in TENSOR_MODES:
        raise ValueError(f"mode must be one of {TENSOR_MODES}, got {mode!r}")
    if time_bin_seconds <= 0 or horizon <= 0:
        raise ValueError("time_bin_seconds and horizon must be positive")

    by_object: dict[str, list[TrajectoryPoint]] = {}
    for p in points:
        by_object.setdefault(p.object_id, []).append(p)
    for obj_points in by_object.values():
        obj_points.sort(key=lambda p: p.timestamp)

    stats = BuildStats(objects=len(by_object))
    m = grid.n_regions
    x = np.zeros((m, m, horizon))
    if not by_object:
        return x, stats

    if t_start is None:
        t_start = min(p.timestamp for pts in by_object.values() for p in pts)

    for obj_points in by_object.values():
        regions = _per_bin_regions(obj_points, grid, time_bin_seconds, horizon, t_start, stats)
        if not regions:
            continue
        if mode == "all_locations":
            for k, r in regions.items():
                nxt = regions.get(k + 1)
                if nxt is not None:
                    x[r, nxt, k] += 1.0
        else:
            bins = sorted(regions)
            x[regions[bins[0]], regions[bins[-1]], bins[0]] += 1.0
    return x, stats


def random_mask(dims: tuple[int, int, int], missing_rate: float, seed: int) -> np.ndarray:
    """Binary tensor with entries independently 0 at the given rate."""
    if not 0.0 <= missing_rate < 1.0:
        raise ValueError(f"missing_rate must be in [0, 1), got {missing_rate}")
    rng = np.random.default_rng(seed)
    return (rng.random(dims) >= missing_rate).astype(float)


def structured_mask(
    dims: tuple[int, int, int], cell_fraction: float, duration_bins: int, seed: int
) -> np.ndarray:
    """Outage-style mask: whole time windows of randomly chosen cells zeroed.

    Picks floor(cell_fraction * M1 * M2) distinct (i, j) pairs and zeros one
    contiguous window of ``duration_bins`` per pair.  Window starts are drawn
    uniformly from the positions where the window fits, so a duration of T
    blanks the whole fiber.
    """
    m1, m2, horizon = dims
    if not 0.0 <= cell_fraction < 1.0:
        raise ValueError(f"cell_fraction must be in [0, 1), got {cell_fraction}")
    if not 1 <= duration_bins <= horizon:
        raise ValueError(f"duration_bins must be in [1, {horizon}], got {duration_bins}")
    rng = np.random.default_rng(seed)
    w = np.ones(dims)
    n_cells = int(cell_fraction * m1 * m2)
    if n_cells == 0:
        return w
    chosen = rng.choice(m1 * m2, size=n_cells, replace=False)
    starts = rng.integers(0, horizon - duration_bins + 1, size=n_cells)
    for flat, start in zip(chosen, starts):
        i, j = divmod(int(flat), m2)
        w[i, j, int(start) : int(start) + duration_bins] = 0.0
    return w


def relative_error(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Squared Frobenius-norm ratio ||x - x_hat||^2 / ||x||^2."""
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    denom = float(np.sum(x * x))
    if denom == 0.0:
        raise ValueError("reference tensor is identically zero")
    return float(np.sum((x - x_hat) ** 2)) / denom


def sparsity_log(x: np.ndarray) -> float:
    """-sum(log(1 + x_i^2)); more negative means more nonzero mass."""
    x = np.asarray(x, dtype=float)
    return float(-np.sum(np.log1p(x * x)))
