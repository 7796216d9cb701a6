"""Region feature vectors from POI data and the urban similarity matrix.

Each region gets a diversity profile [richness, shannon, concentration,
convenience] computed from the categories of the POIs falling in its grid
cell; the urban matrix holds the pairwise cosine similarities of those
profiles.  Regions without POIs get the zero vector and similarity 0 to
everything (themselves included), which keeps the cosine well defined and
removes urban coupling where the POI data says nothing.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .traffic_pipeline import GridSpec, assign_region

DEFAULT_TRANSPORT_CATEGORIES = frozenset(
    {"transit", "bus_stop", "subway", "train_station", "parking", "taxi_stand"}
)


@dataclass(frozen=True)
class PoiRecord:
    latitude: float
    longitude: float
    category: str

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")
        if not self.category:
            raise ValueError("category must be non-empty")


@dataclass(frozen=True)
class CategoryDistribution:
    """Proportions of the categories present (zero-count ones excluded)."""

    proportions: np.ndarray
    s: int

    def __post_init__(self):
        p = np.asarray(self.proportions, dtype=float)
        object.__setattr__(self, "proportions", p)
        if p.size != self.s:
            raise ValueError("s must equal the number of proportions")
        if np.any(p <= 0.0):
            raise ValueError("all proportions must be positive")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValueError("proportions must sum to 1")


def category_distribution(pois) -> CategoryDistribution | None:
    """Category proportions of a region's POIs; None for an empty region."""
    pois = list(pois)
    if not pois:
        return None
    counts = Counter(p.category for p in pois)
    total = sum(counts.values())
    props = np.array([counts[c] / total for c in sorted(counts)])
    return CategoryDistribution(props, len(counts))


def hill_number(dist: CategoryDistribution, q: int) -> float:
    """Diversity of order q: 0 = richness, 1 = exp-Shannon, 2 = inverse Simpson.

    The q = 1 limit is evaluated in base 2 (exp2 of the base-2 Shannon
    entropy), which is exact for uniform distributions over power-of-two
    category counts.
    """
    p = dist.proportions
    if q == 0:
        return float(dist.s)
    if q == 1:
        return float(np.exp2(-np.sum(p * np.log2(p))))
    if q == 2:
        return float(1.0 / np.sum(p * p))
    raise ValueError(f"q must be 0, 1 or 2, got {q!r}")


def convenience(pois, transport_categories) -> float | None:
    """Fraction of POIs in a transport category; None for an empty region."""
    pois = list(pois)
    if not pois:
        return None
    transport = sum(1 for p in pois if p.category in transport_categories)
    return transport / len(pois)


@dataclass(frozen=True)
class UrbanFeatureVector:
    richness: float
    shannon: float
    concentration: float
    convenience: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.richness, self.shannon, self.concentration, self.convenience]
        )

    @property
    def is_empty(self) -> bool:
        return not np.any(self.as_array())


EMPTY_FEATURE_VECTOR = UrbanFeatureVector(0.0, 0.0, 0.0, 0.0)


def feature_vector(pois, transport_categories=DEFAULT_TRANSPORT_CATEGORIES) -> UrbanFeatureVector:
    pois = list(pois)
    dist = category_distribution(pois)
    if dist is None:
        return EMPTY_FEATURE_VECTOR
    return UrbanFeatureVector(
        richness=hill_number(dist, 0),
        shannon=hill_number(dist, 1),
        concentration=hill_number(dist, 2),
        convenience=convenience(pois, transport_categories),
    )


def region_feature_vectors(
    pois, grid: GridSpec, transport_categories=DEFAULT_TRANSPORT_CATEGORIES
) -> list[UrbanFeatureVector]:
    """Feature vector per grid region; POIs outside the box are ignored."""
    buckets: dict[int, list[PoiRecord]] = {}
    for poi in pois:
        region = assign_region(poi.latitude, poi.longitude, grid)
        if region is not None:
            buckets.setdefault(region, []).append(poi)
    return [
        feature_vector(buckets.get(r, ()), transport_categories)
        for r in range(grid.n_regions)
    ]


def urban_similarity_matrix(features) -> np.ndarray:
    """M x M cosine similarities; rows of empty regions are all zero."""
    rows = np.vstack([f.as_array() for f in features])
    norms = np.linalg.norm(rows, axis=1)
    nonzero = norms > 0.0
    scaled = np.zeros_like(rows)
    scaled[nonzero] = rows[nonzero] / norms[nonzero, None]
    u = scaled @ scaled.T
    u = np.clip(0.5 * (u + u.T), -1.0, 1.0)
    u[np.arange(len(features)), np.arange(len(features))] = np.where(nonzero, 1.0, 0.0)
    return u
