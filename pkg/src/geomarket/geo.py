"""Planar geometry for the simulation: coordinate conversion, square target
regions, evaluation grids, and Gaussian probability mass over rectangles.

All planar quantities are in meters.  Latitude/longitude pairs are converted
to a local Euclidean frame with a spherical-earth approximation around a
reference point; within a metro-scale bounding box the distortion is a few
tens of meters, far below the noise levels the marketplace trades in.

Every function here is pure and stateless, so the module is safe to use from
any number of concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

__all__ = [
    "EARTH_RADIUS_M",
    "LatLong",
    "GeoPoint",
    "Region",
    "BoundingBox",
    "latlong_to_local",
    "make_grid",
    "gaussian_prob_in_region",
    "distance_to_edges",
]

EARTH_RADIUS_M = 6_371_000.0

_SQRT2 = math.sqrt(2.0)
_DEG = math.pi / 180.0


class LatLong(NamedTuple):
    """Geographic coordinates in degrees (lat in [-90, 90], long in [-180, 180])."""

    lat: float
    long: float


class GeoPoint(NamedTuple):
    """Local planar coordinates: meters east (x) and north (y) of a reference."""

    x: float
    y: float


@dataclass(frozen=True, slots=True)
class Region:
    """Axis-aligned square target area.

    Membership is half-open on both axes: a point p lies in the region iff
    x_min <= p.x < x_min + side and y_min <= p.y < y_min + side, so that grid
    cells partition the plane and no point is ever double-counted.
    """

    x_min: float
    y_min: float
    side: float

    def __post_init__(self) -> None:
        if not self.side > 0:
            raise ValueError(f"region side must be positive, got {self.side}")

    @property
    def x_max(self) -> float:
        return self.x_min + self.side

    @property
    def y_max(self) -> float:
        return self.y_min + self.side

    @property
    def center(self) -> GeoPoint:
        return GeoPoint(self.x_min + 0.5 * self.side, self.y_min + 0.5 * self.side)

    @property
    def area(self) -> float:
        return self.side * self.side

    def contains(self, p: GeoPoint) -> bool:
        return (
            self.x_min <= p[0] < self.x_min + self.side
            and self.y_min <= p[1] < self.y_min + self.side
        )

    def expand(self, margin: float) -> "BoundingBox":
        """Bounding box obtained by padding the region by `margin` on every side."""
        return BoundingBox(
            self.x_min - margin,
            self.y_min - margin,
            self.x_max + margin,
            self.y_max + margin,
        )


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """Axis-aligned rectangle in local coordinates (meters)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("bounding box must have positive extent")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, p: GeoPoint) -> bool:
        return self.x_min <= p[0] <= self.x_max and self.y_min <= p[1] <= self.y_max


def latlong_to_local(
    p: LatLong, ref: LatLong, earth_radius: float = EARTH_RADIUS_M
) -> GeoPoint:
    """Convert geographic coordinates to meters east/north of `ref`.

    Spherical-earth approximation:

        x = R * cos(lat_ref) * (long - long_ref)
        y = R * (lat - lat_ref)

    with all angles in radians.  The mapping is affine in (lat, long) for a
    fixed reference, so midpoints and bounding boxes are preserved.
    """
    if earth_radius <= 0:
        raise ValueError("earth_radius must be positive")
    x = earth_radius * math.cos(ref.lat * _DEG) * (p.long - ref.long) * _DEG
    y = earth_radius * (p.lat - ref.lat) * _DEG
    return GeoPoint(x, y)


def make_grid(box: BoundingBox, side: float) -> list[Region]:
    """Tile `box` with side x side cells anchored at (x_min, y_min).

    Cells that would extend past the box are dropped (floor division), so the
    result has floor(width/side) * floor(height/side) regions.  Returns an
    empty list when the side exceeds either box dimension.  Order is
    row-major from the southwest corner, x varying fastest.
    """
    if not side > 0:
        raise ValueError("grid side must be positive")
    # Tiny relative slack so that boxes sized as exact multiples of `side`
    # are not truncated by binary rounding.
    nx = math.floor(box.width / side + 1e-9)
    ny = math.floor(box.height / side + 1e-9)
    regions = []
    for iy in range(ny):
        y0 = box.y_min + iy * side
        for ix in range(nx):
            regions.append(Region(box.x_min + ix * side, y0, side))
    return regions


def gaussian_prob_in_region(mean: GeoPoint, sigma: float, region: Region) -> float:
    """Probability mass of an isotropic normal N(mean, sigma^2 I) in `region`.

    Because the noise is isotropic and the region axis-aligned, the mass
    factorizes into a product of one-dimensional CDF differences per axis.
    With sigma = 0 the distribution degenerates to a point and the result is
    the half-open membership indicator.  The result is clamped to [0, 1].
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return 1.0 if region.contains(mean) else 0.0
    x, y = mean
    inv = 1.0 / (sigma * _SQRT2)
    lo_x = region.x_min
    lo_y = region.y_min
    side = region.side
    px = 0.5 * (math.erf((lo_x + side - x) * inv) - math.erf((lo_x - x) * inv))
    py = 0.5 * (math.erf((lo_y + side - y) * inv) - math.erf((lo_y - y) * inv))
    p = px * py
    if p < 0.0:
        return 0.0
    return p if p < 1.0 else 1.0


def distance_to_edges(
    p: GeoPoint, region: Region
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Signed distances from `p` to both region edges, per axis.

    Returns ((dx_low, dx_high), (dy_low, dy_high)) where dx_low = p.x - x_min
    and dx_high = x_max - p.x (similarly for y).  Both values are positive
    when the coordinate lies strictly inside the axis interval; a negative
    value is the distance past that edge.  This is the per-dimension geometry
    needed by terminal-belief tests.
    """
    dx_low = p[0] - region.x_min
    dx_high = region.x_min + region.side - p[0]
    dy_low = p[1] - region.y_min
    dy_high = region.y_min + region.side - p[1]
    return (dx_low, dx_high), (dy_low, dy_high)
