"""Check-in ingestion: parse raw TSV check-ins, filter to a lat/long
bounding box, keep one random check-in per user, and convert the survivors
to local Euclidean coordinates.

The raw format is five tab-separated fields per line:

    user_id <TAB> ISO-8601 time <TAB> latitude <TAB> longitude <TAB> location_id

Per-user sampling is keyed by (seed, user_id), so adding or removing one
user never changes which check-in another user contributes.  Datasets are
persisted as a small CSV snapshot plus a JSON sidecar recording provenance,
so experiments never re-touch the raw file.
"""

from __future__ import annotations

import csv
import gzip
import io
import json
import logging
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import IO, Iterable, NamedTuple

import numpy as np

from .geo import BoundingBox, GeoPoint, LatLong, latlong_to_local

__all__ = [
    "CheckinRecord",
    "ParseResult",
    "LatLongBox",
    "LA_BOX",
    "Dataset",
    "parse_checkins",
    "filter_and_sample",
    "save_snapshot",
    "load_snapshot",
    "open_checkin_file",
]

log = logging.getLogger(__name__)


class CheckinRecord(NamedTuple):
    user_id: int
    timestamp: datetime
    lat: float
    long: float
    location_id: int


class ParseResult(NamedTuple):
    """Parsed rows plus a tally of malformed (skipped) lines."""

    records: list[CheckinRecord]
    malformed: int


@dataclass(frozen=True, slots=True)
class LatLongBox:
    """Geographic bounding box in degrees; membership is inclusive."""

    south: float
    west: float
    north: float
    east: float

    def __post_init__(self) -> None:
        if not (self.south < self.north and self.west < self.east):
            raise ValueError("box corners out of order")

    @property
    def midpoint(self) -> LatLong:
        return LatLong(0.5 * (self.south + self.north), 0.5 * (self.west + self.east))

    def contains(self, lat: float, long: float) -> bool:
        return self.south <= lat <= self.north and self.west <= long <= self.east

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.south, self.west, self.north, self.east)


#: Los Angeles study area: southwest (33.699675, -118.684687) to
#: northeast (34.342324, -118.144458).
LA_BOX = LatLongBox(33.699675, -118.684687, 34.342324, -118.144458)


@dataclass(frozen=True, slots=True)
class Dataset:
    """One snapshot point per user in local coordinates, plus provenance.

    users is ascending by id; bbox_local is the exact conversion of the
    filter box corners; provenance carries
    {source, bbox, seed, count, malformed}.
    """

    users: list[tuple[int, GeoPoint]]
    bbox_local: BoundingBox
    provenance: dict


def parse_checkins(stream: Iterable[str]) -> ParseResult:
    """Parse tab-separated check-in lines, skipping and counting bad rows.

    A row is malformed if it does not have five fields, any numeric field
    fails to parse, the timestamp is not ISO-8601, or the coordinates fall
    outside valid lat/long ranges.  An unreadable stream raises.
    """
    records: list[CheckinRecord] = []
    malformed = 0
    for line in stream:
        line = line.rstrip("\n\r")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            malformed += 1
            continue
        try:
            uid = int(parts[0])
            ts = datetime.fromisoformat(parts[1].replace("Z", "+00:00"))
            lat = float(parts[2])
            long = float(parts[3])
            loc = int(parts[4])
        except ValueError:
            malformed += 1
            continue
        if not (-90.0 <= lat <= 90.0 and -180.0 <= long <= 180.0):
            malformed += 1
            continue
        records.append(CheckinRecord(uid, ts, lat, long, loc))
    if malformed:
        log.warning("skipped %d malformed check-in rows", malformed)
    return ParseResult(records, malformed)


def filter_and_sample(
    records: Iterable[CheckinRecord],
    box: LatLongBox = LA_BOX,
    seed: int = 0,
    earth_radius: float | None = None,
) -> Dataset:
    """Keep in-box check-ins, pick one per user, convert to local meters.

    The per-user pick uses a generator seeded by (seed, user_id); users with
    a single in-box check-in therefore contribute it regardless of seed.
    The conversion reference is the box midpoint.
    """
    from .geo import EARTH_RADIUS_M

    radius = EARTH_RADIUS_M if earth_radius is None else earth_radius
    by_user: dict[int, list[CheckinRecord]] = {}
    for rec in records:
        if box.contains(rec.lat, rec.long):
            by_user.setdefault(rec.user_id, []).append(rec)

    ref = box.midpoint
    users: list[tuple[int, GeoPoint]] = []
    for uid in sorted(by_user):
        group = by_user[uid]
        if len(group) == 1:
            chosen = group[0]
        else:
            rng = np.random.default_rng(np.random.SeedSequence([seed, uid]))
            chosen = group[int(rng.integers(len(group)))]
        users.append((uid, latlong_to_local(LatLong(chosen.lat, chosen.long), ref, radius)))

    sw = latlong_to_local(LatLong(box.south, box.west), ref, radius)
    ne = latlong_to_local(LatLong(box.north, box.east), ref, radius)
    return Dataset(
        users=users,
        bbox_local=BoundingBox(sw.x, sw.y, ne.x, ne.y),
        provenance={
            "source": None,
            "bbox": list(box.as_tuple()),
            "seed": seed,
            "count": len(users),
            "malformed": None,
        },
    )


def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".json")


def save_snapshot(dataset: Dataset, csv_path: str | Path) -> None:
    """Write the user table as CSV (6 decimal places) plus a JSON sidecar."""
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "x", "y"])
        for uid, point in dataset.users:
            writer.writerow([uid, f"{point.x:.6f}", f"{point.y:.6f}"])
    with open(_sidecar_path(csv_path), "w") as fh:
        json.dump(dataset.provenance, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_snapshot(csv_path: str | Path) -> Dataset:
    """Rebuild a Dataset from a snapshot CSV and its sidecar."""
    csv_path = Path(csv_path)
    with open(_sidecar_path(csv_path)) as fh:
        provenance = json.load(fh)
    box = LatLongBox(*provenance["bbox"])
    ref = box.midpoint
    sw = latlong_to_local(LatLong(box.south, box.west), ref)
    ne = latlong_to_local(LatLong(box.north, box.east), ref)
    users: list[tuple[int, GeoPoint]] = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            users.append((int(row["user_id"]), GeoPoint(float(row["x"]), float(row["y"]))))
    users.sort(key=lambda t: t[0])
    return Dataset(users=users, bbox_local=BoundingBox(sw.x, sw.y, ne.x, ne.y), provenance=provenance)


def open_checkin_file(path: str | Path) -> IO[str]:
    """Open a raw check-in file as text, transparently handling .gz."""
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, "r", encoding="utf-8")
