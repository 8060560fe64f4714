"""Synthetic check-in data in the raw TSV format.

Generates a clustered point cloud over the Los Angeles study box: a handful
of dense hotspots (dense enough that their grid cells clear the default
break-even user count) on top of a uniform background, with a few users
outside the box to exercise filtering and multiple check-ins per user to
exercise the one-per-user sampling.  Everything is driven by a single seed,
so the emitted file bytes are reproducible.

This exists because the real check-in corpus is large and externally hosted;
the generator gives demos and tests a realistic, self-contained stand-in
that flows through the exact same ingestion path.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np

from .geo import EARTH_RADIUS_M
from .ingest import LA_BOX, Dataset, LatLongBox, filter_and_sample, parse_checkins

__all__ = ["HOTSPOTS", "synthetic_checkin_lines", "write_synthetic_checkins", "synthetic_dataset"]

#: Hotspot mixture in local meters: (center_x, center_y, sigma, users).
#: The first five sit on cell centers of the default 5 km grid and are dense
#: enough to make those cells worth opening; the last two are decoys spread
#: over several cells.
HOTSPOTS = (
    (-12_500.0, 2_500.0, 1_200.0, 760),
    (2_500.0, -2_500.0, 1_500.0, 700),
    (7_500.0, 12_500.0, 1_000.0, 580),
    (-2_500.0, 17_500.0, 1_700.0, 620),
    (12_500.0, -17_500.0, 1_400.0, 540),
    (-17_500.0, -22_500.0, 2_500.0, 550),
    (800.0, 28_200.0, 2_000.0, 450),
)

_DEG = math.pi / 180.0


def _local_to_latlong(x: float, y: float, box: LatLongBox) -> tuple[float, float]:
    ref = box.midpoint
    lat = ref.lat + y / (EARTH_RADIUS_M * _DEG)
    long = ref.long + x / (EARTH_RADIUS_M * math.cos(ref.lat * _DEG) * _DEG)
    return lat, long


def synthetic_checkin_lines(
    n_users: int = 5827,
    seed: int = 7,
    *,
    box: LatLongBox = LA_BOX,
    outside_users: int = 120,
    max_checkins: int = 4,
) -> list[str]:
    """Raw check-in lines (tab-separated, newline-terminated) for a synthetic
    population of `n_users` inside the box plus `outside_users` beyond it."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x53594E]))

    # True spots in local meters, clipped safely inside the box so the
    # converted coordinates always survive the lat/long filter.
    spots: list[tuple[float, float]] = []
    for cx, cy, sig, count in HOTSPOTS:
        pts = rng.normal((cx, cy), sig, size=(count, 2))
        spots.extend((float(px), float(py)) for px, py in pts)
    n_background = n_users - len(spots)
    if n_background < 0:
        raise ValueError("n_users smaller than the hotspot population")
    bg = rng.uniform((-24_650.0, -35_450.0), (24_650.0, 35_450.0), size=(n_background, 2))
    spots.extend((float(px), float(py)) for px, py in bg)
    # Clip spots so that even after per-check-in jitter (capped at 150 m) the
    # converted coordinates stay inside the exact lat/long box.
    spots = [
        (min(max(px, -24_650.0), 24_650.0), min(max(py, -35_450.0), 35_450.0))
        for px, py in spots
    ]
    rng.shuffle(spots)  # decorrelate hotspot membership from user id

    # Out-of-box users: pushed past a random side of the box.
    lat_pad = 0.05 + 0.3 * rng.random(outside_users)
    long_pad = 0.05 + 0.3 * rng.random(outside_users)
    sides = rng.integers(0, 4, size=outside_users)

    lines: list[str] = []
    location_id = 100_000
    uid = 11
    out_iter = 0
    labels = ["in"] * len(spots) + ["out"] * outside_users
    rng.shuffle(labels)
    spot_iter = iter(spots)
    for label in labels:
        if label == "in":
            px, py = next(spot_iter)
            base_lat, base_long = _local_to_latlong(px, py, box)
        else:
            k = out_iter
            out_iter += 1
            if sides[k] == 0:
                base_lat, base_long = box.north + lat_pad[k], box.west + long_pad[k]
            elif sides[k] == 1:
                base_lat, base_long = box.south - lat_pad[k], box.east - long_pad[k]
            elif sides[k] == 2:
                base_lat, base_long = box.south + lat_pad[k] * 0.5, box.west - long_pad[k]
            else:
                base_lat, base_long = box.north - lat_pad[k] * 0.5, box.east + long_pad[k]
        n_checkins = int(rng.integers(1, max_checkins + 1))
        for _ in range(n_checkins):
            jitter = rng.normal(0.0, 60.0, size=2)
            if label == "in":
                jx = min(max(jitter[0], -150.0), 150.0)
                jy = min(max(jitter[1], -150.0), 150.0)
                lat, long = _local_to_latlong(px + jx, py + jy, box)
            else:
                lat, long = base_lat, base_long
            hour = int(rng.integers(0, 14_000))
            ts = f"2009-02-{1 + hour % 28:02d}T{hour % 24:02d}:{hour % 60:02d}:{(hour * 7) % 60:02d}Z"
            lines.append(f"{uid}\t{ts}\t{lat:.10f}\t{long:.10f}\t{location_id}\n")
            location_id += 1
        uid += int(rng.integers(1, 4))
    return lines


def write_synthetic_checkins(path: str | Path, **kwargs) -> int:
    """Write a synthetic raw check-in file; returns the number of lines."""
    lines = synthetic_checkin_lines(**kwargs)
    Path(path).write_text("".join(lines), encoding="utf-8")
    return len(lines)


def synthetic_dataset(
    n_users: int = 5827, seed: int = 7, sample_seed: int = 11
) -> Dataset:
    """Synthetic Dataset via the full ingestion pipeline (parse, filter,
    one-per-user sample, convert)."""
    lines = synthetic_checkin_lines(n_users=n_users, seed=seed)
    result = parse_checkins(io.StringIO("".join(lines)))
    dataset = filter_and_sample(result.records, LA_BOX, sample_seed)
    dataset.provenance["source"] = f"synthetic(seed={seed})"
    dataset.provenance["malformed"] = result.malformed
    return dataset
