"""Merge georeferenced detections of the same object seen in overlapping frames."""
from __future__ import annotations

import math
from collections import defaultdict
from typing import Sequence

from ..types import DataError
from .georef import GeoPoint


def dedup_clusters(points: Sequence[GeoPoint], radius_m: float) -> list[list[int]]:
    """Greedy clustering by descending confidence (ties: input order).

    Each unclaimed seed absorbs every unclaimed point within ``radius_m`` of
    it. Returns member indices per cluster, seed first.
    """
    if not radius_m > 0:
        raise DataError(f"dedup radius must be positive, got {radius_m}")
    grid: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i, p in enumerate(points):
        grid[(math.floor(p.east_m / radius_m), math.floor(p.north_m / radius_m))].append(i)
    order = sorted(range(len(points)), key=lambda i: (-points[i].confidence, i))
    claimed = [False] * len(points)
    r2 = radius_m * radius_m
    clusters = []
    for i in order:
        if claimed[i]:
            continue
        seed = points[i]
        claimed[i] = True
        members = [i]
        gx, gy = math.floor(seed.east_m / radius_m), math.floor(seed.north_m / radius_m)
        for cx in (gx - 1, gx, gx + 1):
            for cy in (gy - 1, gy, gy + 1):
                for j in grid.get((cx, cy), ()):
                    if claimed[j]:
                        continue
                    de = points[j].east_m - seed.east_m
                    dn = points[j].north_m - seed.north_m
                    if de * de + dn * dn <= r2:
                        claimed[j] = True
                        members.append(j)
        members[1:] = sorted(members[1:])
        clusters.append(members)
    return clusters


def dedup_points(points: Sequence[GeoPoint], radius_m: float = 0.1) -> list[GeoPoint]:
    """One representative (the cluster seed) per cluster."""
    return [points[c[0]] for c in dedup_clusters(points, radius_m)]
