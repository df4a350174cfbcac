"""Content demand: popularity ingestion, cache placement, user grouping, latency.

The content library is either ingested from a Movielens-style ratings dump
(double-colon-delimited text plus a ZIP geocode table) or synthesized from a
power-law popularity profile.  Cache placement supports most-popular, uniform,
and random policies over file fractions.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT_KM_S


@dataclass(frozen=True)
class ContentLibrary:
    """File catalogue with sizes in bits and a normalized popularity vector."""

    file_ids: tuple
    sizes_bits: np.ndarray
    popularity: np.ndarray

    def __post_init__(self):
        sizes = np.asarray(self.sizes_bits, dtype=float)
        pop = np.asarray(self.popularity, dtype=float)
        object.__setattr__(self, "sizes_bits", sizes)
        object.__setattr__(self, "popularity", pop)
        if len(self.file_ids) != sizes.size or sizes.size != pop.size:
            raise ValueError("library fields must have equal length")
        if np.any(sizes <= 0):
            raise ValueError("file sizes must be positive")
        if abs(float(pop.sum()) - 1.0) > 1e-9 or np.any(pop < 0):
            raise ValueError("popularity must be a probability vector")

    @property
    def n_files(self) -> int:
        return len(self.file_ids)

    @property
    def total_bits(self) -> float:
        return float(self.sizes_bits.sum())

    def index_of(self, file_id) -> int:
        return self.file_ids.index(file_id)


@dataclass(frozen=True)
class CacheState:
    """Cached fraction per file under a capacity budget in bits."""

    capacity_bits: float
    fractions: np.ndarray

    def __post_init__(self):
        frac = np.asarray(self.fractions, dtype=float)
        object.__setattr__(self, "fractions", frac)
        if np.any(frac < -1e-12) or np.any(frac > 1.0 + 1e-12):
            raise ValueError("cache fractions must lie in [0, 1]")

    def used_bits(self, library: ContentLibrary) -> float:
        return float(np.dot(self.fractions, library.sizes_bits))


@dataclass
class MulticastGroup:
    """Users of one beam requesting the same file, scheduled inside one AUG."""

    file_id: object
    users: list
    aug: int = -1


@dataclass
class GroupingPlan:
    """Per-beam multicast groups partitioned into associate user groups (AUGs)."""

    groups_per_beam: dict = field(default_factory=dict)   # beam -> [MulticastGroup]
    streams_per_beam: int = 4

    def augs(self, beam) -> list:
        """AUG index -> list of groups, for one beam."""
        groups = self.groups_per_beam[beam]
        n_augs = max((g.aug for g in groups), default=-1) + 1
        out = [[] for _ in range(n_augs)]
        for g in groups:
            out[g.aug].append(g)
        return out

    def all_groups(self):
        for beam in sorted(self.groups_per_beam):
            for g in self.groups_per_beam[beam]:
                yield beam, g


@dataclass(frozen=True)
class LatencyParams:
    """Backhaul and propagation constants entering the delivery-latency bound."""

    backhaul_rate_bps: float
    gateway_slant_km: float
    light_speed_km_s: float = SPEED_OF_LIGHT_KM_S

    def __post_init__(self):
        if self.backhaul_rate_bps <= 0 or self.gateway_slant_km <= 0:
            raise ValueError("latency parameters must be positive")

    def backhaul_delay(self, size_bits: float, cached_fraction: float) -> float:
        """Uncached-part transfer plus gateway-to-satellite propagation."""
        return (1.0 - cached_fraction) * size_bits / self.backhaul_rate_bps + (
            self.gateway_slant_km / self.light_speed_km_s
        )


def synth_popularity(n_files: int, zipf_exponent: float, rng: np.random.Generator,
                     size_range_gbit=(0.3, 1.8)) -> ContentLibrary:
    """Synthetic library: rank-power-law popularity, uniform random sizes."""
    if n_files < 1:
        raise ValueError("need at least one file")
    if zipf_exponent < 0:
        raise ValueError("exponent must be nonnegative")
    ranks = np.arange(1, n_files + 1, dtype=float)
    weights = ranks ** (-zipf_exponent)
    sizes = rng.uniform(size_range_gbit[0], size_range_gbit[1], size=n_files) * 1e9
    return ContentLibrary(tuple(range(1, n_files + 1)), sizes, weights / weights.sum())


def _parse_double_colon(path, n_fields):
    with open(path, encoding="latin-1") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split("::")
            if len(parts) != n_fields:
                raise ValueError(f"{path}: expected {n_fields} '::' fields, got {len(parts)}")
            yield parts


def ingest_movielens(
    ratings_path,
    users_path,
    zip_geo_path,
    region_filter,
    top_n: int,
    size_rng: np.random.Generator,
    size_range_gbit=(0.3, 1.8),
):
    """Build a library and user positions from Movielens-format files.

    ``region_filter`` is (lat_min, lat_max, lon_min, lon_max) in degrees; users
    whose ZIP geocodes outside it (or not at all) are dropped.  Popularity is
    the normalized request count of the ``top_n`` most-requested movies among
    the kept users.  Returns (library, {user_id: (lat, lon)}, skipped_zip_count).
    """
    zip_to_lat_lon = {}
    with open(zip_geo_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            zip_to_lat_lon[row["zip"].strip()] = (float(row["lat"]), float(row["lon"]))

    lat_min, lat_max, lon_min, lon_max = region_filter
    positions = {}
    skipped = 0
    for user_id, _gender, _age, _occ, zipcode in _parse_double_colon(users_path, 5):
        key = zipcode.strip().split("-")[0]
        if key not in zip_to_lat_lon:
            skipped += 1
            continue
        lat, lon = zip_to_lat_lon[key]
        if lat_min <= lat <= lat_max and lon_min <= lon <= lon_max:
            positions[user_id] = (lat, lon)
    if skipped:
        warnings.warn(f"skipped {skipped} users with unmappable ZIP codes")
    if not positions:
        raise ValueError("region filter matched no users")

    counts = {}
    for user_id, movie_id, _rating, _ts in _parse_double_colon(ratings_path, 4):
        if user_id in positions:
            counts[movie_id] = counts.get(movie_id, 0) + 1
    if not counts:
        raise ValueError("no ratings from users in the region")

    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
    total = sum(c for _, c in ranked)
    file_ids = tuple(mid for mid, _ in ranked)
    popularity = np.array([c / total for _, c in ranked])
    sizes = size_rng.uniform(size_range_gbit[0], size_range_gbit[1], size=len(ranked)) * 1e9
    return ContentLibrary(file_ids, sizes, popularity), positions, skipped


def cache_place(policy: str, library: ContentLibrary, capacity_bits: float,
                rng: np.random.Generator) -> CacheState:
    """Place content under one of the generic policies: mpc, uc, or rc.

    mpc fills whole files in descending popularity; uc spreads the budget as an
    equal fraction of every file; rc picks whole files uniformly at random,
    skipping any that no longer fit.  The capacity budget is never exceeded.
    """
    if capacity_bits < 0:
        raise ValueError("capacity must be nonnegative")
    n = library.n_files
    fractions = np.zeros(n)
    if capacity_bits == 0:
        return CacheState(capacity_bits, fractions)
    if policy == "mpc":
        order = np.lexsort((np.arange(n), -library.popularity))
        remaining = capacity_bits
        for idx in order:
            if library.sizes_bits[idx] <= remaining:
                fractions[idx] = 1.0
                remaining -= library.sizes_bits[idx]
    elif policy == "uc":
        fractions[:] = min(1.0, capacity_bits / library.total_bits)
    elif policy == "rc":
        remaining = capacity_bits
        for idx in rng.permutation(n):
            if library.sizes_bits[idx] <= remaining:
                fractions[idx] = 1.0
                remaining -= library.sizes_bits[idx]
    else:
        raise ValueError(f"unknown cache policy {policy!r}; expected mpc, uc, or rc")
    return CacheState(capacity_bits, fractions)


def build_grouping(requests_per_beam: dict, streams: int, popularity=None) -> GroupingPlan:
    """Partition each beam's users into per-file groups and pack groups into AUGs.

    ``requests_per_beam`` maps beam -> [(user, file_id)].  Groups are packed in
    descending popularity (file id as the deterministic tiebreak), ``streams``
    groups per AUG, so at most ``streams`` multicast streams share a bandwidth
    slice.
    """
    if streams < 1:
        raise ValueError("need at least one spatial stream")
    popularity = popularity or {}
    plan = GroupingPlan(streams_per_beam=streams)
    for beam, requests in requests_per_beam.items():
        by_file = {}
        for user, file_id in requests:
            by_file.setdefault(file_id, []).append(user)
        ordered = sorted(by_file, key=lambda f: (-popularity.get(f, 0.0), f))
        groups = []
        for rank, file_id in enumerate(ordered):
            groups.append(MulticastGroup(file_id, by_file[file_id], aug=rank // streams))
        plan.groups_per_beam[beam] = groups
    return plan


def delivery_latency(rates_bps: dict, plan: GroupingPlan, library: ContentLibrary,
                     cache: CacheState, params: LatencyParams, slant_km: dict) -> float:
    """Worst-case delivery time over all groups: max of air-link and backhaul legs.

    ``rates_bps`` and ``slant_km`` are keyed by (beam, file_id).  A zero rate
    yields +inf rather than raising, so infeasible plans surface in reports.
    """
    worst = 0.0
    for beam, group in plan.all_groups():
        key = (beam, group.file_id)
        q = library.sizes_bits[library.index_of(group.file_id)]
        mu = float(cache.fractions[library.index_of(group.file_id)])
        rate = rates_bps[key]
        if rate <= 0:
            air = math.inf
        else:
            air = q / rate + slant_km[key] / params.light_speed_km_s
        worst = max(worst, air, params.backhaul_delay(q, mu))
    return worst
