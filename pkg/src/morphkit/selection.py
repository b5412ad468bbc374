"""Geometric thinning of control-point sets.

:func:`select` walks concentric annuli around a first point, repeatedly
picking a candidate from the ring just outside the influence ball of the
last pick and knocking out everything an influence ball covers. The
result is a subset where selected points are pairwise at least R apart
(separation) while every candidate stays within R of some selected point
(covering). Shrinking R below the minimum candidate spacing therefore
returns the whole candidate set.

:func:`select_multi` runs one selection per named boundary region with a
per-region radius; :func:`enrich` unions in whole feature groups (edge
curves and the like) afterwards. :func:`select_random` and
:func:`random_baseline_stats` support comparing against same-cardinality
random subsets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSampleError

__all__ = [
    "RegionParams",
    "SelectionParams",
    "SelectionResult",
    "BaselineStats",
    "select",
    "select_multi",
    "enrich",
    "select_random",
    "random_baseline_stats",
    "write_selection",
    "read_selection",
]

STRATEGIES = ("random", "centroid_nearest", "farthest_point")


@dataclass(frozen=True)
class RegionParams:
    """One selection region: the group to draw candidates from and its radius."""

    group: str
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class SelectionParams:
    """Parameters for a multi-region selection.

    a scales the annulus thickness (a * R), b the outer radius of the
    ring candidates are picked from (b * R); seed feeds the random
    strategy; seed_points optionally pins the first pick per region.
    """

    regions: tuple
    a: float = 0.8
    b: float = 1.3
    strategy: str = "random"
    seed: int = 0
    seed_points: dict = field(default_factory=dict)

    def __post_init__(self):
        regions = tuple(r if isinstance(r, RegionParams) else RegionParams(*r)
                        for r in self.regions)
        object.__setattr__(self, "regions", regions)
        if len({r.group for r in regions}) != len(regions):
            raise ValueError("regions must name distinct groups")
        if not 0 < self.a < 1:
            raise ValueError(f"a must lie in (0, 1), got {self.a}")
        if not self.b > 1:
            raise ValueError(f"b must exceed 1, got {self.b}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a selection run.

    Attributes:
        selected: sorted unique node ids.
        order: ids in the order they were picked.
        trace: one (node id, candidate-pool size at pick time) pair per
            pick, for debugging.
        annulus_count: number of annuli built (single-region runs).
        per_region: group name -> single-region SelectionResult, for
            multi-region runs.
    """

    selected: np.ndarray
    order: tuple
    trace: tuple
    annulus_count: int | None = None
    per_region: dict | None = None

    def __post_init__(self):
        sel = np.array(np.atleast_1d(self.selected), dtype=np.int64, copy=True)
        sel.setflags(write=False)
        object.__setattr__(self, "selected", sel)
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        object.__setattr__(self, "trace",
                           tuple((int(i), int(s)) for i, s in self.trace))

    @property
    def cardinality(self):
        return int(self.selected.size)


def _pick_first(coords, strategy, rng, candidate_ids, seed_point):
    if seed_point is not None:
        where = np.nonzero(candidate_ids == seed_point)[0]
        if where.size == 0:
            raise ValueError(f"seed point {seed_point} is not a candidate")
        return int(where[0])
    if strategy == "random":
        return int(rng.integers(0, len(coords)))
    centroid = coords.mean(axis=0)
    dist = np.linalg.norm(coords - centroid, axis=1)
    if strategy == "centroid_nearest":
        return int(dist.argmin())
    return int(dist.argmax())  # farthest_point: start far out


def _pick_from(beta_positions, coords, strategy, rng, min_dist_to_selected):
    # beta_positions is sorted, so argmin/argmax tie-break to lowest index
    if strategy == "random":
        return int(rng.choice(beta_positions))
    pts = coords[beta_positions]
    if strategy == "centroid_nearest":
        centroid = pts.mean(axis=0)
        local = np.linalg.norm(pts - centroid, axis=1)
        return int(beta_positions[local.argmin()])
    return int(beta_positions[min_dist_to_selected[beta_positions].argmax()])


def select(mesh, candidates, radius, a=0.8, b=1.3, strategy="random",
           seed=0, seed_point=None):
    """Single-region selection over ``candidates`` (node ids) of ``mesh``.

    The first point comes from ``seed_point`` when given, otherwise from
    the strategy (seeded RNG for "random"). Annuli of thickness a*R are
    laid out from radius R up to the farthest candidate; each subsequent
    pick is drawn from the current annulus restricted to distances
    (R, b*R] from the previous pick, every pick removes the closed ball
    of radius R around itself, and an exhausted ring hands over to the
    next one.
    """
    candidates = np.atleast_1d(np.asarray(candidates, dtype=np.int64))
    if candidates.size == 0:
        raise ValueError("candidate set is empty")
    if np.unique(candidates).size != candidates.size:
        raise ValueError("candidate ids contain duplicates")
    if candidates.min() < 0 or candidates.max() >= mesh.node_count:
        raise ValueError("candidate ids out of range")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if not 0 < a < 1:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    if not b > 1:
        raise ValueError(f"b must exceed 1, got {b}")
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")

    candidates = np.sort(candidates)
    coords = mesh.nodes[candidates]
    nc = candidates.size
    rng = np.random.default_rng(seed)

    first = _pick_first(coords, strategy, rng, candidates, seed_point)
    order = [int(candidates[first])]
    trace = [(order[0], nc)]

    d_first = np.linalg.norm(coords - coords[first], axis=1)
    r_omega = float(d_first.max())

    # annuli (R + (j-1)aR, R + j*aR], j = 1..n; the last ring may reach
    # past r_omega so every candidate lands in one
    n_annuli = 0
    while radius + n_annuli * (a * radius) <= r_omega:
        n_annuli += 1

    ring = np.ceil(np.maximum(d_first - radius, 0.0) / (a * radius)).astype(np.int64)
    np.minimum(ring, max(n_annuli, 1), out=ring)  # clip float spill at the rim

    alive = d_first > radius  # closed influence ball of the first pick
    alive[first] = False
    min_dist = d_first.copy()  # running min distance to the selected set

    if n_annuli == 0:
        sel = np.array(sorted(order), dtype=np.int64)
        return SelectionResult(sel, order, trace, annulus_count=0)

    m = 1
    d_last = d_first
    beta = alive & (ring == m) & (d_last > radius) & (d_last <= b * radius)
    while m <= n_annuli:
        while beta.any():
            beta_positions = np.nonzero(beta)[0]
            pick = _pick_from(beta_positions, coords, strategy, rng, min_dist)
            order.append(int(candidates[pick]))
            trace.append((order[-1], int(beta_positions.size)))
            d_last = np.linalg.norm(coords - coords[pick], axis=1)
            alive &= d_last > radius  # closed ball knockout, removes the pick too
            np.minimum(min_dist, d_last, out=min_dist)
            beta = alive & (ring == m) & (d_last > radius) & (d_last <= b * radius)
        if not (alive & (ring == m)).any():
            m += 1
            beta = alive & (ring == m) & (d_last > radius) & (d_last <= b * radius)
        else:
            # ring m still holds points unreachable from the last pick
            beta = alive & (ring == m)

    sel = np.array(sorted(order), dtype=np.int64)
    return SelectionResult(sel, order, trace, annulus_count=n_annuli)


def select_multi(mesh, params):
    """One selection per region, unioned.

    Regions must be pairwise disjoint node groups; each region r gets the
    seed ``params.seed + r`` so runs stay deterministic yet independent.
    """
    if not params.regions:
        raise ValueError("no regions given")
    seen = {}
    for region in params.regions:
        ids = mesh.group(region.group)
        if ids.size == 0:
            raise ValueError(f"region group {region.group!r} is empty")
        for other, other_ids in seen.items():
            if np.intersect1d(ids, other_ids).size:
                raise ValueError(
                    f"region groups {other!r} and {region.group!r} overlap")
        seen[region.group] = ids

    per_region = {}
    order = []
    trace = []
    for r, region in enumerate(params.regions):
        result = select(mesh, seen[region.group], region.radius,
                        a=params.a, b=params.b, strategy=params.strategy,
                        seed=params.seed + r,
                        seed_point=params.seed_points.get(region.group))
        per_region[region.group] = result
        order.extend(result.order)
        trace.extend(result.trace)
    selected = np.unique(np.concatenate([res.selected for res in per_region.values()]))
    return SelectionResult(selected, order, trace, per_region=per_region)


def enrich(selected, mesh, group_names):
    """Union ``selected`` with every node of the named groups, sorted."""
    parts = [np.atleast_1d(np.asarray(selected, dtype=np.int64))]
    for name in group_names:
        parts.append(mesh.group(name))
    return np.unique(np.concatenate(parts))


def select_random(candidates, k, seed):
    """Uniform sample of k distinct candidates, sorted."""
    candidates = np.atleast_1d(np.asarray(candidates, dtype=np.int64))
    if not 1 <= k <= candidates.size:
        raise ValueError(f"k must lie in [1, {candidates.size}], got {k}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(candidates, size=int(k), replace=False))


@dataclass(frozen=True)
class BaselineStats:
    """Spread of random-draw errors around their mean.

    delta_min / delta_max are the standardized deviations of the best and
    worst draw: (extreme - mean) / std.
    """

    mean: float
    std: float
    delta_min: float
    delta_max: float


def random_baseline_stats(errors):
    """Mean, sample standard deviation, and standardized extremes."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.ndim != 1 or errors.size < 2:
        raise ValueError("need at least two error samples")
    mean = float(errors.mean())
    std = float(errors.std(ddof=1))
    if std == 0.0:
        raise DegenerateSampleError("all draws have identical error")
    return BaselineStats(mean, std,
                         (float(errors.min()) - mean) / std,
                         (float(errors.max()) - mean) / std)


# ---------------------------------------------------------------------------
# JSON persistence

def write_selection(result, params, path):
    """Write a selection result plus the parameters that produced it."""
    doc = {
        "selected": result.selected.tolist(),
        "params": {
            "regions": [{"group": r.group, "radius": r.radius}
                        for r in params.regions],
            "a": params.a,
            "b": params.b,
            "strategy": params.strategy,
            "seed": params.seed,
        },
        "trace": [list(entry) for entry in result.trace],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_selection(path):
    """Selected ids and parameter echo from :func:`write_selection` output."""
    with open(path) as fh:
        doc = json.load(fh)
    for key in ("selected", "params", "trace"):
        if key not in doc:
            raise ValueError(f"{path}: missing key {key!r}")
    return np.asarray(doc["selected"], dtype=np.int64), doc["params"]
