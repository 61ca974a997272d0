"""Municipality registry, great-circle distances and r-independent groupings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

EARTH_RADIUS_KM = 6371.0088
DEFAULT_R_KM = 50.0

SEISMIC_TYPOLOGIES = ("RC.gl", "RC.sl", "A.gl", "A.sl", "M")
FLOOD_TYPOLOGIES = ("S1", "S2", "S3plus")
TYPOLOGIES = SEISMIC_TYPOLOGIES + FLOOD_TYPOLOGIES
CLUSTERS = ("A_P1", "A_P2", "none")


@dataclass(frozen=True)
class Municipality:
    id: str
    name: str
    centroid_lat: float
    centroid_lon: float
    cluster: str = "none"
    p2_index: float = 0.0
    p3_extent: float = 0.0
    amplification: float = 1.0
    exposures: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_coords(self.centroid_lat, self.centroid_lon)
        for name in ("p2_index", "p3_extent"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InputError(f"municipality {self.id}: {name}={v} outside [0, 1]")
        if not self.amplification >= 0.0:
            raise InputError(f"municipality {self.id}: negative amplification")
        if self.cluster not in CLUSTERS:
            raise InputError(f"municipality {self.id}: unknown cluster {self.cluster!r}")
        for key, value in self.exposures.items():
            if key not in TYPOLOGIES:
                raise InputError(f"municipality {self.id}: unknown typology {key!r}")
            if not value >= 0.0:
                raise InputError(f"municipality {self.id}: negative exposure for {key}")

    def exposure(self, typology: str) -> float:
        return float(self.exposures.get(typology, 0.0))


@dataclass(frozen=True)
class GroupingSample:
    seed: int
    groups: tuple  # tuple of tuples of municipality ids
    n_total: int

    @property
    def weights(self) -> np.ndarray:
        return np.array([len(g) for g in self.groups], dtype=float) / self.n_total

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(g) for g in self.groups], dtype=int)

    def as_lists(self) -> list:
        return [list(g) for g in self.groups]


def _check_coords(lat, lon):
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        raise InputError(f"coordinates out of range: lat={lat}, lon={lon}")


def haversine_km(lat1, lon1, lat2, lon2):
    """Vectorised haversine distance in kilometres."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlmb = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def distance_km(a: Municipality, b: Municipality) -> float:
    _check_coords(a.centroid_lat, a.centroid_lon)
    _check_coords(b.centroid_lat, b.centroid_lon)
    return float(haversine_km(a.centroid_lat, a.centroid_lon, b.centroid_lat, b.centroid_lon))


def distance_matrix(munis) -> np.ndarray:
    lat = np.array([m.centroid_lat for m in munis])
    lon = np.array([m.centroid_lon for m in munis])
    return haversine_km(lat[:, None], lon[:, None], lat[None, :], lon[None, :])


def _color(conflict: np.ndarray, order: np.ndarray) -> list:
    n = conflict.shape[0]
    colour = np.full(n, -1)
    classes: list[list[int]] = []
    for v in order:
        taken = set(colour[conflict[v]].tolist())
        c = 0
        while c in taken:
            c += 1
        colour[v] = c
        if c == len(classes):
            classes.append([])
        classes[c].append(int(v))
    return classes


def _grouping(munis, conflict, seed) -> GroupingSample:
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(munis))
    classes = _color(conflict, order)
    ids = [m.id for m in munis]
    groups = tuple(tuple(ids[i] for i in sorted(cls)) for cls in classes)
    return GroupingSample(seed=int(seed), groups=groups, n_total=len(munis))


def _conflict_graph(munis, r):
    if not munis:
        raise InputError("grouping needs at least one municipality")
    if not r > 0:
        raise InputError(f"r must be positive, got {r}")
    conflict = distance_matrix(munis) < r
    np.fill_diagonal(conflict, False)
    return conflict


def build_grouping(munis, r: float = DEFAULT_R_KM, seed: int = 0) -> GroupingSample:
    """Greedy colouring of the graph joining municipalities closer than ``r`` km."""
    munis = list(munis)
    return _grouping(munis, _conflict_graph(munis, r), seed)


def derive_seeds(base_seed: int, n: int) -> list:
    ss = np.random.SeedSequence(base_seed)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in ss.spawn(n)]


def sample_groupings(munis, r: float = DEFAULT_R_KM, n_samples: int = 100, base_seed: int = 0) -> list:
    if n_samples < 1:
        raise InputError("n_samples must be at least 1")
    munis = list(munis)
    conflict = _conflict_graph(munis, r)
    return [_grouping(munis, conflict, s) for s in derive_seeds(base_seed, n_samples)]


def check_grouping(munis, grouping: GroupingSample, r: float) -> float:
    """Smallest within-group distance (inf when every group is a singleton)."""
    pos = {m.id: m for m in munis}
    worst = np.inf
    for g in grouping.groups:
        if len(g) < 2:
            continue
        d = distance_matrix([pos[i] for i in g])
        np.fill_diagonal(d, np.inf)
        worst = min(worst, float(d.min()))
    return worst
