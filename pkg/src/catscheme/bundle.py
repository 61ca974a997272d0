"""CSV input bundle: schema, validation and atomic writing."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError
from .geo import CLUSTERS, FLOOD_TYPOLOGIES, SEISMIC_TYPOLOGIES, Municipality

MUNI_FILE = "municipalities.csv"
EXCEEDANCE_FILE = "exceedance.csv"
COUNTS_FILE = "flood_counts.csv"
DEPTHS_FILE = "depths.csv"
CLUSTERS_FILE = "flood_clusters.csv"

MUNI_COLUMNS = ["id", "name", "lat", "lon", "cluster", "p2", "p3_ext", "amplification",
                *SEISMIC_TYPOLOGIES, *FLOOD_TYPOLOGIES]
EXCEEDANCE_COLUMNS = ["municipality_id", "pga", "exceedance_prob"]
COUNTS_COLUMNS = ["year", "cluster", "n_events"]
DEPTHS_COLUMNS = ["event_id", "depth_m"]
CLUSTERS_COLUMNS = ["cluster", "mean_flooded_munis", "cluster_size"]


@dataclass
class Bundle:
    municipalities: list
    exceedance: dict  # municipality id -> list of (pga, probability)
    flood_counts: list = field(default_factory=list)  # (year, cluster, n_events)
    depths: list = field(default_factory=list)  # (event_id, depth_m)
    clusters: dict = field(default_factory=dict)  # cluster -> (mean_flooded, cluster_size)
    truth: dict = field(default_factory=dict)  # generator parameters, never written

    @property
    def has_flood(self) -> bool:
        return bool(self.flood_counts and self.depths and self.clusters)

    def missing_flood_parts(self) -> list:
        out = []
        if not self.flood_counts:
            out.append(COUNTS_FILE)
        if not self.depths:
            out.append(DEPTHS_FILE)
        if not self.clusters:
            out.append(CLUSTERS_FILE)
        return out


def fmt(x) -> str:
    """Shortest round-tripping text for floats, plain text otherwise."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_bundle(bundle: Bundle, out_dir):
    out = Path(out_dir)
    rows = []
    for m in bundle.municipalities:
        rows.append([m.id, m.name, m.centroid_lat, m.centroid_lon, m.cluster, m.p2_index,
                     m.p3_extent, m.amplification,
                     *[float(m.exposures.get(t, 0.0)) for t in SEISMIC_TYPOLOGIES + FLOOD_TYPOLOGIES]])
    atomic_write_text(out / MUNI_FILE, csv_text(MUNI_COLUMNS, rows))
    ex = [[mid, p, lam] for mid, pts in bundle.exceedance.items() for p, lam in pts]
    atomic_write_text(out / EXCEEDANCE_FILE, csv_text(EXCEEDANCE_COLUMNS, ex))
    if bundle.has_flood:
        atomic_write_text(out / COUNTS_FILE, csv_text(COUNTS_COLUMNS, bundle.flood_counts))
        atomic_write_text(out / DEPTHS_FILE, csv_text(DEPTHS_COLUMNS, bundle.depths))
        cl = [[k, v[0], v[1]] for k, v in sorted(bundle.clusters.items())]
        atomic_write_text(out / CLUSTERS_FILE, csv_text(CLUSTERS_COLUMNS, cl))


def _rows(path: Path, columns):
    """Yield (row_number, dict) with row numbers counted from the header line = 1."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path.name}: empty file, header required")
        missing = [c for c in columns if c not in header]
        if missing:
            raise InputError(f"{path.name}: missing columns {', '.join(missing)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path.name} row {lineno}: expected {len(header)} fields, got {len(row)}")
            yield lineno, dict(zip(header, row))


def _num(path, lineno, rec, key, kind=float):
    try:
        v = kind(rec[key])
    except (TypeError, ValueError):
        raise InputError(f"{path.name} row {lineno}: column {key} is not a valid number ({rec[key]!r})") from None
    if kind is float and v != v:
        raise InputError(f"{path.name} row {lineno}: column {key} is NaN")
    return v


def read_bundle(in_dir) -> Bundle:
    d = Path(in_dir)
    if not d.is_dir():
        raise InputError(f"input directory {d} does not exist")
    munis = []
    seen = set()
    p = d / MUNI_FILE
    for lineno, rec in _rows(p, MUNI_COLUMNS):
        if rec["id"] in seen:
            raise InputError(f"{p.name} row {lineno}: duplicate id {rec['id']}")
        seen.add(rec["id"])
        if rec["cluster"] not in CLUSTERS:
            raise InputError(f"{p.name} row {lineno}: unknown cluster {rec['cluster']!r}")
        try:
            munis.append(Municipality(
                id=rec["id"], name=rec["name"],
                centroid_lat=_num(p, lineno, rec, "lat"), centroid_lon=_num(p, lineno, rec, "lon"),
                cluster=rec["cluster"], p2_index=_num(p, lineno, rec, "p2"),
                p3_extent=_num(p, lineno, rec, "p3_ext"),
                amplification=_num(p, lineno, rec, "amplification"),
                exposures={t: _num(p, lineno, rec, t) for t in SEISMIC_TYPOLOGIES + FLOOD_TYPOLOGIES},
            ))
        except InputError as exc:
            if "row" in str(exc):
                raise
            raise InputError(f"{p.name} row {lineno}: {exc}") from None
    exceedance = {}
    p = d / EXCEEDANCE_FILE
    if p.exists():
        for lineno, rec in _rows(p, EXCEEDANCE_COLUMNS):
            mid = rec["municipality_id"]
            if mid not in seen:
                raise InputError(f"{p.name} row {lineno}: unknown municipality {mid}")
            pga = _num(p, lineno, rec, "pga")
            lam = _num(p, lineno, rec, "exceedance_prob")
            if not pga > 0 or not 0 < lam < 1:
                raise InputError(f"{p.name} row {lineno}: pga must be > 0 and probability in (0, 1)")
            exceedance.setdefault(mid, []).append((pga, lam))
    b = Bundle(munis, exceedance)
    p = d / COUNTS_FILE
    if p.exists():
        for lineno, rec in _rows(p, COUNTS_COLUMNS):
            n = _num(p, lineno, rec, "n_events", int)
            if n < 0:
                raise InputError(f"{p.name} row {lineno}: negative event count")
            b.flood_counts.append((_num(p, lineno, rec, "year", int), rec["cluster"], n))
    p = d / DEPTHS_FILE
    if p.exists():
        for lineno, rec in _rows(p, DEPTHS_COLUMNS):
            v = _num(p, lineno, rec, "depth_m")
            if not v > 0:
                raise InputError(f"{p.name} row {lineno}: depth must be positive")
            b.depths.append((rec["event_id"], v))
    p = d / CLUSTERS_FILE
    if p.exists():
        for lineno, rec in _rows(p, CLUSTERS_COLUMNS):
            b.clusters[rec["cluster"]] = (_num(p, lineno, rec, "mean_flooded_munis"),
                                          _num(p, lineno, rec, "cluster_size", int))
    return b
