"""Report and export writers for scheme runs."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .bundle import atomic_write_text, csv_text, fmt
from .errors import InputError
from .geo import GroupingSample
from .losses import ClaimSeverity, MultiSeverity
from .scheme import SchemeSolution, bound_at

TABLE_FIELDS = ("sum_p_star", "c", "w_d_star", "eps1_star", "eps2_star")
TABLE_HEADERS = ("sum p*", "c", "W_d*", "eps1*", "eps2*")

SAMPLING_COLUMNS = ["peril", "policy", "deductible", "max_coverage", "sampling", "seed", "mode",
                    "phi", "claimed_bound", *SchemeSolution.NUMERIC, "n_c", "flags"]


def table_text(runs, epsilon1, epsilon2) -> str:
    lines = [f"eps1={epsilon1:g}  eps2={epsilon2:g}  (mean and coefficient of variation over samplings)"]
    head = f"{'peril':<8}{'D':>7}{'E':>7}" + "".join(f"{h:>26}" for h in TABLE_HEADERS)
    lines += [head, "-" * len(head)]
    for run in runs:
        p = run.policy
        row = f"{run.peril:<8}{p.deductible:>7g}{p.max_coverage:>7g}"
        for name in TABLE_FIELDS:
            digits = 3 if name in ("c", "eps1_star", "eps2_star") else 2
            row += f"{run.aggregate.fmt(name, digits):>26}"
        lines.append(row)
    flagged = sorted({f for run in runs for f in run.aggregate.flags})
    if flagged:
        lines.append("flags: " + ", ".join(flagged))
    unpriced = sum(pr.flagged for run in runs for pr in run.pricings)
    lines.append(f"cells without positive willingness to pay: {unpriced}")
    return "\n".join(lines) + "\n"


def table_rows(runs):
    header = ["peril", "deductible", "max_coverage", "n_samplings"]
    for name in SchemeSolution.NUMERIC:
        header += [f"{name}_mean", f"{name}_cov"]
    rows = []
    for run in runs:
        a = run.aggregate
        r = [run.peril, run.policy.deductible, run.policy.max_coverage, a.n_samplings]
        for name in SchemeSolution.NUMERIC:
            r += [a.mean[name], a.cov[name]]
        rows.append(r)
    return header, rows


def sampling_rows(runs):
    rows = []
    for run in runs:
        p = run.policy
        for k, (sol, bi) in enumerate(zip(run.solutions, run.inputs)):
            rows.append([run.peril, p.label(), p.deductible, p.max_coverage, k, sol.seed, bi.mode,
                         sol.phi, bound_at(sol.phi, bi),
                         *[getattr(sol, n) for n in SchemeSolution.NUMERIC], sol.n_c,
                         ";".join(sol.flags)])
    return rows


def premium_rows(runs):
    rows = []
    for run in runs:
        c = run.aggregate.mean["c"]
        scale = min(c, 1.0) if np.isfinite(c) else 0.0
        for pr in run.pricings:
            for (mid, typ), q in sorted(pr.quotes.items()):
                rows.append([run.peril, pr.policy.label(), mid, typ, q.p_h, scale * q.p_h if q.priced else 0.0,
                             q.expected_reimbursement, ";".join(q.flags)])
    return rows


def severity_rows(runs):
    rows = []
    for run in runs:
        comps = (("seismic", run.severity.seismic), ("flood", run.severity.flood)) \
            if isinstance(run.severity, MultiSeverity) else ((run.peril, run.severity),)
        for name, sev in comps:
            for mid, a, q in zip(sev.ids, sev.a, sev.q):
                rows.append([run.peril, run.policy.label(), name, mid, float(a), float(q)])
    return rows


def geojson_text(municipalities, runs) -> str:
    feats = []
    for i, m in enumerate(municipalities):
        props = {"id": m.id, "name": m.name}
        for run in runs:
            c = run.aggregate.mean["c"]
            scale = min(c, 1.0) if np.isfinite(c) else 0.0
            val = sum(float(pr.municipal_premium()[i]) for pr in run.pricings)
            key = f"{run.peril}:{run.policy.label()}"
            props[f"p_h[{key}]"] = val
            props[f"p_star[{key}]"] = scale * val
        feats.append({"type": "Feature",
                      "geometry": {"type": "Point", "coordinates": [m.centroid_lon, m.centroid_lat]},
                      "properties": props})
    return json.dumps({"type": "FeatureCollection", "features": feats}, indent=1, sort_keys=True) + "\n"


def groups_text(groupings) -> str:
    data = [{"seed": g.seed, "groups": g.as_lists()} for g in groupings]
    return json.dumps({"samplings": data}, indent=1) + "\n"


def write_scheme_outputs(out_dir, runs, groupings, municipalities, epsilon1, epsilon2, manifest):
    out = Path(out_dir)
    atomic_write_text(out / "scheme_report.txt", table_text(runs, epsilon1, epsilon2))
    atomic_write_text(out / "scheme_report.csv", csv_text(*table_rows(runs)))
    atomic_write_text(out / "samplings.csv", csv_text(SAMPLING_COLUMNS, sampling_rows(runs)))
    atomic_write_text(out / "premiums.csv", csv_text(
        ["peril", "policy", "municipality_id", "typology", "p_h", "p_star", "expected_reimbursement", "flags"],
        premium_rows(runs)))
    atomic_write_text(out / "severities.csv", csv_text(
        ["peril", "policy", "component", "municipality_id", "a", "q"], severity_rows(runs)))
    atomic_write_text(out / "premiums.geojson", geojson_text(municipalities, runs))
    atomic_write_text(out / "groups.json", groups_text(groupings))
    atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")


# ---- reading back a scheme output directory --------------------------------

def _read_csv(path: Path):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def read_scheme_outputs(scheme_dir):
    """Return (groupings by seed, severities by (peril, policy), sampling rows)."""
    d = Path(scheme_dir)
    try:
        groups = json.loads((d / "groups.json").read_text(encoding="utf-8"))["samplings"]
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read groups.json in {d}: {exc}") from None
    sev_rows = _read_csv(d / "severities.csv")
    samp = _read_csv(d / "samplings.csv")
    if not samp:
        raise InputError("samplings.csv contains no rows")
    comps: dict = {}
    for lineno, r in enumerate(sev_rows, start=2):
        try:
            comps.setdefault((r["peril"], r["policy"]), {}).setdefault(r["component"], []).append(
                (r["municipality_id"], float(r["a"]), float(r["q"])))
        except (KeyError, ValueError):
            raise InputError(f"severities.csv row {lineno}: malformed") from None
    severities = {}
    for key, parts in comps.items():
        built = {}
        for name, rows in parts.items():
            built[name] = ClaimSeverity(tuple(x[0] for x in rows), np.array([x[1] for x in rows]),
                                        np.array([x[2] for x in rows]))
        severities[key] = MultiSeverity(built["seismic"], built["flood"]) if key[0] == "multi" else built[key[0]]
    ids = None
    groupings = {}
    for g in groups:
        lists = g["groups"]
        n = sum(len(x) for x in lists)
        groupings[int(g["seed"])] = GroupingSample(int(g["seed"]), tuple(tuple(x) for x in lists), n)
        ids = ids or {m for x in lists for m in x}
    return groupings, severities, samp
