"""Versioned JSON and CSV forms for spaces, covers, certificates, curves.

Every JSON document carries a "schema" tag of the form "adkit-<kind>@1",
and every writer here has a matching parser; round-tripping is part of
the test contract. Exact rationals travel as "p/q" strings, infinite
separations as "inf", so no value is ever coerced through a float.

Space metadata is deliberately not serialized: it holds in-process
bookkeeping (canonical group elements, parent spaces) that has no stable
wire form. A parsed space is the metric, the labels, and the basepoint.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from fractions import Fraction
from typing import Optional

from .cover import AllSubsets, Cover, CoverStats
from .errors import PreconditionError
from .estimator import CurveSample, DimCurve, WindowPolicy
from .metric import FiniteMetricSpace, PointSet
from .transport import TransportCertificate

SPACE_SCHEMA = "adkit-space@1"
COVER_SCHEMA = "adkit-cover@1"
STATS_SCHEMA = "adkit-cover-stats@1"
CERT_SCHEMA = "adkit-certificate@1"
CURVE_SCHEMA = "adkit-curve@1"

CSV_COLUMNS = ("lambda", "lower", "upper", "D", "R", "method", "seconds")


def _require(doc, schema: str) -> dict:
    if not isinstance(doc, dict):
        raise PreconditionError("document must be a JSON object",
                                got=type(doc).__name__)
    got = doc.get("schema")
    if got != schema:
        raise PreconditionError("document schema mismatch",
                                expected=schema, got=got)
    return doc


def _num_out(v):
    if v is math.inf:
        return "inf"
    if isinstance(v, bool):
        raise PreconditionError("booleans are not metric values")
    if isinstance(v, int):
        return v
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return int(v)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float) and v.is_integer():
        return int(v)
    raise PreconditionError("value is not an exact number",
                            got=repr(v))


def _num_in(v):
    if isinstance(v, bool):
        raise PreconditionError("booleans are not metric values")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        if v == "inf":
            return math.inf
        p, sep, q = v.partition("/")
        if sep:
            return Fraction(int(p), int(q))
        return int(v)
    raise PreconditionError("expected an integer or 'p/q' string",
                            got=repr(v))


# ---------------------------------------------------------------------------
# spaces and point sets


def space_to_json(space: FiniteMetricSpace) -> dict:
    if space.is_integer:
        dist = space.int_matrix.tolist()
    else:
        dist = [[_num_out(space.d(i, j)) for j in range(space.n)]
                for i in range(space.n)]
    return {
        "schema": SPACE_SCHEMA,
        "n": space.n,
        "dist": dist,
        "labels": list(space.labels) if space.labels is not None else None,
        "basepoint": space.basepoint,
    }


def space_from_json(doc) -> FiniteMetricSpace:
    doc = _require(doc, SPACE_SCHEMA)
    dist = [[_num_in(v) for v in row] for row in doc["dist"]]
    if len(dist) != doc["n"]:
        raise PreconditionError("matrix size disagrees with n",
                                n=doc["n"], rows=len(dist))
    labels = doc.get("labels")
    return FiniteMetricSpace(dist,
                             labels=tuple(labels) if labels else None,
                             basepoint=doc.get("basepoint"))


def point_set_to_json(ps: PointSet) -> list:
    return sorted(ps.members)


def point_set_from_json(space: FiniteMetricSpace, arr) -> PointSet:
    members = frozenset(arr)
    for i in members:
        if not isinstance(i, int) or not 0 <= i < space.n:
            raise PreconditionError("point index out of range", index=i,
                                    n=space.n)
    return PointSet(space, members)


# ---------------------------------------------------------------------------
# covers and their statistics


def cover_to_json(cover: Cover) -> dict:
    return {
        "schema": COVER_SCHEMA,
        "space": space_to_json(cover.space),
        "window": point_set_to_json(cover.window),
        "sets": [point_set_to_json(s) for s in cover.sets],
    }


def cover_from_json(doc, base_dir: Optional[str] = None) -> Cover:
    """Parse a cover document; "space" may be inline or a file reference
    (a path string, resolved against base_dir when relative)."""
    doc = _require(doc, COVER_SCHEMA)
    ref = doc["space"]
    if isinstance(ref, str):
        path = ref if os.path.isabs(ref) or base_dir is None \
            else os.path.join(base_dir, ref)
        with open(path) as fh:
            ref = json.load(fh)
    space = space_from_json(ref)
    window = point_set_from_json(space, doc["window"])
    sets = tuple(point_set_from_json(space, s) for s in doc["sets"])
    return Cover(space, sets, window)


def stats_to_json(stats: CoverStats) -> dict:
    leb = stats.lebesgue
    return {
        "schema": STATS_SCHEMA,
        "multiplicity": stats.multiplicity,
        "k_multiplicity": {str(k): v for k, v in
                           sorted(stats.k_multiplicity.items())},
        "lebesgue": "all-subsets" if isinstance(leb, AllSubsets)
                    else _num_out(leb),
        "mesh": _num_out(stats.mesh),
    }


def stats_from_json(doc) -> CoverStats:
    doc = _require(doc, STATS_SCHEMA)
    leb = doc["lebesgue"]
    return CoverStats(
        multiplicity=doc["multiplicity"],
        k_multiplicity={int(k): v for k, v in doc["k_multiplicity"].items()},
        lebesgue=AllSubsets() if leb == "all-subsets" else _num_in(leb),
        mesh=_num_in(doc["mesh"]),
    )


# ---------------------------------------------------------------------------
# transport certificates


def _claim_out(value):
    # coverage claims carry booleans, the rest are metric values
    return value if isinstance(value, bool) else _num_out(value)


def _claim_in(value):
    return value if isinstance(value, bool) else _num_in(value)


def certificate_to_json(cert: TransportCertificate) -> dict:
    return {
        "schema": CERT_SCHEMA,
        "claimed": [[n, r, _claim_out(b)] for n, r, b in cert.claimed],
        "measured": [[n, r, _claim_out(m)] for n, r, m in cert.verified],
        "pass": cert.passed,
    }


def certificate_from_json(doc) -> TransportCertificate:
    doc = _require(doc, CERT_SCHEMA)
    claimed = tuple((n, r, _claim_in(b)) for n, r, b in doc["claimed"])
    measured = tuple((n, r, _claim_in(m)) for n, r, m in doc["measured"])
    return TransportCertificate(claimed, measured, bool(doc["pass"]))


# ---------------------------------------------------------------------------
# dimension curves


def _sample_row(policy: WindowPolicy, s: CurveSample, timings: bool) -> dict:
    # wall-clock noise would break byte-identical reruns, so timings are
    # zeroed unless explicitly requested
    return {
        "lambda": s.lam,
        "lower": s.lower,
        "upper": s.upper,
        "D": policy.D(s.lam),
        "R": policy.R(s.lam),
        "method": s.method,
        "seconds": round(s.seconds, 3) if timings else 0.0,
    }


def curve_to_json(curve: DimCurve, witnesses: Optional[dict] = None,
                  timings: bool = False) -> dict:
    """JSON mirror of the CSV table. witnesses maps lam to the filename of
    an emitted witness-cover document; samples without one carry null."""
    rows = []
    for s in curve.samples:
        row = _sample_row(curve.policy, s, timings)
        row["witness"] = (witnesses or {}).get(s.lam)
        rows.append(row)
    return {
        "schema": CURVE_SCHEMA,
        "subject": curve.subject,
        "policy": {"d_factor": curve.policy.d_factor,
                   "r_factor": curve.policy.r_factor},
        "samples": rows,
    }


def curve_from_json(doc) -> DimCurve:
    doc = _require(doc, CURVE_SCHEMA)
    policy = WindowPolicy(doc["policy"]["d_factor"],
                          doc["policy"]["r_factor"])
    samples = []
    for row in doc["samples"]:
        samples.append(CurveSample(
            lam=row["lambda"], lower=row["lower"], upper=row["upper"],
            method=row["method"], seconds=float(row["seconds"])))
    return DimCurve(doc["subject"], policy, tuple(samples))


def curve_to_csv(curve: DimCurve, timings: bool = False) -> str:
    """The gnuplot-ready table. A missing upper bound (budget gap) is an
    empty cell, not a fake number."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in curve.samples:
        row = _sample_row(curve.policy, s, timings)
        w.writerow([
            row["lambda"], row["lower"],
            "" if row["upper"] is None else row["upper"],
            row["D"], row["R"], row["method"],
            f"{row['seconds']:.3f}",
        ])
    return out.getvalue()


def curve_rows_from_csv(text: str) -> tuple:
    """Typed rows from the CSV table, in file order."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise PreconditionError("curve CSV is empty")
    if tuple(header) != CSV_COLUMNS:
        raise PreconditionError("unexpected curve CSV header",
                                expected=CSV_COLUMNS, got=tuple(header))
    rows = []
    for rec in reader:
        if not rec:
            continue
        if len(rec) != len(CSV_COLUMNS):
            raise PreconditionError("curve CSV row has wrong arity",
                                    row=rec)
        rows.append({
            "lambda": int(rec[0]),
            "lower": int(rec[1]),
            "upper": None if rec[2] == "" else int(rec[2]),
            "D": int(rec[3]),
            "R": int(rec[4]),
            "method": rec[5],
            "seconds": float(rec[6]),
        })
    return tuple(rows)


def curve_from_csv(text: str, subject: str = "csv") -> DimCurve:
    """Rebuild a comparable curve from its CSV table.

    The policy factors are recovered from the D and R columns; when the
    rows are inconsistent with a single policy the parse is refused,
    since domination comparisons would silently mix scales.
    """
    rows = curve_rows_from_csv(text)
    if not rows:
        raise PreconditionError("curve CSV has no data rows")
    d0, r0 = None, None
    for row in rows:
        lam = row["lambda"]
        if row["D"] % lam or row["R"] % row["D"]:
            raise PreconditionError("row scales do not come from factors",
                                    lam=lam, D=row["D"], R=row["R"])
        d, r = row["D"] // lam, row["R"] // row["D"]
        if d0 is None:
            d0, r0 = d, r
        elif (d, r) != (d0, r0):
            raise PreconditionError("rows disagree on the window policy",
                                    first=(d0, r0), row=(d, r), lam=lam)
    samples = tuple(CurveSample(row["lambda"], row["lower"], row["upper"],
                                row["method"], row["seconds"])
                    for row in rows)
    return DimCurve(subject, WindowPolicy(d0, r0), samples)


# ---------------------------------------------------------------------------
# file helpers


def dumps_json(doc: dict) -> str:
    # sorted keys and a trailing newline keep digests reproducible
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def dump_json(doc: dict, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_json(doc))


def load_json(path: str):
    with open(path) as fh:
        return json.load(fh)
