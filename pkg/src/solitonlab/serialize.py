"""CSV and JSON writers with fixed formatting (17 significant digits, LF endings)."""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable

import numpy as np

from .rotgeom import GraphJet, curvature_sample

CURVATURE_COLUMNS = ["x", "gamma", "gamma_p", "gamma_pp", "k1", "k2", "H", "K", "support", "tangential_sq", "Q"]


def fmt(v) -> str:
    if v is None:
        return ""
    return "%.17g" % float(v)


def jsonable(obj):
    """Recursively convert numpy scalars and non-finite floats for json.dumps."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def curvature_rows(jets: Iterable) -> list[list]:
    rows = []
    for j in jets:
        s = curvature_sample(j)
        if isinstance(j, GraphJet):
            g, gp, gpp = j.gamma, j.gamma_p, j.gamma_pp
        else:
            gp, gpp = j.graph_slopes()
            g = j.y
        rows.append([j.x, g, gp, gpp, s.k1, s.k2, s.H, s.K, s.support, s.tangential_sq, s.Q])
    return rows


def write_csv(header: list, rows: Iterable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def profile_csv(jets: Iterable) -> str:
    """CurvatureSample CSV.  Arclength samples report their graph-equivalent slopes."""
    return write_csv(CURVATURE_COLUMNS, curvature_rows(jets))


def scan_csv(scan) -> str:
    return write_csv(["H", "K", "indicator", "class"], scan.rows())
