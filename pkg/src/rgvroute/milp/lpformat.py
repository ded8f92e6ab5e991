"""CPLEX-style LP text export.

Output is a pure function of the model: rows keep their build order, terms
are sorted by column and every number is printed with ``%.17g`` so a
re-read recovers the exact doubles.
"""
from __future__ import annotations

import io
import math
import re
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .model import MilpModel

_TERMS_PER_LINE = 6


def _num(v: float) -> str:
    return "%.17g" % v


def _expr(names, cols, coefs) -> list[str]:
    parts = []
    for c, a in zip(cols, coefs):
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        coef = "" if mag == 1.0 else _num(mag) + " "
        parts.append(f"{sign} {coef}{names[c]}")
    if not parts:
        parts = [f"+ 0 {names[0]}"]
    if parts[0].startswith("+ "):
        parts[0] = parts[0][2:]
    lines = []
    for k in range(0, len(parts), _TERMS_PER_LINE):
        lines.append(" ".join(parts[k : k + _TERMS_PER_LINE]))
    return lines


def _emit_row(out, label, names, cols, coefs, sense, rhs):
    lines = _expr(names, cols, coefs)
    lines[-1] += f" {sense} {_num(rhs)}"
    out.write(f" {label}: {lines[0]}\n")
    for ln in lines[1:]:
        out.write(f"   {ln}\n")


def lp_text(model: MilpModel) -> str:
    names = model.names
    out = io.StringIO()
    out.write(f"\\ rgvroute model: {model.num_cols} columns, {model.num_rows} rows\n")
    out.write("Minimize\n")
    obj_cols = np.nonzero(model.obj)[0]
    _emit_row_obj(out, names, obj_cols, model.obj[obj_cols])
    out.write("Subject To\n")
    A = model.A.tocsr()
    A.sort_indices()
    for r in range(model.num_rows):
        cols = A.indices[A.indptr[r] : A.indptr[r + 1]]
        coefs = A.data[A.indptr[r] : A.indptr[r + 1]]
        lo, hi = model.row_lo[r], model.row_hi[r]
        name = model.row_names[r]
        if lo == hi:
            _emit_row(out, name, names, cols, coefs, "=", lo)
        elif math.isinf(lo):
            _emit_row(out, name, names, cols, coefs, "<=", hi)
        elif math.isinf(hi):
            _emit_row(out, name, names, cols, coefs, ">=", lo)
        else:
            _emit_row(out, name + "_lo", names, cols, coefs, ">=", lo)
            _emit_row(out, name + "_hi", names, cols, coefs, "<=", hi)
    out.write("Bounds\n")
    for c, nm in enumerate(names):
        if model.binary[c]:
            continue
        lo, hi = model.lb[c], model.ub[c]
        if lo == hi:
            out.write(f" {nm} = {_num(lo)}\n")
        elif math.isinf(hi):
            out.write(f" {nm} >= {_num(lo)}\n")
        else:
            out.write(f" {_num(lo)} <= {nm} <= {_num(hi)}\n")
    out.write("Binaries\n")
    bins = [names[c] for c in np.nonzero(model.binary)[0]]
    for k in range(0, len(bins), 8):
        out.write(" " + " ".join(bins[k : k + 8]) + "\n")
    out.write("End\n")
    return out.getvalue()


def _emit_row_obj(out, names, cols, coefs):
    lines = _expr(names, cols, coefs)
    out.write(f" energy: {lines[0]}\n")
    for ln in lines[1:]:
        out.write(f"   {ln}\n")


def export_lp(model: MilpModel, path) -> Path:
    path = Path(path)
    path.write_text(lp_text(model))
    return path


# -- reader -------------------------------------------------------------------
# Covers the subset written above; enough to round-trip our own files.

_TERM = re.compile(r"([+-])?\s*((?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][\w.]*)")


def _parse_expr(text):
    terms = {}
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse LP expression near {text[pos:pos + 30]!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        coef = float(m.group(2)) if m.group(2) else 1.0
        terms[m.group(3)] = terms.get(m.group(3), 0.0) + sign * coef
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return terms


def read_lp(path_or_text) -> dict:
    """Parse an LP file written by :func:`export_lp`.

    Returns a dict with ``names``, ``obj``, ``A`` (csr), ``row_lo``,
    ``row_hi``, ``lb``, ``ub`` and ``binary`` aligned by column order of
    first appearance in the bounds and binaries sections.
    """
    text = str(path_or_text)
    if "\n" not in text:
        text = Path(text).read_text()
    sections: dict = {"obj": [], "st": [], "bounds": [], "bin": []}
    cur = None
    heads = {"minimize": "obj", "subject to": "st", "bounds": "bounds", "binaries": "bin"}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        key = heads.get(line.lower())
        if key:
            cur = key
            continue
        if line.lower() == "end":
            break
        if raw.startswith("   ") and sections[cur]:
            sections[cur][-1] += " " + line
        else:
            sections[cur].append(line)

    names: list = []
    index: dict = {}

    def col(nm):
        if nm not in index:
            index[nm] = len(names)
            names.append(nm)
        return index[nm]

    lb, ub, binary = {}, {}, set()
    for line in sections["bounds"]:
        parts = line.split()
        if len(parts) == 5:
            c = col(parts[2])
            lb[c], ub[c] = float(parts[0]), float(parts[4])
        elif parts[1] == "=":
            c = col(parts[0])
            lb[c] = ub[c] = float(parts[2])
        else:
            c = col(parts[0])
            lb[c], ub[c] = float(parts[2]), np.inf
    for line in sections["bin"]:
        for nm in line.split():
            c = col(nm)
            binary.add(c)
            lb[c], ub[c] = 0.0, 1.0

    obj_terms = _parse_expr(sections["obj"][0].split(":", 1)[1]) if sections["obj"] else {}
    rows, lo, hi, rnames = [], [], [], []
    for line in sections["st"]:
        label, body = line.split(":", 1)
        m = re.search(r"(<=|>=|=)\s*(\S+)$", body)
        expr, sense, rhs = body[: m.start()], m.group(1), float(m.group(2))
        rows.append(_parse_expr(expr))
        rnames.append(label.strip())
        lo.append(rhs if sense in (">=", "=") else -np.inf)
        hi.append(rhs if sense in ("<=", "=") else np.inf)
    for t in rows:
        for nm in t:
            col(nm)
    for nm in obj_terms:
        col(nm)
    ncols = len(names)
    data, indices, indptr = [], [], [0]
    for t in rows:
        for nm, a in sorted(t.items(), key=lambda kv: index[kv[0]]):
            if a != 0.0:
                indices.append(index[nm])
                data.append(a)
        indptr.append(len(indices))
    obj = np.zeros(ncols)
    for nm, a in obj_terms.items():
        obj[index[nm]] = a
    return {
        "names": names,
        "obj": obj,
        "A": sp.csr_matrix((data, indices, indptr), shape=(len(rows), ncols)),
        "row_names": rnames,
        "row_lo": np.array(lo),
        "row_hi": np.array(hi),
        "lb": np.array([lb.get(c, 0.0) for c in range(ncols)]),
        "ub": np.array([ub.get(c, np.inf) for c in range(ncols)]),
        "binary": np.array([c in binary for c in range(ncols)]),
    }
