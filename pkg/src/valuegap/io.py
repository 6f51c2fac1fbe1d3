"""Transition datasets as CSV.

The first line declares the state kind and dimension, e.g.::

    kind=vector,dim=3
    kind=tabular,dim=2,sizes=5;5

Every following line is ``s_1..s_k, reward, s'_1..s'_k``.
"""
import csv
from pathlib import Path

import numpy as np

from .mrp import TABULAR, VECTOR, TransitionDataset


class DatasetFormatError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _parse_header(text):
    fields = {}
    for part in text.strip().split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise DatasetFormatError(f"header field {part!r} is not key=value", 1)
        fields[key.strip()] = value.strip()
    kind = fields.get("kind")
    if kind not in (TABULAR, VECTOR):
        raise DatasetFormatError(f"header kind must be 'tabular' or 'vector', got {kind!r}", 1)
    try:
        dim = int(fields["dim"])
    except (KeyError, ValueError):
        raise DatasetFormatError("header needs an integer dim=", 1) from None
    if dim < 1:
        raise DatasetFormatError("dim must be positive", 1)
    sizes = None
    if "sizes" in fields:
        try:
            sizes = tuple(int(s) for s in fields["sizes"].split(";"))
        except ValueError:
            raise DatasetFormatError("sizes must be ';'-separated integers", 1) from None
        if len(sizes) != dim:
            raise DatasetFormatError(f"sizes lists {len(sizes)} components, dim is {dim}", 1)
    return kind, dim, sizes


def read_dataset(path):
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.strip():
            raise DatasetFormatError("missing header", 1)
        kind, dim, sizes = _parse_header(first)
        S, R, S2 = [], [], []
        for lineno, rec in enumerate(csv.reader(fh), start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) != 2 * dim + 1:
                raise DatasetFormatError(f"expected {2 * dim + 1} fields, got {len(rec)}", lineno)
            try:
                vals = [float(f) for f in rec]
            except ValueError as exc:
                raise DatasetFormatError(f"non-numeric field ({exc})", lineno) from None
            if not np.all(np.isfinite(vals)):
                raise DatasetFormatError("non-finite value", lineno)
            if kind == TABULAR and any(v != int(v) or v < 0 for v in vals[:dim] + vals[dim + 1:]):
                raise DatasetFormatError("tabular states must be non-negative integers", lineno)
            S.append(vals[:dim])
            R.append(vals[dim])
            S2.append(vals[dim + 1:])
    if not S:
        raise DatasetFormatError("dataset has no transitions")
    if kind == TABULAR:
        return TransitionDataset(np.array(S, dtype=np.int64), R, np.array(S2, dtype=np.int64), kind=TABULAR, dims=sizes)
    return TransitionDataset(np.array(S), R, np.array(S2), kind=VECTOR)


def write_dataset(data, path):
    header = f"kind={data.kind},dim={data.dim}"
    if data.kind == TABULAR:
        header += ",sizes=" + ";".join(str(N) for N in data.dims)
    fmt = (lambda v: str(int(v))) if data.kind == TABULAR else repr
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        w = csv.writer(fh, lineterminator="\n")
        for s, r, s2 in zip(data.states, data.rewards, data.next_states):
            w.writerow([fmt(v.item()) for v in s] + [repr(float(r))] + [fmt(v.item()) for v in s2])
