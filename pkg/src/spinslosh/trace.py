"""Simulation traces and their CSV form."""

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .slosh import Event, EventKind

COLUMNS = (
    "t", "Fx", "Fy", "Fz", "Tx", "Ty", "Tz", "wx", "wy", "wz",
    "qw", "qx", "qy", "qz", "w_ref", "u",
    "px", "py", "pz", "vx", "vy", "vz", "mode", "lambda",
)
HEADER = "# spinslosh trace v1"

_GROUPS = {
    "F": ("Fx", "Fy", "Fz"),
    "T": ("Tx", "Ty", "Tz"),
    "omega_b": ("wx", "wy", "wz"),
    "q": ("qw", "qx", "qy", "qz"),
    "r_pc_t": ("px", "py", "pz"),
    "v_p_i": ("vx", "vy", "vz"),
}


@dataclass
class Trace:
    """Uniformly sampled simulation record.

    ``columns`` maps column names to 1-D arrays of equal length; an
    ingested trace may carry only a subset of :data:`COLUMNS`. Vector
    quantities are available as (n, 3) views, e.g. ``trace.F``.
    """

    columns: dict
    events: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cols = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        if "t" not in cols:
            raise ValidationError("trace has no time column", "column t present")
        n = len(cols["t"])
        for k, v in cols.items():
            if v.shape != (n,):
                raise ValidationError(f"column {k} has shape {v.shape}, expected ({n},)", "equal column lengths")
        if n > 1 and not np.all(np.diff(cols["t"]) > 0):
            raise ValidationError("trace time stamps are not strictly increasing", "t strictly increasing")
        self.columns = cols

    def __len__(self):
        return len(self.columns["t"])

    def __contains__(self, name):
        return name in self.columns

    def __getitem__(self, name):
        return self.columns[name]

    def __getattr__(self, name):
        groups = _GROUPS
        if name in groups:
            cols = self.__dict__["columns"]
            missing = [c for c in groups[name] if c not in cols]
            if missing:
                raise AttributeError(f"trace lacks columns {missing}")
            return np.column_stack([cols[c] for c in groups[name]])
        raise AttributeError(name)

    @property
    def t(self):
        return self.columns["t"]

    @property
    def dt(self):
        return float(self.t[1] - self.t[0]) if len(self) > 1 else 0.0

    def count(self, kind):
        kind = EventKind(kind)
        return sum(1 for e in self.events if e.kind == kind)

    @classmethod
    def from_arrays(cls, t, F, T, omega_b, q, w_ref, u, r_pc_t, v_p_i, mode, lam, events=(), meta=None):
        cols = {"t": t}
        for name, arr in (("F", F), ("T", T), ("omega_b", omega_b), ("q", q), ("r_pc_t", r_pc_t), ("v_p_i", v_p_i)):
            for j, c in enumerate(_GROUPS[name]):
                cols[c] = arr[:, j]
        cols.update({"w_ref": w_ref, "u": u, "mode": mode, "lambda": lam})
        return cls({c: cols[c] for c in COLUMNS}, list(events), dict(meta or {}))


def write_trace_csv(trace, path):
    names = [c for c in COLUMNS if c in trace.columns] + [c for c in trace.columns if c not in COLUMNS]
    data = np.column_stack([trace.columns[c] for c in names])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(HEADER + "\n")
        if trace.meta:
            fh.write("# meta " + json.dumps(trace.meta, sort_keys=True, default=float) + "\n")
        for e in trace.events:
            fh.write(f"# event {e.kind.value} {e.t:.17e}\n")
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(f"{x:.17e}" for x in row) + "\n")


def read_trace_csv(path):
    """Read a trace written by :func:`write_trace_csv` or an external CSV.

    Lines starting with ``#`` are comments (event and meta lines are
    decoded when present). The first non-comment line is the header; any
    subset of columns is accepted as long as ``t`` is among them.
    """
    events, meta = [], {}
    header, rows, linenos = None, [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip()
                if body.startswith("event "):
                    _, kind, t = body.split()
                    events.append(Event(EventKind(kind), float(t)))
                elif body.startswith("meta "):
                    meta = json.loads(body[5:])
                continue
            fields = [f.strip() for f in s.split(",")]
            if header is None:
                header = fields
                if len(set(header)) != len(header):
                    raise ValidationError(f"{path}:{lineno}: duplicate column names", "unique columns")
                continue
            if len(fields) != len(header):
                raise ValidationError(
                    f"{path}:{lineno}: row has {len(fields)} fields, header has {len(header)}", "rectangular csv"
                )
            try:
                row = [float(f) for f in fields]
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}", "numeric fields") from None
            if not all(np.isfinite(row)):
                raise ValidationError(f"{path}:{lineno}: non-finite value", "finite fields")
            rows.append(row)
            linenos.append(lineno)
    if header is None:
        raise ValidationError(f"{path}: no header line", "csv header")
    if "t" not in header:
        raise ValidationError(f"{path}: no 't' column", "column t present")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    t = data[:, header.index("t")]
    bad = np.nonzero(np.diff(t) <= 0)[0]
    if bad.size:
        raise ValidationError(f"{path}:{linenos[bad[0] + 1]}: time not strictly increasing", "t strictly increasing")
    return Trace({c: data[:, j] for j, c in enumerate(header)}, events, meta)
