"""Figure rendering from eisenlab CSV tables.

Figures display table contents plus manifest constants only; no mathematics
is recomputed here.  Rendering is pinned (backend, size, fonts) so output is
reproducible.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams.update(
    {
        "figure.figsize": (6.4, 4.2),
        "figure.dpi": 110,
        "savefig.dpi": 110,
        "font.family": "DejaVu Sans",
        "font.size": 9,
        "svg.hashsalt": "eisenlab-plots",
        "axes.grid": True,
        "grid.alpha": 0.3,
    }
)

KINDS = ("decay", "trace", "counting")


class SchemaError(ValueError):
    """CSV contents do not match what the figure kind needs."""


@dataclass
class Table:
    header: list
    rows: list  # dicts keyed by header

    def series(self, name: str):
        ts, vs = [], []
        for row in self.rows:
            if row.get("name") == name:
                ts.append(float(row["t"]))
                vs.append(float(row["value"]))
        return np.array(ts), np.array(vs)

    def meta_series(self, name: str, key: str):
        out = []
        for row in self.rows:
            if row.get("name") == name:
                out.append(float(row[key]))
        return np.array(out)

    def names(self):
        return {row.get("name") for row in self.rows}


def read_table(path) -> Table:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[:4] != ["t", "name", "value", "error"]:
            raise SchemaError(f"{path}: unexpected CSV header {header[:4]}")
        rows = []
        for line in fh:
            cells = line.rstrip("\n").split(",")
            rows.append(dict(zip(header, cells)))
    if not rows:
        raise SchemaError(f"{path}: table has no rows")
    return Table(header, rows)


@dataclass
class FigureSpec:
    csv: str
    kind: str
    out: str
    manifest: str = ""
    xscale: str = ""
    yscale: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        ext = os.path.splitext(self.out)[1].lower()
        if ext not in (".png", ".svg"):
            raise SchemaError(f"output extension {ext!r} not supported (.png/.svg)")

    @staticmethod
    def load(path) -> "FigureSpec":
        vals = {}
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                key, _, val = line.partition("=")
                vals[key.strip()] = val.strip()
        known = {"csv", "kind", "out", "manifest", "xscale", "yscale"}
        extra = {k: v for k, v in vals.items() if k not in known}
        return FigureSpec(
            csv=vals.get("csv", ""),
            kind=vals.get("kind", ""),
            out=vals.get("out", ""),
            manifest=vals.get("manifest", ""),
            xscale=vals.get("xscale", ""),
            yscale=vals.get("yscale", ""),
            extra=extra,
        )


def _load_manifest(spec: FigureSpec) -> dict:
    path = spec.manifest
    if not path:
        cand = os.path.join(os.path.dirname(spec.csv), "manifest.json")
        path = cand if os.path.exists(cand) else ""
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _render_decay(spec: FigureSpec, table: Table, manifest: dict, ax):
    name = "D" if "D" in table.names() else "A"
    if name == "A":
        ts = table.series("A")[0]
        vals = table.meta_series("A", "deviation")
    else:
        ts, vals = table.series("D")
    if len(ts) == 0:
        raise SchemaError("decay figure needs rows named D or A")
    ax.loglog(ts, vals, "o-", color="#1f4e79", lw=1.2, ms=4, label="deviation")
    ref_slope = manifest.get("reference_slope")
    if ref_slope is not None:
        anchor = vals[0] * 1.6
        ax.loglog(ts, anchor * (ts / ts[0]) ** ref_slope, "--", color="#b0493a",
                  lw=1.2, label=f"reference slope {ref_slope:.3f}")
    fitted = manifest.get("fitted_slope")
    if fitted is not None:
        ax.loglog(ts, vals[0] * (ts / ts[0]) ** fitted, ":", color="#3a7d44",
                  lw=1.2, label=f"fitted slope {fitted:.3f}")
    ax.set_xlabel("frequency t")
    ax.set_ylabel("deviation from limit density")
    ax.legend(loc="lower left")


def _render_counting(spec: FigureSpec, table: Table, manifest: dict, ax):
    ts, ns = table.series("N")
    if len(ts) == 0:
        raise SchemaError("counting figure needs rows named N")
    ax.semilogy(ts, ns, "o-", color="#1f4e79", lw=1.2, ms=4, label="orbit count N(T)")
    delta = manifest.get("delta")
    if delta is not None:
        ax.semilogy(ts, ns[0] * np.exp(delta * (ts - ts[0])), "--", color="#b0493a",
                    lw=1.2, label=f"slope delta = {delta:.4f}")
    ax.set_xlabel("displacement bound T")
    ax.set_ylabel("N(T)")
    ax.legend(loc="upper left")


def _render_trace(spec: FigureSpec, table: Table, manifest: dict, fig):
    needed = {"lhs", "rhs_identity", "rhs_geodesic_k0", "residual"}
    if not needed <= table.names():
        raise SchemaError(f"trace figure needs rows {sorted(needed)}")
    ts, lhs = table.series("lhs")
    _, ident = table.series("rhs_identity")
    _, geod = table.series("rhs_geodesic_k0")
    _, resid = table.series("residual")
    ax1, ax2 = fig.subplots(2, 1, sharex=True, height_ratios=[2, 1])
    ax1.plot(ts, lhs - ident, "o-", color="#1f4e79", lw=1.2, ms=4,
             label="spectral side minus identity term")
    ax1.plot(ts, geod, "s--", color="#b0493a", lw=1.2, ms=4,
             label="leading geodesic term")
    ax1.set_ylabel("oscillatory part")
    ax1.legend(loc="best")
    ax2.semilogy(ts, np.maximum(resid, 1e-300), "^-", color="#3a7d44", lw=1.2, ms=4,
                 label="residual")
    ax2.set_xlabel("frequency t")
    ax2.set_ylabel("residual")
    ax2.legend(loc="best")
    return (ax1, ax2)


def render(spec: FigureSpec) -> str:
    """Render the figure described by spec; returns the output path."""
    table = read_table(spec.csv)
    manifest = _load_manifest(spec)
    fig = plt.figure()
    try:
        if spec.kind == "trace":
            _render_trace(spec, table, manifest, fig)
        else:
            ax = fig.subplots()
            if spec.kind == "decay":
                _render_decay(spec, table, manifest, ax)
            else:
                _render_counting(spec, table, manifest, ax)
            if spec.xscale:
                ax.set_xscale(spec.xscale)
            if spec.yscale:
                ax.set_yscale(spec.yscale)
        fig.suptitle(f"{spec.kind}: {os.path.basename(spec.csv)}", fontsize=10)
        outdir = os.path.dirname(spec.out)
        if outdir:
            os.makedirs(outdir, exist_ok=True)
        fig.savefig(spec.out, metadata=_stable_metadata(spec.out))
    finally:
        plt.close(fig)
    return spec.out


def _stable_metadata(path):
    """Strip timestamps so identical inputs give identical bytes."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        return {"Software": "eisenlab-plots"}
    if ext == ".svg":
        return {"Date": None}
    return None
