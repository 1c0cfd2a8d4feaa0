"""Experiment driver: `eisenlab <subcommand> --config <path> [--out DIR] [--threads N]`.

Each run writes a CSV table and a manifest.json sufficient to reproduce it.
Exit codes: 0 ok, 2 config error, 3 group/domain error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import ConfigError, EisenlabError, GroupDomainError, NumericalError
from .eisenstein import eisenstein, harmonic_density
from .experiments import (
    ExperimentTable,
    averaged_equidist,
    equidist_scan,
    fit_loglog_slope,
    trace_compare,
)
from .geom import SpectralParameter
from .schottky import enumerate_geodesics, estimate_delta, orbit_count


def _manifest(cfg: RunConfig, extra: dict, wall: float) -> dict:
    import scipy

    return {
        "config_sha256": cfg.sha256(),
        "config_path": cfg.path,
        "config": cfg.values,
        "versions": {
            "eisenlab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "seed": cfg.get("seed"),
        "threads": cfg.get("threads") or int(os.environ.get("EISENLAB_THREADS", "0")),
        "wall_time_s": wall,
        **extra,
    }


def _write_outputs(outdir: str, table: ExperimentTable, manifest: dict):
    os.makedirs(outdir, exist_ok=True)
    table.to_csv(os.path.join(outdir, "table.csv"))
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _delta_result(cfg, group):
    return estimate_delta(group, max_word_length=cfg.get("delta.max_word_length"))


def cmd_validate(cfg: RunConfig, outdir: str) -> int:
    group = cfg.build_group()
    report = {"rank": group.rank, "valid": True}
    if group.rank > 0:
        res = _delta_result(cfg, group)
        geos = enumerate_geodesics(group, max_length=3.0 * res.value + 12.0)
        report["delta"] = res.value
        report["delta_uncertainty"] = res.uncertainty
        report["systole"] = geos[0].length if geos else None
        report["within_theorem_hypotheses"] = bool(res.upper < 0.5)
    bump = cfg.bump()
    bump.validate_in_domain(group)
    report["bump_domain_margin"] = bump.domain_margin(group) if group.rank else None
    print(json.dumps(report, indent=2, sort_keys=True))
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "report.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_delta(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    group = cfg.build_group()
    res = _delta_result(cfg, group)
    table = ExperimentTable()
    table.add(0.0, "delta_counting", res.counting.value, res.counting.uncertainty)
    table.add(0.0, "delta_bisection", res.bisection.value, res.bisection.uncertainty)
    table.add(0.0, "delta", res.value, res.uncertainty)
    # orbit-count curve over the regression window for plotting
    from .schottky import enumerate_words

    disp = np.sort(
        [w.displacement for w in enumerate_words(group, max_word_length=cfg.get("delta.max_word_length"))]
    )
    tmax = disp[-1] * 0.999
    for T in np.linspace(0.4 * tmax, tmax, 25):
        table.add(float(T), "N", float(np.searchsorted(disp, T, side="right")), 0.0)
    _write_outputs(outdir, table, _manifest(cfg, {"delta": res.value,
                                                  "delta_uncertainty": res.uncertainty},
                                            time.time() - t0))
    return 0


def cmd_count(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    group = cfg.build_group()
    T = cfg.get("count.T")
    n = orbit_count(group, T)
    table = ExperimentTable()
    table.add(T, "N", float(n), 0.0)
    _write_outputs(outdir, table, _manifest(cfg, {}, time.time() - t0))
    return 0


def cmd_geodesics(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    group = cfg.build_group()
    geos = enumerate_geodesics(group, cfg.get("geodesics.max_length"))
    table = ExperimentTable()
    for i, geo in enumerate(geos):
        table.add(float(i), "ell", geo.length, 0.0,
                  word="".join(_letter_name(l) for l in geo.cyclic_word),
                  primitive=int(geo.primitive), power=geo.power)
    _write_outputs(outdir, table, _manifest(cfg, {"count": len(geos)}, time.time() - t0))
    return 0


def _letter_name(label: int) -> str:
    idx = abs(label) - 1
    if idx < 8:
        base = "abcdefgh"[idx]
        return base if label > 0 else base.upper()
    return f"g{idx}" if label > 0 else f"G{idx}"


def cmd_eisenstein(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    group = cfg.build_group()
    delta_upper = _delta_result(cfg, group).upper if group.rank else 0.0
    m = complex(cfg.get("point.re"), cfg.get("point.im"))
    xi = cfg.xi()
    tol = cfg.get("tol.series")
    s_real = cfg.get("eisenstein.s_real")
    table = ExperimentTable()
    if s_real > 0:
        ev = eisenstein(group, s_real, m, xi, tol=tol, delta_upper=delta_upper)
        table.add(0.0, "E_real_s", ev.value.real, ev.tail_bound,
                  s=s_real, terms=ev.terms_used, depth=ev.truncation_length)
    else:
        t = cfg.get("eisenstein.t")
        ev = eisenstein(group, SpectralParameter(t), m, xi, tol=tol, delta_upper=delta_upper)
        table.add(t, "E_re", ev.value.real, ev.tail_bound, terms=ev.terms_used)
        table.add(t, "E_im", ev.value.imag, ev.tail_bound, terms=ev.terms_used)
        table.add(t, "E_abs", abs(ev.value), ev.tail_bound, terms=ev.terms_used)
        hv = harmonic_density(group, m, xi, tol=tol, delta_upper=delta_upper)
        table.add(t, "E_harmonic", hv.value, hv.tail_bound, terms=hv.terms_used)
    _write_outputs(outdir, table, _manifest(cfg, {}, time.time() - t0))
    return 0


def cmd_equidist(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    group = cfg.build_group()
    res = _delta_result(cfg, group)
    if res.upper >= 0.5:
        print(f"warning: delta + uncertainty = {res.upper:.3f} >= 1/2; "
              "outside theorem hypotheses", file=sys.stderr)
    table = equidist_scan(
        group, cfg.xi(), cfg.bump(), cfg.t_grid(), cfg.get("tol.series"),
        delta_upper=res.upper, orbit_depth=cfg.get("orbit.depth"),
        refine=cfg.get("grid.refine"),
    )
    ts, ds = table.column("D")
    slope = fit_loglog_slope(ts, ds, cfg.get("fit.window"))
    extra = {
        "delta": res.value,
        "delta_uncertainty": res.uncertainty,
        "reference_slope": -(1.0 - 2.0 * res.value),
        "fitted_slope": slope,
    }
    _write_outputs(outdir, table, _manifest(cfg, extra, time.time() - t0))
    return 0


def cmd_average(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    group = cfg.build_group()
    if group.rank:
        res = _delta_result(cfg, group)
        delta_upper, delta_val, delta_unc = res.upper, res.value, res.uncertainty
    else:
        delta_upper, delta_val, delta_unc = 0.0, 0.0, 0.0
    ts = cfg.t_grid()
    vals, reference, err = averaged_equidist(
        group, cfg.bump(), ts, cfg.get("tol.series"), delta_upper=delta_upper,
        orbit_depth=cfg.get("average.orbit_depth"), per_gap=cfg.get("average.per_gap"),
        use_symmetry=cfg.get("average.use_symmetry"), refine=cfg.get("grid.refine"),
    )
    table = ExperimentTable()
    dev = np.abs(vals - reference)
    for q, t in enumerate(ts):
        slope = fit_loglog_slope(ts[: q + 1], dev[: q + 1], cfg.get("fit.window")) if q >= 2 else 0.0
        table.add(float(t), "A", float(vals[q]), err,
                  reference=reference, deviation=float(dev[q]), slope_so_far=slope)
    extra = {
        "delta": delta_val,
        "delta_uncertainty": delta_unc,
        "reference_slope": -(1.0 - 2.0 * delta_val),
        "fitted_slope": fit_loglog_slope(ts, dev, cfg.get("fit.window")),
        "reference_value": reference,
    }
    _write_outputs(outdir, table, _manifest(cfg, extra, time.time() - t0))
    return 0


def cmd_trace(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    group = cfg.build_group()
    ts = cfg.t_grid()
    cutoff = cfg.get("trace.geodesic_cutoff")
    geos = enumerate_geodesics(group, cutoff)
    table = ExperimentTable()
    cache = {}
    for t in ts:
        rec = trace_compare(
            group, cfg.bump(), float(t), cutoff, tol=cfg.get("tol.series"),
            refine=cfg.get("grid.refine"), geodesics=geos, line_integrals=cache,
        )
        meta = {"kernel_error": rec.kernel_error, "grid_error": rec.grid_error}
        table.add(rec.t, "lhs", rec.lhs, rec.grid_error + rec.kernel_error, **meta)
        table.add(rec.t, "rhs_identity", rec.rhs_identity, 0.0)
        table.add(rec.t, "rhs_geodesic_k0", rec.rhs_geodesic_k0, rec.geodesic_tail)
        table.add(rec.t, "oscillatory", rec.oscillatory, rec.grid_error)
        table.add(rec.t, "residual", rec.residual,
                  rec.grid_error + rec.kernel_error + rec.geodesic_tail)
    _write_outputs(outdir, table, _manifest(cfg, {"geodesic_count": len(geos)},
                                            time.time() - t0))
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "delta": cmd_delta,
    "count": cmd_count,
    "geodesics": cmd_geodesics,
    "eisenstein": cmd_eisenstein,
    "equidist": cmd_equidist,
    "average": cmd_average,
    "trace": cmd_trace,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="eisenlab", description=__doc__)
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        if args.threads is not None:
            cfg.values["threads"] = args.threads
        outdir = args.out or cfg.get("out")
        code = COMMANDS[args.subcommand](cfg, outdir)
    except ConfigError as exc:
        _err(args.subcommand, exc)
        return 2
    except GroupDomainError as exc:
        _err(args.subcommand, exc)
        return 3
    except NumericalError as exc:
        _err(args.subcommand, exc)
        return 4
    except EisenlabError as exc:
        _err(args.subcommand, exc)
        return 4
    return code


def _err(sub: str, exc: Exception):
    record = {"subcommand": sub, "error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
