"""Experiment dispatch from a RunConfig to artifacts on disk."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import RunConfig, parse_config
from .errors import CGLWaveError, NumericalInstability, RegimeViolation
from .hydro import SQRT2, build_psi, compute_M0
from .io import (
    SnapshotHeader,
    build_manifest,
    run_stem,
    write_csv,
    write_json,
    write_plot_data,
    write_snapshot,
)
from .linear import default_bound_sweep, verify_semigroup_bounds
from .solver import SolverConfig, default_dt, integrate, integrate_bv
from .spectral import PHYSICAL, Field, GridSpec, PerturbationParams, VectorField, band_limited_random, gradient

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_NUMERICAL = 4


@dataclass
class RunOutcome:
    status: int
    out_dir: Path
    artifacts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    report: str = ""


def make_grid(cfg):
    return GridSpec(cfg.grid.dim, cfg.grid.n, cfg.grid.L)


def make_params(cfg, eps=None, kappa=None):
    return PerturbationParams(cfg.params.eps if eps is None else eps,
                              cfg.params.kappa if kappa is None else kappa, cfg.params.s)


def initial_data(cfg, grid, p):
    """(a0, phi0) Fields for the configured preset."""
    ini = cfg.initial
    if ini.preset == "random_band":
        a0 = band_limited_random(grid, ini.max_mode, ini.amp, p.s, ini.seed)
        phi0 = band_limited_random(grid, ini.max_mode, ini.phase_amp, p.s, ini.seed + 1_000_003)
        return a0, phi0
    coords = grid.coordinates()
    if ini.preset == "gaussian_bump":
        r2 = sum((c - grid.period / 2.0) ** 2 for c in coords)
        shape = np.exp(-r2 / ini.width ** 2)
        return (Field(grid, ini.amp * shape, PHYSICAL, True),
                Field(grid, ini.phase_amp * shape, PHYSICAL, True))
    k = 2.0 * np.pi * ini.mode / grid.period
    arg = sum(k * c for c in coords)
    return (Field(grid, ini.amp * np.cos(arg), PHYSICAL, True),
            Field(grid, ini.phase_amp * np.sin(arg), PHYSICAL, True))


def check_small_data(cfg, a0, phi0, p):
    """M0 and regime flags; raises RegimeViolation when the threshold is enforced."""
    M0 = compute_M0(a0, phi0, p)
    threshold = ex.small_data_threshold(p, cfg.initial.threshold_factor)
    dev0 = float(np.max(np.abs(p.eps / SQRT2 * np.real(a0.physical()))))
    flags = {"M0": M0, "threshold": threshold, "within_threshold": M0 <= threshold,
             "initial_modulus_deviation": dev0}
    if M0 > threshold and cfg.initial.small_data == "enforce":
        raise RegimeViolation(f"M0 = {M0:.6g} exceeds the small-data threshold {threshold:.6g}", report=flags)
    if M0 > threshold and cfg.initial.small_data == "warn":
        warnings.warn(f"M0 = {M0:.6g} exceeds the small-data threshold {threshold:.6g}", RuntimeWarning)
    return flags


def solver_config(cfg, grid, p, t_end=None):
    so = cfg.solver
    dt = so.dt if so.dt is not None else default_dt(so.method, grid, p)
    return SolverConfig(dt=dt, t_end=so.t_end if t_end is None else t_end, method=so.method,
                        dealias=so.dealias, record_stride=so.record_stride)


def _header(grid, p, t, variable, is_complex, shape):
    return SnapshotHeader(grid.dim, grid.points_per_dim, grid.period, p.eps, p.kappa, p.s,
                          float(t), variable, bool(is_complex), tuple(shape))


# experiments ------------------------------------------------------------------


def exp_simulate(cfg, out, stem, progress):
    grid, p = make_grid(cfg), make_params(cfg)
    a0, phi0 = initial_data(cfg, grid, p)
    flags = check_small_data(cfg, a0, phi0, p)
    scfg = solver_config(cfg, grid, p)
    keep = bool(cfg.experiment.options.get("snapshots", False))
    artifacts = []
    err = None
    if scfg.method == "bv_direct":
        b0 = a0
        v0 = VectorField(grid, 2.0 * gradient(grid, np.real(phi0.physical())), PHYSICAL, True)
        if isinstance(progress, ProgressWriter):
            progress.header = "t,dev_inf"
        try:
            traj = integrate_bv(b0, v0, scfg, p, progress=progress)
        except (RegimeViolation, NumericalInstability) as exc:
            traj, err = exc.trajectory, exc
        columns = ["t", "dev_inf"]
        rows = [(d["t"], d["dev_inf"]) for d in traj.diagnostics]
        if keep:
            for j, h in enumerate(traj.snapshots):
                for name, arr in (("b", h.b.physical()), ("v", h.v.physical())):
                    artifacts += write_snapshot(out / "snapshots" / f"{name}_{j:05d}", arr,
                                                _header(grid, p, h.time, name, False, arr.shape))
    else:
        psi0 = build_psi(a0, phi0, p)
        try:
            traj = integrate(psi0, scfg, p, keep_snapshots=keep, progress=progress)
        except (RegimeViolation, NumericalInstability) as exc:
            traj, err = exc.trajectory, exc
        columns = ["t", "energy", "min_modulus", "dev_inf", "hs_norm_bz"]
        rows = [(d["t"], d["energy"], d["min_modulus"], d["dev_inf"], d.get("hs_norm_bz", math.nan))
                for d in traj.diagnostics]
        if keep:
            for j, (t, psi) in enumerate(zip(traj.times, traj.snapshots)):
                artifacts += write_snapshot(out / "snapshots" / f"psi_{j:05d}", psi,
                                            _header(grid, p, t, "psi", True, psi.shape))
    artifacts.append(write_csv(out / f"trajectory_{stem}.csv", columns, rows))
    summary = {
        "experiment": "simulate", "method": scfg.method, "n_records": len(rows),
        "t_final": rows[-1][0] if rows else 0.0, "truncated": traj.truncated, **flags,
    }
    if scfg.method != "bv_direct" and rows:
        summary["energy_initial"] = rows[0][1]
        summary["energy_final"] = rows[-1][1]
        summary["min_modulus"] = min(r[2] for r in rows)
    series = {"energy": ([r[0] for r in rows], [r[1] for r in rows])} if scfg.method != "bv_direct" else {}
    return summary, artifacts, series, err


def _t_samples(opts):
    n = int(round(opts["t_window"] / opts["t_stride"]))
    return opts["t_stride"] * np.arange(n + 1)


def _comparison_rows(res):
    return [(res.eps, res.kappa, t, m, model, e) for t, m, model, e in res.rows()]


COMPARE_COLUMNS = ["eps", "kappa", "t", "m", "model", "error"]


def comparison_summary(res):
    s = res.summary()
    fits, early = {}, {}
    for m in res.orders:
        if len(res.times) >= 3:
            fits[str(m)] = ex.loglog_fit(res.times, res.errors[m], "t", "final_third").to_dict()
            early[str(m)] = ex.loglog_fit(res.times, res.errors[m], "t", "first_third").to_dict()
    s["fits"] = fits
    s["fits_early"] = early
    s["envelope_constant"] = ex.envelope_constant(res, normalized=False)
    s["envelope_constant_normalized"] = ex.envelope_constant(res, normalized=True)
    return s


def exp_compare(cfg, out, stem, progress):
    grid, p = make_grid(cfg), make_params(cfg)
    a0, phi0 = initial_data(cfg, grid, p)
    flags = check_small_data(cfg, a0, phi0, p)
    opts = cfg.experiment.options
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = ex.run_comparison(a0, phi0, p, opts["model"], _t_samples(opts), method=_psi_method(cfg),
                                dt=cfg.solver.dt, dealias=cfg.solver.dealias)
    artifacts = [write_csv(out / f"comparison_{stem}.csv", COMPARE_COLUMNS, _comparison_rows(res))]
    summary = {"experiment": "compare", **comparison_summary(res), **flags}
    series = {f"e{m}": (res.times, res.errors[m]) for m in res.orders}
    return summary, artifacts, series, None


def _psi_method(cfg):
    return cfg.solver.method if cfg.solver.method != "bv_direct" else "strang_exact"


def _sweep_job(args):
    text, eps, kappa = args
    cfg = parse_config(text)
    grid = make_grid(cfg)
    p = make_params(cfg, eps, kappa)
    a0, phi0 = initial_data(cfg, grid, p)
    opts = cfg.experiment.options
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return ex.run_comparison(a0, phi0, p, opts["model"], _t_samples(opts), method=_psi_method(cfg),
                                 dt=cfg.solver.dt, dealias=cfg.solver.dealias)


def exp_sweep(cfg, out, stem, progress):
    opts = cfg.experiment.options
    points = ex.sweep_points({"eps": cfg.params.eps, "kappa": cfg.params.kappa}, opts["sweep"], opts["n_points"])
    text = cfg.to_ini()
    jobs = [(text, pt["eps"], pt["kappa"]) for pt in points]
    if opts["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts["workers"]) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    rows = [row for res in results for row in _comparison_rows(res)]
    artifacts = [write_csv(out / f"sweep_{stem}.csv", COMPARE_COLUMNS, rows)]
    fit = ex.sweep_and_fit(results, opts["sweep"])
    per_run = [comparison_summary(r) for r in results]
    constants = [r["envelope_constant_normalized"] for r in per_run]
    summary = {
        "experiment": "sweep", "sweep": opts["sweep"], "fit": fit.to_dict(), "runs": per_run,
        "envelope_constants_normalized": constants,
        "truncated": any(r.truncated for r in results),
    }
    if len(results) > 1:
        summary["halving_ratios"] = ex.halving_ratios(constants).tolist() if min(constants) > 0 else []
    series = {"peak_vs_eps": ([r.eps for r in results], [float(np.max(r.errors[r.lowest_order])) for r in results])}
    return summary, artifacts, series, None


def exp_verify_semigroup(cfg, out, stem, progress):
    p = make_params(cfg)
    opts = cfg.experiment.options
    xi, t = default_bound_sweep(p, n_xi=opts["n_xi"], n_t=opts["n_t"])
    report = verify_semigroup_bounds(p, xi, t, n_directions=opts["n_directions"])
    artifacts = [write_json(out / f"bounds_{stem}.json", report.__dict__)]
    rows = [(name, r["C"], r["c"] if r["c"] is not None else math.nan, r["worst_ratio_xi"],
             r["worst_ratio_t"], r["n_xi"], r["finite"]) for name, r in sorted(report.regimes.items())]
    artifacts.append(write_csv(out / f"bounds_{stem}.csv",
                               ["regime", "C", "c", "worst_xi", "worst_t", "n_xi", "finite"], rows))
    summary = {"experiment": "verify-semigroup", "regimes": report.regimes, "sweep": report.sweep,
               "truncated": False}
    return summary, artifacts, {}, None


def exp_diagnostics(cfg, out, stem, progress):
    grid, p = make_grid(cfg), make_params(cfg)
    a0, phi0 = initial_data(cfg, grid, p)
    flags = check_small_data(cfg, a0, phi0, p)
    scfg = solver_config(cfg, grid, p)
    err = None
    try:
        traj = integrate(build_psi(a0, phi0, p), scfg, p, progress=progress)
    except (RegimeViolation, NumericalInstability) as exc:
        traj, err = exc.trajectory, exc
    opts = cfg.experiment.options
    artifacts = []
    summary = {"experiment": "diagnostics", "truncated": traj.truncated, **flags}
    series = {}
    ctrl = ex.control_function(traj, p, flags["M0"])
    artifacts.append(write_csv(out / f"control_{stem}.csv", ["t", "H", "H_over_M0"],
                               zip(ctrl.times, ctrl.H, ctrl.ratio)))
    summary["control"] = {"H_max": float(ctrl.H.max()), "H_over_M0_max": float(ctrl.ratio.max()),
                          "bracket_C1": ctrl.bracket}
    series["H"] = (ctrl.times, ctrl.H)
    if len(traj.snapshots) >= 3:
        en = ex.energy_inequality_monitor(traj, p, opts["k"])
        artifacts.append(write_csv(out / f"energy_inequality_{stem}.csv", ["t", "lhs", "rhs", "running_K"],
                                   zip(en.times, en.lhs, en.rhs, en.running_K)))
        summary["energy_inequality"] = {"k": en.k, "K": en.K, "signed_ratio": en.signed_ratio,
                                        "anomalies": en.anomalies}
        if opts["residuals"]:
            rbz = ex.residual_bz(traj, p)
            rbv = ex.residual_bv_reformulated(traj, p)
            artifacts.append(write_csv(out / f"residuals_{stem}.csv", ["t", "residual_bz", "residual_bv"],
                                       zip(rbz.times, rbz.residual, rbv.residual)))
            summary["residuals"] = {"stride": rbz.stride, "bz_max": rbz.max, "bv_max": rbv.max}
            series["residual_bz"] = (rbz.times, rbz.residual)
    else:
        summary["note"] = "fewer than 3 snapshots: centered-difference diagnostics skipped"
    return summary, artifacts, series, err


EXPERIMENT_FUNCS = {
    "simulate": exp_simulate,
    "compare": exp_compare,
    "sweep": exp_sweep,
    "verify-semigroup": exp_verify_semigroup,
    "diagnostics": exp_diagnostics,
}


# orchestration ----------------------------------------------------------------------


def _status_of(exc):
    if exc is None:
        return EXIT_OK
    return getattr(exc, "exit_code", 1)


def run(cfg, config_text=None, out_root=None, progress=None, command=None):
    """Dispatch the configured experiment; artifacts and manifest go under ``out_root``."""
    if not isinstance(cfg, RunConfig):
        raise TypeError("run expects a RunConfig")
    text = config_text if config_text is not None else cfg.to_ini()
    name = cfg.experiment.name
    stem = run_stem(cfg.params.eps, cfg.params.kappa, cfg.grid.n, cfg.initial.seed)
    out = Path(out_root if out_root is not None else cfg.output) / f"{name}_{stem}"
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    artifacts, series, summary, err = [], {}, {"experiment": name}, None
    try:
        summary, artifacts, series, err = EXPERIMENT_FUNCS[name](cfg, out, stem, progress)
    except CGLWaveError as exc:
        err = exc
        summary = {"experiment": name, "truncated": True}
    status = _status_of(err)
    if err is not None:
        summary["error"] = {"type": type(err).__name__, "message": str(err),
                            "report": getattr(err, "report", None) or getattr(err, "diagnostics", None)}
        artifacts.append(write_json(out / f"error_{stem}.json", summary["error"]))
    summary["status"] = status
    report = emit_report([summary], out, series)
    artifacts.append(write_json(out / f"summary_{stem}.json", summary))
    wall = time.perf_counter() - t0
    manifest = build_manifest(text, cfg.initial.seed, wall, artifacts, command or name, status,
                              {"effective_config": cfg.to_ini()})
    write_json(out / "manifest.json", manifest)
    return RunOutcome(status, out, artifacts, summary, report)


def emit_report(summaries, out_dir=None, series=None):
    """Human-readable summary table plus two-column plot-data files."""
    if not summaries:
        return ""
    lines = []
    for s in summaries:
        name = s.get("experiment", "?")
        flag = "  [TRUNCATED]" if s.get("truncated") else ""
        lines.append(f"== {name} (status {s.get('status', 0)}){flag}")
        for key in ("M0", "threshold", "within_threshold", "method", "t_final", "energy_final",
                    "min_modulus", "envelope_constant", "envelope_constant_normalized"):
            if key in s:
                lines.append(f"  {key:<30} {_short(s[key])}")
        for key, label in (("fits_early", "early"), ("fits", "final third")):
            if key not in s:
                continue
            lines.append(f"  {'m':<4} {'slope':>12} {'stderr':>12}   window ({label})")
            for m, fit in sorted(s[key].items()):
                lines.append(f"  {m:<4} {_short(fit['slope']):>12} {_short(fit['stderr']):>12}   "
                             f"[{_short(fit['window'][0])}, {_short(fit['window'][1])}]")
        if "fit" in s:
            f = s["fit"]
            lines.append(f"  fit vs {f['abscissa']}: slope {_short(f['slope'])} +- {_short(f['stderr'])}")
        if "halving_ratios" in s:
            lines.append(f"  halving ratios {', '.join(_short(r) for r in s['halving_ratios'])}")
        if "regimes" in s:
            for rname, r in sorted(s["regimes"].items()):
                lines.append(f"  regime {rname:<6} C={_short(r['C'])} c={_short(r['c'])} finite={r['finite']}")
        for key in ("control", "energy_inequality", "residuals"):
            if key in s:
                parts = ", ".join(f"{k}={_short(v)}" for k, v in s[key].items() if k != "anomalies")
                lines.append(f"  {key}: {parts}")
        if "error" in s:
            lines.append(f"  error: {s['error']['type']}: {s['error']['message']}")
    text = "\n".join(lines) + "\n"
    if out_dir is not None:
        out_dir = Path(out_dir)
        (out_dir / "report.txt").write_text(text, encoding="utf-8")
        for key, (x, y) in (series or {}).items():
            write_plot_data(out_dir / f"plot_{key}.dat", x, y, "x", key)
    return text


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


class ProgressWriter:
    """CSV progress lines to a stream, with a header written once."""

    def __init__(self, stream=None, header="t,energy,min_modulus"):
        self.stream = stream or sys.stdout
        self.header = header
        self.started = False

    def write(self, line):
        if not self.started:
            self.stream.write(self.header + "\n")
            self.started = True
        self.stream.write(line)
