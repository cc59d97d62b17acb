"""Desk-scale experiments: comparison with linear models, scaling fits,
residual checks of the (b, z) and (b, v) systems, energy diagnostics and
the control function H.

Time frames: trajectories live in the parabolic ("b") frame; comparison
results are reported in the slow ("a") frame with t_a = t_b / eps.
"""
from dataclasses import asdict, dataclass, field
import math
import warnings

import numpy as np
from scipy import stats

from .errors import ConfigurationError, RegimeViolation
from .hydro import SQRT2, build_psi, compute_M0, hydro_arrays
from .linear import propagate_damped_wave, propagate_parabolic
from .solver import SolverConfig, default_dt, integrate, tilde_nonlinearities
from .spectral import (
    PHYSICAL,
    Field,
    VectorField,
    divergence,
    dk_square_array,
    gamma_seminorm_array,
    gl_energy_array,
    gradient,
    laplacian,
    sobolev_norm_array,
)

MODELS = ("damped_wave", "parabolic")
SWEEPS = ("halve_eps_fixed_nu", "halve_eps_fixed_kappa", "vary_t")
NOISE_FLOOR = 1e-12

BZ_MUTATIONS = ("flip_grad_zz", "flip_div_b_re_z", "flip_kappa_i_grad_b")
BV_MUTATIONS = ("flip_f1", "flip_h0_zz", "flip_g2")


# comparison -------------------------------------------------------------------


@dataclass
class ComparisonResult:
    times: np.ndarray
    errors: dict
    model: str
    eps: float
    kappa: float
    nu: float
    M0: float
    grid: dict
    truncated: bool = False
    warnings: list = field(default_factory=list)

    @property
    def lowest_order(self):
        return min(self.errors)

    @property
    def orders(self):
        return sorted(self.errors)

    def rows(self):
        """(t, m, model, error) rows in time-major order."""
        for j, t in enumerate(self.times):
            for m in self.orders:
                yield float(t), int(m), self.model, float(self.errors[m][j])

    def summary(self):
        return {
            "model": self.model, "eps": self.eps, "kappa": self.kappa, "nu": self.nu,
            "M0": self.M0, "grid": self.grid, "truncated": self.truncated,
            "n_times": int(len(self.times)), "warnings": list(self.warnings),
            "max_error": {str(m): float(np.max(e)) if len(e) else 0.0 for m, e in self.errors.items()},
        }


def sample_lattice(t_samples):
    """Common stride h and integer indices k with t_j = k_j h."""
    t = np.asarray(t_samples, dtype=np.float64)
    if t.ndim != 1 or t.size == 0:
        raise ConfigurationError("t_samples must be a non-empty 1-D sequence")
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ConfigurationError("t_samples must be non-negative and strictly increasing")
    positive = t[t > 0]
    if positive.size == 0:
        return 0.0, np.zeros(t.size, dtype=int)
    h = float(np.min(np.diff(np.concatenate([[0.0], positive]))))
    k = np.rint(t / h)
    if np.max(np.abs(k * h - t)) > 1e-9 * max(1.0, t.max()):
        raise ConfigurationError("t_samples must be integer multiples of a common stride")
    return h, k.astype(int)


def comparison_errors(grid, b, v, a_l, u_l, s):
    out = {}
    for m in (s - 2, s - 1, s):
        out[m] = math.sqrt(sobolev_norm_array(grid, b - a_l, m) ** 2 + sobolev_norm_array(grid, v - u_l, m) ** 2)
    return out


def linear_model(model, a0, u0, p, t):
    if model == "damped_wave":
        return propagate_damped_wave(a0, u0, p.nu, t)
    if model == "parabolic":
        return propagate_parabolic(a0, u0, p, t)
    raise ConfigurationError(f"model must be one of {MODELS}, got {model!r}")


def run_comparison(a0, phi0, p, model, t_samples, *, method="strang_exact", dt=None, dealias=True):
    """Compare CGL (via Psi, b-frame) with an exact linear model (a-frame)."""
    if model not in MODELS:
        raise ConfigurationError(f"model must be one of {MODELS}, got {model!r}")
    grid = a0.grid
    p.check_dimension(grid.dim)
    h_a, idx = sample_lattice(t_samples)
    t_samples = np.asarray(t_samples, dtype=np.float64)
    notes = []
    a_arr = np.real(a0.physical())
    dev0 = float(np.max(np.abs(p.eps / SQRT2 * a_arr))) if a_arr.size else 0.0
    if dev0 >= 0.25:
        msg = f"||Psi0|^2 - 1|_inf = {dev0:.3g} >= 1/4: outside the small-data regime"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    psi0 = build_psi(a0, phi0, p)
    u0 = VectorField(grid, 2.0 * gradient(grid, np.real(phi0.physical())), PHYSICAL, True)
    M0 = compute_M0(a0, phi0, p)

    snapshots = {}
    truncated = False
    if idx.max() > 0:
        h_b = p.eps * h_a
        base_dt = dt if dt is not None else default_dt(method, grid, p)
        per_sample = max(1, math.ceil(h_b / base_dt - 1e-9))
        cfg = SolverConfig(dt=h_b / per_sample, t_end=h_b * int(idx.max()), method=method,
                           dealias=dealias, record_stride=per_sample)
        try:
            traj = integrate(psi0, cfg, p, hydro_norms=False)
        except RegimeViolation as exc:
            traj = exc.trajectory
            truncated = True
            notes.append(str(exc))
        for k, psi in enumerate(traj.snapshots):
            snapshots[k] = psi
    else:
        snapshots[0] = np.asarray(psi0.physical(), dtype=np.complex128)

    s = p.s
    errors = {m: [] for m in (s - 2, s - 1, s)}
    times = []
    for t, k in zip(t_samples, idx):
        if k not in snapshots:
            truncated = True
            break
        b, v, _ = hydro_arrays(grid, snapshots[k], p.eps)
        a_l, u_l = linear_model(model, a0, u0, p, float(t))
        for m, e in comparison_errors(grid, b, v, a_l, u_l, s).items():
            errors[m].append(e)
        times.append(float(t))
    return ComparisonResult(
        times=np.asarray(times),
        errors={m: np.asarray(e) for m, e in errors.items()},
        model=model, eps=p.eps, kappa=p.kappa, nu=p.nu, M0=M0,
        grid={"dim": grid.dim, "n": grid.points_per_dim, "L": grid.period},
        truncated=truncated, warnings=notes,
    )


def envelope_prefactor(result, t):
    """(eps kappa t)^(1/2) (max(1, 1/nu) M0^2 + M0 / nu) of the time-resolved low-order estimate."""
    nu = result.nu
    amp = max(1.0, 1.0 / nu) * result.M0 ** 2 + result.M0 / nu
    return np.sqrt(result.eps * result.kappa * np.asarray(t)) * amp


def envelope_constant(result, m=None, normalized=True):
    """Smallest C with e_m(t) <= C * envelope(t) over the sampled t > 0."""
    m = result.lowest_order if m is None else m
    t = result.times
    e = result.errors[m]
    sel = t > 0
    if not sel.any():
        return 0.0
    if normalized:
        denom = envelope_prefactor(result, t[sel])
    else:
        denom = np.sqrt(result.eps * result.kappa * t[sel])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denom > 0, e[sel] / denom, 0.0)
    return float(np.max(ratio))


# fitting ----------------------------------------------------------------------


@dataclass
class ScalingFit:
    abscissa: str
    slope: float
    stderr: float
    constant: float
    residual: float
    window: tuple
    n_points: int
    inconclusive: bool = False

    def to_dict(self):
        return asdict(self)


def loglog_fit(x, y, abscissa="t", window="final_third"):
    """Least-squares fit log y = slope log x + log constant.

    ``window`` is "all", "final_third", "first_third" or an explicit (lo, hi) range of x.
    Values at or below the noise floor are censored.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = (x > 0) & np.isfinite(y)
    x, y = x[keep], y[keep]
    order = np.argsort(x)
    x, y = x[order], y[order]
    if window == "final_third" and x.size:
        lo, hi = x[0] + (x[-1] - x[0]) * 2.0 / 3.0, x[-1]
    elif window == "first_third" and x.size:
        lo, hi = x[0], x[0] + (x[-1] - x[0]) / 3.0
    elif window == "all" and x.size:
        lo, hi = x[0], x[-1]
    elif isinstance(window, (tuple, list)):
        lo, hi = float(window[0]), float(window[1])
    else:
        lo, hi = 0.0, 0.0
    sel = (x >= lo * (1 - 1e-12)) & (x <= hi * (1 + 1e-12)) & (y > NOISE_FLOOR)
    xs, ys = x[sel], y[sel]
    if xs.size < 2 or np.ptp(np.log(xs)) == 0:
        return ScalingFit(abscissa, float("nan"), float("nan"), float("nan"), float("nan"),
                          (float(lo), float(hi)), int(xs.size), inconclusive=True)
    lx, ly = np.log(xs), np.log(ys)
    reg = stats.linregress(lx, ly)
    resid = ly - (reg.intercept + reg.slope * lx)
    stderr = float(reg.stderr) if xs.size > 2 else 0.0
    return ScalingFit(
        abscissa=abscissa, slope=float(reg.slope), stderr=stderr,
        constant=float(np.exp(reg.intercept)), residual=float(np.sqrt(np.mean(resid ** 2))),
        window=(float(lo), float(hi)), n_points=int(xs.size),
    )


def sweep_points(base, sweep, n_points=3):
    """Parameter list for a sweep; ``base`` has eps, kappa and optionally t_end."""
    if sweep not in SWEEPS:
        raise ConfigurationError(f"sweep must be one of {SWEEPS}, got {sweep!r}")
    if n_points < 3:
        raise ConfigurationError("a sweep needs at least 3 points")
    eps, kappa = float(base["eps"]), float(base["kappa"])
    if sweep == "halve_eps_fixed_nu":
        nu = kappa / eps
        return [{"eps": eps / 2 ** j, "kappa": nu * eps / 2 ** j} for j in range(n_points)]
    if sweep == "halve_eps_fixed_kappa":
        return [{"eps": eps / 2 ** j, "kappa": kappa} for j in range(n_points)]
    return [{"eps": eps, "kappa": kappa}]


def sweep_and_fit(results, sweep, m=None, window="final_third"):
    """Fit a log-log slope from comparison results of a sweep.

    ``vary_t`` uses the time-resolved errors of the single run; the eps sweeps
    use the peak error of each run against eps.
    """
    if sweep not in SWEEPS:
        raise ConfigurationError(f"sweep must be one of {SWEEPS}, got {sweep!r}")
    if sweep == "vary_t":
        res = results[0] if isinstance(results, (list, tuple)) else results
        m = res.lowest_order if m is None else m
        if len(res.times) < 3:
            raise ConfigurationError("vary_t needs at least 3 sample times")
        return loglog_fit(res.times, res.errors[m], "t", window)
    if len(results) < 3:
        raise ConfigurationError("a sweep needs at least 3 runs")
    m = results[0].lowest_order if m is None else m
    x = [r.eps for r in results]
    y = [float(np.max(r.errors[m])) if len(r.errors[m]) else 0.0 for r in results]
    return loglog_fit(x, y, "eps", "all")


def halving_ratios(values):
    """Successive ratios max(a, b) / min(a, b) along a sweep."""
    v = np.asarray(values, dtype=np.float64)
    return np.maximum(v[:-1], v[1:]) / np.minimum(v[:-1], v[1:])


# trajectory helpers ----------------------------------------------------------------


def trajectory_fields(traj, p):
    """List of (t, b, v, z) arrays from a Psi or hydro trajectory."""
    out = []
    for t, snap in zip(traj.times, traj.snapshots):
        if traj.kind == "psi":
            b, v, z = hydro_arrays(traj.grid, snap, p.eps)
        else:
            b = np.real(snap.b.physical())
            v = np.real(snap.v.physical())
            z = np.asarray(snap.z.physical())
        out.append((t, b, v, z))
    return out


def uniform_stride(times):
    t = np.asarray(times, dtype=np.float64)
    if t.size < 3:
        raise ConfigurationError("centered differences need at least 3 snapshots")
    d = np.diff(t)
    if np.ptp(d) > 1e-9 * max(d.max(), 1e-300):
        raise ConfigurationError("snapshots must be equally spaced in time")
    return float(d.mean())


@dataclass
class ResidualSeries:
    times: np.ndarray
    residual: np.ndarray
    components: dict
    stride: float
    mutation: str | None = None

    @property
    def max(self):
        return float(np.max(self.residual)) if self.residual.size else 0.0


def _l2(grid, values):
    return float(np.sqrt(grid.integrate(np.sum(np.abs(values) ** 2, axis=tuple(range(values.ndim - grid.dim))))))


def zz(z):
    """<z, z> = sum_i z_i^2 (bilinear, no conjugation)."""
    return np.sum(z * z, axis=0)


def bz_rhs(grid, b, z, p, mutation=None):
    """(db/dt, dz/dt) of the (b, z) system."""
    eps, kappa = p.eps, p.kappa
    re, im = np.real(z), np.imag(z)
    w = SQRT2 / eps + b
    grad_b = gradient(grid, b)
    sign_zz = -1.0 if mutation == "flip_grad_zz" else 1.0
    sign_brz = -1.0 if mutation == "flip_div_b_re_z" else 1.0
    sign_kgb = -1.0 if mutation == "flip_kappa_i_grad_b" else 1.0
    db = (
        -SQRT2 / eps * divergence(grid, re)
        + kappa * (-w * divergence(grid, im) - 0.5 * w * np.real(zz(z)) - SQRT2 / eps * w * b)
        - sign_brz * divergence(grid, b * re)
    )
    lap_z = np.stack([laplacian(grid, c) for c in z])
    dz = (
        -SQRT2 / eps * grad_b
        + (kappa + 1j) * lap_z
        + sign_zz * (-1.0 + kappa * 1j) / 2.0 * gradient(grid, zz(z))
        + sign_kgb * kappa * SQRT2 / eps * 1j * grad_b
    )
    return db, dz


def residual_bz(traj, p, mutation=None):
    """L^2 norm of centered-difference d/dt (b, z) minus the (b, z) right-hand side."""
    if mutation is not None and mutation not in BZ_MUTATIONS:
        raise ConfigurationError(f"mutation must be one of {BZ_MUTATIONS}")
    frames = trajectory_fields(traj, p)
    h = uniform_stride([f[0] for f in frames])
    grid = traj.grid
    times, res, rb, rz = [], [], [], []
    for j in range(1, len(frames) - 1):
        _, b0, _, z0 = frames[j - 1]
        t, b, _, z = frames[j]
        _, b2, _, z2 = frames[j + 1]
        db, dz = bz_rhs(grid, b, z, p, mutation)
        eb = _l2(grid, (b2 - b0) / (2.0 * h) - db)
        ez = _l2(grid, (z2 - z0) / (2.0 * h) - dz)
        times.append(t)
        rb.append(eb)
        rz.append(ez)
        res.append(math.hypot(eb, ez))
    return ResidualSeries(np.asarray(times), np.asarray(res),
                          {"b": np.asarray(rb), "z": np.asarray(rz)}, h, mutation)


def fg_groups(grid, b, z, p):
    """f0, f1, h0, h1 with f = nu f0 + f1 and g = grad h0 + eps grad h1."""
    eps, kappa = p.eps, p.kappa
    re, im = np.real(z), np.imag(z)
    z_sq = np.sum(np.abs(z) ** 2, axis=0)
    f0 = -(1.0 + eps / SQRT2 * b) * z_sq / SQRT2 - SQRT2 * b * b
    f1 = -divergence(grid, b * re)
    h0 = -kappa * np.sum(re * im, axis=0) - 0.5 * np.real(zz(z))
    h1 = divergence(grid, b * im) / SQRT2
    return {"f0": f0, "f1": f1, "h0": h0, "h1": h1}


def fg_nonlinearities(grid, b, z, p, mutation=None):
    """(f, g) of the reformulated (b, v) system from its groupings."""
    gr = fg_groups(grid, b, z, p)
    f1 = -gr["f1"] if mutation == "flip_f1" else gr["f1"]
    h0 = gr["h0"]
    if mutation == "flip_h0_zz":
        h0 = h0 + np.real(zz(z))  # -1/2 Re<z,z>  ->  +1/2 Re<z,z>
    h1 = -gr["h1"] if mutation == "flip_g2" else gr["h1"]
    f = p.nu * gr["f0"] + f1
    g = gradient(grid, h0) + p.eps * gradient(grid, h1)
    return f, g


def fg_identity_defect(grid, b, v, p):
    """max |f - f~| and max |g - (g~ - (eps/sqrt2) grad Lap b)| at one state."""
    rho_sq = 1.0 + p.eps / SQRT2 * b
    z = v - 1j * gradient(grid, np.log(rho_sq))
    f, g = fg_nonlinearities(grid, b, z, p)
    ft, gt = tilde_nonlinearities(grid, b, v, p, dealias=False)
    g_ref = gt - p.eps / SQRT2 * gradient(grid, laplacian(grid, b))
    return float(np.max(np.abs(f - ft))), float(np.max(np.abs(g - g_ref)))


def bv_reformulated_rhs(grid, b, v, z, p, mutation=None):
    eps, kappa, nu = p.eps, p.kappa, p.nu
    f, g = fg_nonlinearities(grid, b, z, p, mutation)
    lap_b = laplacian(grid, b)
    db = -SQRT2 / eps * divergence(grid, v) - 2.0 * nu / eps * b + kappa * lap_b + f
    dv = (-SQRT2 / eps * gradient(grid, b) + kappa * np.stack([laplacian(grid, c) for c in v])
          + eps / SQRT2 * gradient(grid, lap_b) + g)
    return db, dv


def residual_bv_reformulated(traj, p, mutation=None):
    """Centered-difference residual of the (b, v) system written with f and g."""
    if mutation is not None and mutation not in BV_MUTATIONS:
        raise ConfigurationError(f"mutation must be one of {BV_MUTATIONS}")
    frames = trajectory_fields(traj, p)
    h = uniform_stride([f[0] for f in frames])
    grid = traj.grid
    times, res, rb, rv = [], [], [], []
    for j in range(1, len(frames) - 1):
        _, b0, v0, _ = frames[j - 1]
        t, b, v, z = frames[j]
        _, b2, v2, _ = frames[j + 1]
        db, dv = bv_reformulated_rhs(grid, b, v, z, p, mutation)
        eb = _l2(grid, (b2 - b0) / (2.0 * h) - db)
        ev = _l2(grid, (v2 - v0) / (2.0 * h) - dv)
        times.append(t)
        rb.append(eb)
        rv.append(ev)
        res.append(math.hypot(eb, ev))
    return ResidualSeries(np.asarray(times), np.asarray(res),
                          {"b": np.asarray(rb), "v": np.asarray(rv)}, h, mutation)


def residual_convergence(coarse, fine):
    """Ratio of residuals at the common snapshot times of two stride levels."""
    common = np.intersect1d(np.round(coarse.times, 12), np.round(fine.times, 12))
    if common.size == 0:
        raise ConfigurationError("residual series share no snapshot times")
    rc = np.interp(common, coarse.times, coarse.residual)
    rf = np.interp(common, fine.times, fine.residual)
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.max(rc) / np.max(rf))


# energy inequality -------------------------------------------------------------


@dataclass
class EnergyDiagnostics:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    running_K: np.ndarray
    k: int
    anomalies: list = field(default_factory=list)
    L_bz: np.ndarray | None = None

    @property
    def K(self):
        return float(self.running_K[-1]) if self.running_K.size else 0.0

    @property
    def signed_ratio(self):
        """max LHS / RHS without clamping; negative when dissipation dominates."""
        ok = self.rhs > 0
        return float(np.max(self.lhs[ok] / self.rhs[ok])) if ok.any() else 0.0


def dk_linf(grid, values, k):
    return float(np.sqrt(np.max(dk_square_array(grid, values, k))))


def l_functional(grid, b, z, p):
    """||(1 + eps b)|z|^2||_{H^s} + ||b^2||_{H^s} + ||b z||_{H^s} + ||<z,z>||_{H^s}."""
    s = p.s
    z_sq = np.sum(np.abs(z) ** 2, axis=0)
    return (
        sobolev_norm_array(grid, (1.0 + p.eps * b) * z_sq, s)
        + sobolev_norm_array(grid, b * b, s)
        + sobolev_norm_array(grid, b * z, s)
        + sobolev_norm_array(grid, zz(z), s)
    )


def energy_inequality_monitor(traj, p, k, tol=1e-12, with_L=False):
    """LHS = d/dt(Gamma^k + E) + (kappa/2)(Gamma^{k+1} + eps^-2 Gamma^k(b, 0)),
    RHS = (nu |b|_inf + kappa |(b,z)|_inf^2 + |(Db, Dz)|_inf)(Gamma^k + E),
    and the running smallest K with LHS <= K RHS.
    """
    if not 1 <= k <= p.s:
        raise ConfigurationError(f"k must satisfy 1 <= k <= s = {p.s}")
    if traj.kind != "psi":
        raise ConfigurationError("energy_inequality_monitor needs a Psi trajectory")
    grid = traj.grid
    h = uniform_stride(traj.times)
    eps, kappa, nu = p.eps, p.kappa, p.nu
    energy, gk, gk1, gk_b, amp, L = [], [], [], [], [], []
    for psi in traj.snapshots:
        b, _, z = hydro_arrays(grid, psi, eps)
        energy.append(gl_energy_array(grid, psi, eps))
        gk.append(gamma_seminorm_array(grid, b, z, k, eps))
        gk1.append(gamma_seminorm_array(grid, b, z, k + 1, eps))
        gk_b.append(gamma_seminorm_array(grid, b, None, k, eps))
        bz_inf = float(np.sqrt(np.max(b * b + np.sum(np.abs(z) ** 2, axis=0))))
        d_inf = float(np.sqrt(np.max(dk_square_array(grid, b, 1) + dk_square_array(grid, z, 1))))
        amp.append(nu * float(np.max(np.abs(b))) + kappa * bz_inf ** 2 + d_inf)
        if with_L:
            L.append(l_functional(grid, b, z, p))
    energy, gk, gk1, gk_b, amp = map(np.asarray, (energy, gk, gk1, gk_b, amp))
    total = gk + energy
    lhs = (total[2:] - total[:-2]) / (2.0 * h) + 0.5 * kappa * (gk1[1:-1] + gk_b[1:-1] / eps ** 2)
    rhs = amp[1:-1] * total[1:-1]
    times = np.asarray(traj.times[1:-1])
    anomalies = []
    ratio = np.zeros_like(lhs)
    for j in range(lhs.size):
        if rhs[j] > 0:
            ratio[j] = max(lhs[j], 0.0) / rhs[j]
        elif lhs[j] > tol:
            anomalies.append({"t": float(times[j]), "lhs": float(lhs[j])})
    running = np.maximum.accumulate(ratio) if ratio.size else ratio
    return EnergyDiagnostics(times, lhs, rhs, running, k, anomalies,
                             np.asarray(L) if with_L else None)


# control function ---------------------------------------------------------------


@dataclass
class ControlSeries:
    times: np.ndarray
    H: np.ndarray
    sup_hs: np.ndarray
    int_hs_sq: np.ndarray
    int_binf_sq: np.ndarray
    M0: float
    bracket: float

    @property
    def ratio(self):
        if self.M0 == 0:
            return np.zeros_like(self.H)
        return self.H / self.M0


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def control_function(traj, p, M0=None):
    """H(t) = sup ||(b,z)||_{H^s} + (int ||(b,z)||_{H^s}^2)^(1/2) / (kappa^(1/2) max(1, 1/nu))
              + (int ||b||_inf^2)^(1/2) / (eps / nu)^(1/2)."""
    grid = traj.grid
    eps, kappa, nu, s = p.eps, p.kappa, p.nu, p.s
    hs, binf = [], []
    for _, b, _, z in trajectory_fields(traj, p):
        hs.append(math.sqrt(sobolev_norm_array(grid, b, s) ** 2 + sobolev_norm_array(grid, z, s) ** 2))
        binf.append(float(np.max(np.abs(b))) if b.size else 0.0)
    t = np.asarray(traj.times, dtype=np.float64)
    hs, binf = np.asarray(hs), np.asarray(binf)
    sup = np.maximum.accumulate(hs) if hs.size else hs
    i_hs = _cumtrapz(hs ** 2, t)
    i_b = _cumtrapz(binf ** 2, t)
    H = sup + np.sqrt(i_hs) / (math.sqrt(kappa) * max(1.0, 1.0 / nu)) + np.sqrt(i_b) / math.sqrt(eps / nu)
    if M0 is None:
        M0 = float("nan")
    bracket = float(H[0] / M0) if H.size and M0 and np.isfinite(M0) else 0.0
    return ControlSeries(t, H, sup, i_hs, i_b, float(M0), bracket)


# small-data regime ----------------------------------------------------------------


def small_data_threshold(p, factor=0.1):
    """Operational threshold factor * min(nu, 1/kappa, 1/eps) on M0."""
    return factor * min(p.nu, 1.0 / p.kappa, 1.0 / p.eps)


def scale_to_threshold(a0, phi0, p, fraction=1.0, factor=0.1):
    """Rescale (a0, phi0) jointly so that M0 = fraction * threshold (M0 is not homogeneous
    in the amplitude because of the eps H^{s+1} term, but it is linear)."""
    M0 = compute_M0(a0, phi0, p)
    if M0 == 0:
        return a0, phi0
    lam = fraction * small_data_threshold(p, factor) / M0
    grid = a0.grid
    return (Field(grid, np.real(a0.physical()) * lam, PHYSICAL, True),
            Field(grid, np.real(phi0.physical()) * lam, PHYSICAL, True))
