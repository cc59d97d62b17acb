"""Time integration of the parabolic-scaled complex Ginzburg-Landau equation

    d/dt Psi = (kappa + i) [Lap Psi + eps^-2 Psi (1 - |Psi|^2)]

plus a direct integrator of the (b, v) system used as a cross-check.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from .errors import ConfigurationError, NumericalInstability, RegimeViolation
from .hydro import (
    SQRT2,
    d_from_v_hat,
    hydro_arrays,
    hydro_from_bv,
    symbol_c,
    v_hat_from_d,
    bz_norm,
)
from .linear import cd_flow, semigroup_closed_form
from .spectral import PHYSICAL, Field, gradient, divergence, gl_energy_array

METHODS = ("strang_exact", "rk4_reference", "bv_direct")
C_STAB = 0.5
BLOWUP_FACTOR = 1e6


@dataclass
class SolverConfig:
    dt: float
    t_end: float
    method: str = "strang_exact"
    dealias: bool = True
    record_stride: int = 1

    def validate(self, grid=None, p=None):
        problems = []
        if self.method not in METHODS:
            problems.append(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.dt > 0:
            problems.append("dt must be positive")
        if not self.t_end >= self.dt:
            problems.append("dt must not exceed t_end")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            problems.append("record_stride must be an integer >= 1")
        if self.method == "rk4_reference" and grid is not None and p is not None:
            bound = rk4_stability_bound(grid, p)
            if self.dt > bound:
                problems.append(f"rk4_reference needs dt <= {bound:.6g} (stiff stability bound)")
        if problems:
            raise ConfigurationError("; ".join(problems), problems)
        return self

    def steps(self):
        """Number of steps; dt is shrunk slightly when it does not divide t_end."""
        n = max(1, math.ceil(self.t_end / self.dt - 1e-9))
        return n, self.t_end / n


def rk4_stability_bound(grid, p):
    xi_max_sq = float(grid.xi_sq.max())
    return C_STAB * min(p.eps ** 2 / p.kappa, 1.0 / (p.kappa * xi_max_sq))


def default_dt(method, grid, p):
    if method == "strang_exact":
        return p.eps ** 2 / 4.0
    if method == "rk4_reference":
        xi_max_sq = float(grid.xi_sq.max())
        return 0.9 * min(0.1 * p.eps ** 2, 0.5 / (p.kappa * xi_max_sq))
    return p.eps ** 2 / 8.0


@dataclass
class Trajectory:
    """Recorded snapshots with per-snapshot diagnostics."""

    grid: object
    params: object
    config: SolverConfig
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    kind: str = "psi"
    seed: int | None = None
    truncated: bool = False

    def append(self, t, snap, diag):
        self.times.append(float(t))
        if snap is not None:
            self.snapshots.append(snap)
        self.diagnostics.append(diag)


# linear and pointwise substeps ----------------------------------------------


def linear_factor(grid, dt, p):
    return np.exp(-(p.kappa + 1j) * grid.xi_sq * dt)


def linear_substep(psi_hat, dt, p, grid):
    """Exact linear flow: each mode times exp(-(kappa + i) |xi|^2 dt)."""
    return psi_hat * linear_factor(grid, dt, p)


def nonlinear_substep_exact(psi, dt, p):
    """Pointwise exact reaction flow (logistic modulus, closed-form phase)."""
    out, min_m0, _ = kernels.reaction_flow(psi, dt, p.kappa, p.eps)
    if not min_m0 > 0:
        raise RegimeViolation("nonlinear substep needs |psi| > 0", report={"min_m": min_m0})
    return out


class _StrangStepper:
    def __init__(self, grid, p, dt, dealias):
        self.grid = grid
        self.p = p
        self.dt = dt
        self.half = linear_factor(grid, dt / 2.0, p)
        self.mask = grid.dealias_mask if dealias else None
        self.last_dev = 0.0

    def step(self, psi_hat):
        g = self.grid
        psi = g.ifft(psi_hat * self.half)
        psi, min_m0, self.last_dev = kernels.reaction_flow(psi, self.dt, self.p.kappa, self.p.eps)
        if not min_m0 > 0:
            raise RegimeViolation("nonlinear substep needs |psi| > 0", report={"min_m": min_m0})
        hat = g.fft(psi)
        if self.mask is not None:
            hat = hat * self.mask
        return hat * self.half


def strang_step(psi, dt, p, dealias=True):
    """One Strang step L(dt/2) N(dt) L(dt/2) of a wave-function Field."""
    grid = psi.grid
    stepper = _StrangStepper(grid, p, dt, dealias)
    out = grid.ifft(stepper.step(grid.fft(np.asarray(psi.physical(), dtype=np.complex128))))
    return Field(grid, out, PHYSICAL, False)


def cgl_nonlinear(psi, p):
    return (p.kappa + 1j) / p.eps ** 2 * psi * (1.0 - np.abs(psi) ** 2)


class _LawsonRK4Stepper:
    """Integrating-factor RK4 with the linear part (kappa + i) Lap exact."""

    def __init__(self, grid, p, dt, dealias):
        self.grid = grid
        self.p = p
        self.dt = dt
        self.e_half = linear_factor(grid, dt / 2.0, p)
        self.e_full = linear_factor(grid, dt, p)
        self.mask = grid.dealias_mask if dealias else None
        self.last_dev = 0.0

    def _n(self, hat):
        g = self.grid
        psi = g.ifft(hat)
        out = g.fft(cgl_nonlinear(psi, self.p))
        if self.mask is not None:
            out = out * self.mask
        return out, psi

    def step(self, u):
        h, e2, e = self.dt, self.e_half, self.e_full
        k1, psi = self._n(u)
        self.last_dev = float(np.max(np.abs(np.abs(psi) ** 2 - 1.0)))
        k2, _ = self._n(e2 * (u + 0.5 * h * k1))
        k3, _ = self._n(e2 * u + 0.5 * h * k2)
        k4, _ = self._n(e * u + h * e2 * k3)
        return e * u + h / 6.0 * (e * k1 + 2.0 * e2 * (k2 + k3) + k4)


def make_stepper(method, grid, p, dt, dealias=True):
    if method == "strang_exact":
        return _StrangStepper(grid, p, dt, dealias)
    if method == "rk4_reference":
        return _LawsonRK4Stepper(grid, p, dt, dealias)
    raise ConfigurationError(f"no Psi stepper for method {method!r}")


# diagnostics -------------------------------------------------------------------


def psi_diagnostics(grid, psi, p, hydro_norms=True):
    m = np.abs(psi) ** 2
    diag = {
        "energy": gl_energy_array(grid, psi, p.eps),
        "min_modulus": float(np.sqrt(m.min())),
        "dev_inf": float(np.max(np.abs(m - 1.0))),
    }
    if hydro_norms and m.min() > 0.5:
        b, v, z = hydro_arrays(grid, psi, p.eps)
        diag["hs_norm_bz"] = bz_norm(grid, b, z, p.s)
    return diag


def integrate(psi0, cfg, p, *, keep_snapshots=True, hydro_norms=True, progress=None,
              check_every_step=True):
    """Integrate from ``psi0`` (a Field) and record every ``cfg.record_stride`` steps.

    Raises RegimeViolation once ||Psi|^2 - 1|_inf >= 1/2 and
    NumericalInstability on norm blow-up; the partial trajectory is attached
    to the exception.
    """
    grid = psi0.grid
    cfg.validate(grid, p)
    n_steps, dt = cfg.steps()
    stepper = make_stepper(cfg.method, grid, p, dt, cfg.dealias)
    psi = np.asarray(psi0.physical(), dtype=np.complex128)
    traj = Trajectory(grid=grid, params=p, config=cfg)
    diag = psi_diagnostics(grid, psi, p, hydro_norms)
    _check_regime(diag["dev_inf"], 0.0, traj)
    traj.append(0.0, psi.copy() if keep_snapshots else None, {"t": 0.0, **diag})
    _emit(progress, 0.0, diag)
    ref_norm = max(float(np.linalg.norm(psi)), 1e-300)
    hat = grid.fft(psi)
    for k in range(1, n_steps + 1):
        hat = stepper.step(hat)
        t = k * dt
        if check_every_step and stepper.last_dev >= 0.5:
            _check_regime(stepper.last_dev, t, traj)
        if k % cfg.record_stride == 0 or k == n_steps:
            psi = grid.ifft(hat)
            norm = float(np.linalg.norm(psi))
            if not np.isfinite(norm) or norm > BLOWUP_FACTOR * ref_norm:
                traj.truncated = True
                raise NumericalInstability(
                    f"norm blow-up at t={t:.6g}", diagnostics=traj.diagnostics, trajectory=traj
                )
            diag = psi_diagnostics(grid, psi, p, hydro_norms)
            _check_regime(diag["dev_inf"], t, traj)
            traj.append(t, psi.copy() if keep_snapshots else None, {"t": t, **diag})
            _emit(progress, t, diag)
    return traj


def _check_regime(dev, t, traj):
    if dev >= 0.5:
        traj.truncated = True
        raise RegimeViolation(
            f"||Psi|^2 - 1|_inf = {dev:.6g} >= 1/2 at t = {t:.6g}",
            report={"t": t, "dev_inf": dev},
            trajectory=traj,
        )


def _emit(progress, t, diag):
    if progress is not None:
        progress.write(f"{t:.17g},{diag['energy']:.17g},{diag['min_modulus']:.17g}\n")


# (b, v) system --------------------------------------------------------------


def _dealiased(grid, values, on):
    if not on:
        return values
    return np.real(grid.ifft(grid.fft(values) * grid.dealias_mask))


def tilde_nonlinearities(grid, b, v, p, dealias=True):
    """(f~, g~) of the (b, v) system evaluated spectrally."""
    eps, kappa, nu = p.eps, p.kappa, p.nu
    rho_sq = 1.0 + eps / SQRT2 * b
    if np.min(rho_sq) <= 0:
        raise RegimeViolation("rho^2 = 1 + eps b / sqrt2 is not positive")
    rho = np.sqrt(rho_sq)
    grad_rho = gradient(grid, rho)
    v_sq = np.sum(v * v, axis=0)
    f = SQRT2 * nu * (-2.0 * np.sum(grad_rho ** 2, axis=0) - rho_sq * v_sq / 2.0 - b * b)
    f = f - divergence(grid, b * v)
    lap_rho = np.real(grid.ifft(-grid.xi_sq * grid.fft(rho)))
    grad_rho_sq = gradient(grid, rho_sq)
    g = kappa * gradient(grid, np.sum(grad_rho_sq * v, axis=0) / rho_sq)
    g = g + 2.0 * gradient(grid, lap_rho / rho)
    g = g - gradient(grid, 0.5 * v_sq)  # v . grad v for a gradient field
    return _dealiased(grid, f, dealias), _dealiased(grid, g, dealias)


def bv_rhs(h, p, dealias=True):
    """Full right-hand side (db/dt, dv/dt) of the (b, v) system at a HydroState."""
    grid = h.grid
    b = np.real(h.b.physical())
    v = np.real(h.v.physical())
    return bv_rhs_arrays(grid, b, v, p, dealias)


def bv_rhs_arrays(grid, b, v, p, dealias=True):
    eps, kappa, nu = p.eps, p.kappa, p.nu
    f, g = tilde_nonlinearities(grid, b, v, p, dealias)
    lap = lambda x: np.real(grid.ifft(-grid.xi_sq * grid.fft(x)))
    db = -SQRT2 / eps * divergence(grid, v) - 2.0 * nu / eps * b + kappa * lap(b) + f
    dv = -SQRT2 / eps * gradient(grid, b) + kappa * np.stack([lap(c) for c in v]) + g
    return db, dv


class _BVStepper:
    """Lawson RK4 on the symmetrized variables, linear part exp(-t M(xi)) exact."""

    def __init__(self, grid, p, dt, dealias):
        self.grid = grid
        self.p = p
        self.dt = dt
        self.dealias = dealias
        self.sym = symbol_c(grid, p.eps)
        flow = cd_flow(grid.xi_abs, p)
        self.e_half = semigroup_closed_form(flow, dt / 2.0)
        self.e_full = semigroup_closed_form(flow, dt)
        self.last_dev = 0.0

    def to_state(self, b, v):
        g = self.grid
        return np.stack([self.sym * g.fft(b), d_from_v_hat(g, g.fft(v))])

    def to_bv(self, u):
        g = self.grid
        b = np.real(g.ifft(u[0] / self.sym))
        v = np.real(g.ifft(v_hat_from_d(g, u[1])))
        return b, v

    @staticmethod
    def _mul(mat, u):
        return np.stack([mat[..., 0, 0] * u[0] + mat[..., 0, 1] * u[1],
                         mat[..., 1, 0] * u[0] + mat[..., 1, 1] * u[1]])

    def _n(self, u):
        g, p = self.grid, self.p
        b, v = self.to_bv(u)
        f, gt = tilde_nonlinearities(g, b, v, p, self.dealias)
        lap_b_hat = -g.xi_sq * g.fft(b)
        # g = g~ - (eps/sqrt2) grad Lap b; the grad Lap b part is in the linear operator
        g_hat = g.fft(gt) - p.eps / SQRT2 * np.stack([1j * k * lap_b_hat for k in g.wavenumbers_odd])
        if self.dealias:
            g_hat = g_hat * g.dealias_mask
        return np.stack([self.sym * g.fft(f), d_from_v_hat(g, g_hat)]), b

    def step(self, u):
        h, e2, e = self.dt, self.e_half, self.e_full
        mul = self._mul
        k1, b = self._n(u)
        self.last_dev = float(np.max(np.abs(self.p.eps / SQRT2 * b)))
        k2, _ = self._n(mul(e2, u + 0.5 * h * k1))
        k3, _ = self._n(mul(e2, u) + 0.5 * h * k2)
        k4, _ = self._n(mul(e, u) + h * mul(e2, k3))
        return mul(e, u) + h / 6.0 * (mul(e, k1) + 2.0 * mul(e2, k2 + k3) + k4)


def integrate_bv(b0, v0, cfg, p, *, progress=None):
    """Integrate the (b, v) system directly; trajectory of HydroStates."""
    grid = b0.grid
    cfg.validate(grid, p)
    n_steps, dt = cfg.steps()
    stepper = _BVStepper(grid, p, dt, cfg.dealias)
    b = np.real(b0.physical())
    v = np.real(v0.physical())
    traj = Trajectory(grid=grid, params=p, config=cfg, kind="hydro")
    u = stepper.to_state(b, v)
    b, v = stepper.to_bv(u)
    traj.append(0.0, hydro_from_bv(grid, b, v, p.eps, 0.0), _bv_diag(grid, b, v, p, 0.0))
    ref = max(float(np.linalg.norm(u)), 1e-300)
    for k in range(1, n_steps + 1):
        u = stepper.step(u)
        t = k * dt
        if stepper.last_dev >= 0.5:
            _check_regime(stepper.last_dev, t, traj)
        if k % cfg.record_stride == 0 or k == n_steps:
            norm = float(np.linalg.norm(u))
            if not np.isfinite(norm) or norm > BLOWUP_FACTOR * max(ref, 1.0):
                traj.truncated = True
                raise NumericalInstability(f"norm blow-up at t={t:.6g}", traj.diagnostics, traj)
            b, v = stepper.to_bv(u)
            diag = _bv_diag(grid, b, v, p, t)
            _check_regime(diag["dev_inf"], t, traj)
            traj.append(t, hydro_from_bv(grid, b, v, p.eps, t), diag)
            if progress is not None:
                progress.write(f"{t:.17g},{diag['dev_inf']:.17g}\n")
    return traj


def _bv_diag(grid, b, v, p, t):
    return {"t": t, "dev_inf": float(np.max(np.abs(p.eps / SQRT2 * b)))}
