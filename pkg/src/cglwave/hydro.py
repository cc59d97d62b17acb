"""Wave function <-> hydrodynamic variables (b, v), z and the symmetrized (c, d).

Conventions in the parabolic frame:

    |Psi|^2 = rho^2 = 1 + (eps / sqrt2) b,   v = 2 grad(phase),
    z = v - i grad ln(rho^2),
    c = (1 - eps^2 Lap / 2)^(1/2) b,         d = (-Lap)^(-1/2) div v.
"""
from dataclasses import dataclass

import numpy as np

from .errors import RegimeViolation, VanishingRisk
from .spectral import (
    PHYSICAL,
    Field,
    VectorField,
    gradient,
    sobolev_norm_array,
)

SQRT2 = np.sqrt(2.0)


@dataclass
class HydroState:
    """Snapshot (b, v, z) at parabolic-frame time ``time``."""

    time: float
    b: Field
    v: VectorField
    z: VectorField
    eps: float

    @property
    def grid(self):
        return self.b.grid

    @property
    def rho_sq(self):
        return Field(self.grid, 1.0 + self.eps / SQRT2 * self.b.physical(), PHYSICAL, True)


@dataclass
class SymmetrizedState:
    c: Field
    d: Field
    time: float


def project_gradient(grid, v_hat):
    """Longitudinal projection xi (xi . v_hat) / |xi|^2 in Fourier space; zero mode dropped."""
    xi = grid.wavenumbers_odd
    xi_sq = sum(k * k for k in xi) * np.ones(grid.shape)
    safe = np.where(xi_sq > 0, xi_sq, 1.0)
    dot = sum(k * vh for k, vh in zip(xi, v_hat))
    coef = np.where(xi_sq > 0, dot / safe, 0.0)
    return np.stack([k * coef for k in xi])


def build_psi_array(grid, a0, phi0, eps):
    amp = eps / SQRT2 * a0
    if np.max(np.abs(amp)) >= 1.0:
        raise RegimeViolation(
            "amplitude bound (eps/sqrt2) |a0|_inf < 1 violated",
            report={"scaled_amplitude": float(np.max(np.abs(amp)))},
        )
    return np.sqrt(1.0 + amp) * np.exp(1j * phi0)


def build_psi(a0, phi0, p):
    """Psi0 = (1 + (eps/sqrt2) a0)^(1/2) exp(i phi0)."""
    psi = build_psi_array(a0.grid, np.real(a0.physical()), np.real(phi0.physical()), p.eps)
    return Field(a0.grid, psi, PHYSICAL, False)


def check_modulus(grid, psi, threshold=0.5):
    """Raise VanishingRisk when min |psi|^2 <= threshold."""
    m = np.abs(psi) ** 2
    idx = np.unravel_index(int(np.argmin(m)), m.shape)
    if m[idx] <= threshold:
        coords = grid.coordinates()
        location = [float(np.ravel(c)[i]) for c, i in zip(coords, idx)]
        raise VanishingRisk(
            f"min |Psi|^2 = {m[idx]:.6g} <= {threshold}", float(np.sqrt(m[idx])), location
        )


def hydro_arrays(grid, psi, eps):
    """(b, v, z) arrays from psi; v is projected onto gradient fields."""
    m = np.abs(psi) ** 2
    b = SQRT2 / eps * (m - 1.0)
    grad_psi = gradient(grid, psi)
    v_raw = 2.0 * np.imag(np.conj(psi) * grad_psi) / m
    v = np.real(grid.ifft(project_gradient(grid, grid.fft(v_raw))))
    z = v - 1j * gradient(grid, np.log(m))
    return b, v, z


def z_from_bv(grid, b, v, eps):
    rho_sq = 1.0 + eps / SQRT2 * b
    return v - 1j * gradient(grid, np.log(rho_sq))


def extract_hydro(psi, p, t=0.0):
    """HydroState of a wave function; requires min |psi|^2 > 1/2."""
    grid = psi.grid
    values = np.asarray(psi.physical(), dtype=np.complex128)
    check_modulus(grid, values)
    b, v, z = hydro_arrays(grid, values, p.eps)
    return HydroState(
        time=float(t),
        b=Field(grid, b, PHYSICAL, True),
        v=VectorField(grid, v, PHYSICAL, True),
        z=VectorField(grid, z, PHYSICAL, False),
        eps=p.eps,
    )


def hydro_from_bv(grid, b, v, eps, t=0.0):
    return HydroState(
        time=float(t),
        b=Field(grid, b, PHYSICAL, True),
        v=VectorField(grid, v, PHYSICAL, True),
        z=VectorField(grid, z_from_bv(grid, b, v, eps), PHYSICAL, False),
        eps=eps,
    )


def psi_from_bv(grid, b, v, eps):
    """Reconstruct psi from (b, v) up to a global phase (phase chosen with zero mean)."""
    v_hat = grid.fft(v)
    xi = grid.wavenumbers_odd
    xi_sq = sum(k * k for k in xi) * np.ones(grid.shape)
    safe = np.where(xi_sq > 0, xi_sq, 1.0)
    # v = 2 grad(phase)  =>  phase_hat = -i xi . v_hat / (2 |xi|^2)
    phase_hat = np.where(xi_sq > 0, -1j * sum(k * vh for k, vh in zip(xi, v_hat)) / (2.0 * safe), 0.0)
    phase = np.real(grid.ifft(phase_hat))
    return np.sqrt(1.0 + eps / SQRT2 * b) * np.exp(1j * phase)


def symbol_c(grid, eps):
    """(1 + eps^2 |xi|^2 / 2)^(1/2)."""
    return np.sqrt(1.0 + 0.5 * eps * eps * grid.xi_sq)


def d_from_v_hat(grid, v_hat):
    """d_hat = i xi . v_hat / |xi|, zero at xi = 0 and at Nyquist indices."""
    xi = grid.wavenumbers_odd
    xi_abs = np.sqrt(sum(k * k for k in xi) * np.ones(grid.shape))
    safe = np.where(xi_abs > 0, xi_abs, 1.0)
    return np.where(xi_abs > 0, 1j * sum(k * vh for k, vh in zip(xi, v_hat)) / safe, 0.0)


def v_hat_from_d(grid, d_hat):
    """Inverse of ``d_from_v_hat`` on gradient fields: v_hat = -i xi d_hat / |xi|."""
    xi = grid.wavenumbers_odd
    xi_abs = np.sqrt(sum(k * k for k in xi) * np.ones(grid.shape))
    safe = np.where(xi_abs > 0, xi_abs, 1.0)
    return np.stack([np.where(xi_abs > 0, -1j * k * d_hat / safe, 0.0) for k in xi])


def symmetrize(h, p, eps=None):
    """(b, v) -> (c, d). ``eps`` overrides ``p.eps`` (``eps=0`` is allowed for diagnostics)."""
    grid = h.grid
    e = p.eps if eps is None else eps
    c_hat = symbol_c(grid, e) * grid.fft(h.b.physical())
    d_hat = d_from_v_hat(grid, grid.fft(h.v.physical()))
    return SymmetrizedState(
        c=Field(grid, np.real(grid.ifft(c_hat)), PHYSICAL, True),
        d=Field(grid, np.real(grid.ifft(d_hat)), PHYSICAL, True),
        time=h.time,
    )


def desymmetrize(s, p, eps=None):
    """(c, d) -> (b, v) as (Field, VectorField)."""
    grid = s.c.grid
    e = p.eps if eps is None else eps
    b = np.real(grid.ifft(grid.fft(s.c.physical()) / symbol_c(grid, e)))
    v = np.real(grid.ifft(v_hat_from_d(grid, grid.fft(s.d.physical()))))
    return Field(grid, b, PHYSICAL, True), VectorField(grid, v, PHYSICAL, True)


def band_masks(grid, p, scheme="low_high"):
    xi = grid.xi_abs
    high = xi > p.high_threshold
    if scheme == "low_high":
        return {"low": ~high, "high": high}
    if scheme == "small_mid_high":
        small = xi <= p.small_threshold
        return {"small": small, "mid": ~small & ~high, "high": high}
    raise ValueError(f"unknown band scheme {scheme!r}")


def band_split(f, p, scheme="low_high"):
    """Sharp spectral cut of ``f`` into frequency bands; returns a dict of Fields."""
    grid = f.grid
    hat = f.spectral()
    out = {}
    for name, mask in band_masks(grid, p, scheme).items():
        values = grid.ifft(np.where(mask, hat, 0.0))
        out[name] = Field(grid, values.real if f.real else values, PHYSICAL, f.real)
    return out


def compute_M0(a0, phi0, p):
    """||(a0, u0)||_{H^s} + eps ||a0||_{H^{s+1}} + ||phi0||_{L^2} with u0 = 2 grad phi0."""
    grid = a0.grid
    a = np.real(a0.physical())
    phi = np.real(phi0.physical())
    u = 2.0 * gradient(grid, phi)
    s = p.s
    au = np.sqrt(sobolev_norm_array(grid, a, s) ** 2 + sobolev_norm_array(grid, u, s) ** 2)
    return float(au + p.eps * sobolev_norm_array(grid, a, s + 1) + sobolev_norm_array(grid, phi, 0))


def bz_norm(grid, b, z, m):
    """||(b, z)||_{H^m} = (||b||^2 + sum_i ||z_i||^2)^(1/2)."""
    return float(np.sqrt(sobolev_norm_array(grid, b, m) ** 2 + sobolev_norm_array(grid, z, m) ** 2))
