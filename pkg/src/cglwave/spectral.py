"""Periodic grids, Fourier transforms, spectral derivatives and norm functionals.

All transforms use the unitary (``norm="ortho"``) DFT convention. Integrals are
trapezoidal sums on the uniform grid, which are spectrally accurate for smooth
periodic fields.
"""
from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .errors import ConfigurationError, RegimeViolation

PHYSICAL = "physical"
SPECTRAL = "spectral"

SPLIT_R_SMALL = float(np.sqrt(3.0 / 8.0))
KAPPA_0 = float(np.sqrt(8.0 / 9.0))
DEFAULT_PERIOD = 2.0 * np.pi * 16.0


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on the torus ``[0, period)^dim``."""

    dim: int
    points_per_dim: int
    period: float = DEFAULT_PERIOD

    def __post_init__(self):
        problems = []
        if self.dim not in (1, 2):
            problems.append(f"dim must be 1 or 2, got {self.dim}")
        n = self.points_per_dim
        if not isinstance(n, (int, np.integer)) or n < 16 or (n & (n - 1)) != 0:
            problems.append(f"points_per_dim must be a power of two >= 16, got {n}")
        if not self.period > 0:
            problems.append(f"period must be positive, got {self.period}")
        if problems:
            raise ConfigurationError("; ".join(problems), problems)

    @property
    def n(self):
        return self.points_per_dim

    @property
    def shape(self):
        return (self.points_per_dim,) * self.dim

    @property
    def size(self):
        return self.points_per_dim ** self.dim

    @property
    def spacing(self):
        return self.period / self.points_per_dim

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    @property
    def axes(self):
        return tuple(range(-self.dim, 0))

    @cached_property
    def mode_indices(self):
        """Integer indices k in FFT order, one broadcastable array per axis."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return tuple(_along_axis(k, ax, self.dim) for ax in range(self.dim))

    @cached_property
    def wavenumbers(self):
        """xi_k = 2 pi k / L per axis, broadcastable."""
        return tuple(2.0 * np.pi * k / self.period for k in self.mode_indices)

    @cached_property
    def wavenumbers_odd(self):
        """Wavenumbers with the Nyquist index zeroed, for odd-order derivatives."""
        out = []
        for k, xi in zip(self.mode_indices, self.wavenumbers):
            xi = xi.copy()
            xi[k == -self.n // 2] = 0.0
            out.append(xi)
        return tuple(out)

    @cached_property
    def xi_sq(self):
        return sum(xi * xi for xi in self.wavenumbers) * np.ones(self.shape)

    @cached_property
    def xi_abs(self):
        return np.sqrt(self.xi_sq)

    @cached_property
    def dealias_mask(self):
        """Two-thirds rule: keep |k| <= n/3 along every axis."""
        mask = np.ones(self.shape, dtype=bool)
        for k in self.mode_indices:
            mask = mask & (np.abs(k) <= self.n // 3)
        return mask

    def coordinates(self):
        """Sample positions, one broadcastable array per axis."""
        x = np.arange(self.n) * self.spacing
        return tuple(_along_axis(x, ax, self.dim) for ax in range(self.dim))

    def fft(self, values):
        return np.fft.fftn(values, axes=self.axes, norm="ortho")

    def ifft(self, values):
        return np.fft.ifftn(values, axes=self.axes, norm="ortho")

    def integrate(self, values):
        """Trapezoidal quadrature of a physical-space array over the torus."""
        return np.sum(values, axis=self.axes) * self.cell_volume


def _along_axis(vec, axis, dim):
    shape = [1] * dim
    shape[axis] = vec.size
    return vec.reshape(shape)


@dataclass(frozen=True)
class PerturbationParams:
    """Regime parameters (eps, kappa, s) with the derived ratio nu = kappa / eps."""

    eps: float
    kappa: float
    s: int = 2
    split_r: float = SPLIT_R_SMALL
    split_R: float = 1.0

    def __post_init__(self):
        problems = []
        if not 0.0 < self.eps <= 1.0:
            problems.append("eps must be in (0,1]")
        if not 0.0 < self.kappa < 1.0:
            problems.append("kappa must be in (0,1)")
        if int(self.s) != self.s:
            problems.append("s must be an integer")
        if self.split_R < 1.0:
            problems.append("split_R must be >= 1")
        if not problems and not self.small_threshold < self.high_threshold:
            problems.append("thresholds must satisfy split_r * nu < split_R / eps")
        if problems:
            raise ConfigurationError("; ".join(problems), problems)

    @property
    def nu(self):
        return self.kappa / self.eps

    @property
    def small_threshold(self):
        """r * nu, upper edge of the small-frequency region."""
        return self.split_r * self.nu

    @property
    def high_threshold(self):
        """R / eps, lower edge of the high-frequency region."""
        return self.split_R / self.eps

    def check_dimension(self, dim):
        if not self.s > 1 + dim / 2:
            raise ConfigurationError(f"s must exceed 1 + dim/2 = {1 + dim / 2} for dim={dim}")


@dataclass
class Field:
    """Samples of a scalar field on a grid, in physical or spectral representation."""

    grid: GridSpec
    values: np.ndarray
    representation: str = PHYSICAL
    real: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise ConfigurationError(f"unknown representation {self.representation!r}")

    def physical(self):
        """Physical-space samples as an array (real dtype for real-tagged fields)."""
        if self.representation == PHYSICAL:
            return self.values
        out = self.grid.ifft(self.values)
        return out.real if self.real else out

    def spectral(self):
        if self.representation == SPECTRAL:
            return self.values
        return self.grid.fft(self.values)


@dataclass
class VectorField:
    """``dim`` components sharing one grid; ``values`` has shape ``(dim, *grid.shape)``."""

    grid: GridSpec
    values: np.ndarray
    representation: str = PHYSICAL
    real: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values)
        expected = (self.grid.dim,) + self.grid.shape
        if self.values.shape != expected:
            raise ConfigurationError(f"vector field shape {self.values.shape}, expected {expected}")

    @property
    def components(self):
        return [Field(self.grid, c, self.representation, self.real) for c in self.values]

    def physical(self):
        if self.representation == PHYSICAL:
            return self.values
        out = self.grid.ifft(self.values)
        return out.real if self.real else out

    def spectral(self):
        if self.representation == SPECTRAL:
            return self.values
        return self.grid.fft(self.values)


def transform(f, direction="forward"):
    """Unitary DFT of a field; flips the representation flag."""
    if direction == "forward":
        if f.representation != PHYSICAL:
            raise ConfigurationError("forward transform needs a physical field")
        return Field(f.grid, f.grid.fft(f.values), SPECTRAL, f.real)
    if direction == "inverse":
        if f.representation != SPECTRAL:
            raise ConfigurationError("inverse transform needs a spectral field")
        values = f.grid.ifft(f.values)
        if f.real:
            values = values.real
        return Field(f.grid, values, PHYSICAL, f.real)
    raise ConfigurationError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def derivative_multiplier(grid, axis, order):
    """(i xi_axis)^order with the Nyquist mode dropped for odd orders."""
    xi = grid.wavenumbers_odd[axis] if order % 2 else grid.wavenumbers[axis]
    return (1j * xi) ** order


def spectral_derivative(grid, values, axis, order=1):
    """Derivative of a physical-space array, returned in physical space."""
    if order == 0:
        return values
    out = grid.ifft(derivative_multiplier(grid, axis, order) * grid.fft(values))
    return out.real if np.isrealobj(values) else out


def gradient(grid, values):
    """Spectral gradient, shape ``(dim, *shape)``."""
    hat = grid.fft(values)
    out = np.stack([grid.ifft(1j * xi * hat) for xi in grid.wavenumbers_odd])
    return out.real if np.isrealobj(values) else out


def divergence(grid, vec):
    hat = grid.fft(vec)
    out = grid.ifft(sum(1j * xi * h for xi, h in zip(grid.wavenumbers_odd, hat)))
    return out.real if np.isrealobj(vec) else out


def laplacian(grid, values):
    out = grid.ifft(-grid.xi_sq * grid.fft(values))
    return out.real if np.isrealobj(values) else out


def derivative(f, axis, order=1):
    """Spectral derivative of a field along ``axis``; result keeps the input representation."""
    hat = f.spectral() * derivative_multiplier(f.grid, axis, order)
    out = Field(f.grid, hat, SPECTRAL, f.real)
    return out if f.representation == SPECTRAL else transform(out, "inverse")


def _sobolev_sq(grid, hat, s):
    weight = (1.0 + grid.xi_sq) ** s
    return float(np.sum(weight * np.abs(hat) ** 2) * grid.cell_volume)


def sobolev_norm_array(grid, values, s):
    """H^s norm of physical-space samples (scalar or stacked components)."""
    return float(np.sqrt(_sobolev_sq(grid, grid.fft(values), s)))


def sobolev_norm(f, s):
    """H^s norm via the multiplier (1 + |xi|^2)^(s/2); s = 0 is the L^2 norm."""
    return float(np.sqrt(_sobolev_sq(f.grid, f.spectral(), s)))


def linf_norm(f):
    """Largest absolute sample value."""
    values = f.physical()
    return float(np.max(np.abs(values))) if values.size else 0.0


def dk_square_array(grid, values, k):
    """sum over |alpha| = k of (k!/alpha!) |d^alpha f|^2, physical space.

    ``values`` may carry leading component axes (e.g. a vector field); the
    component contributions are summed.
    """
    if k == 0:
        return np.sum(np.abs(values) ** 2, axis=tuple(range(values.ndim - grid.dim)))
    hat = grid.fft(values)
    lead = tuple(range(values.ndim - grid.dim))
    if grid.dim == 1:
        d = grid.ifft(derivative_multiplier(grid, 0, k) * hat)
        return np.sum(np.abs(d) ** 2, axis=lead)
    total = np.zeros(grid.shape)
    for j in range(k + 1):
        mult = derivative_multiplier(grid, 0, j) * derivative_multiplier(grid, 1, k - j)
        d = grid.ifft(mult * hat)
        total = total + comb(k, j) * np.sum(np.abs(d) ** 2, axis=lead)
    return total


def dk_square(f, k):
    """Physical-space field |D^k f|^2 with multinomial weights, so k=1 gives |grad f|^2."""
    if k < 0:
        raise ConfigurationError("k must be >= 0")
    return Field(f.grid, dk_square_array(f.grid, f.physical(), k), PHYSICAL, True)


def gamma_seminorm_array(grid, b, z, k, eps):
    """Gamma^k(b, z) from physical arrays; ``z`` may be None."""
    weight = 1.0 + eps / np.sqrt(2.0) * b
    if np.min(weight) <= 0:
        raise RegimeViolation(
            "weight 1 + eps b / sqrt(2) is not positive",
            report={"min_weight": float(np.min(weight))},
        )
    total = grid.integrate(dk_square_array(grid, b, k))
    if z is not None:
        total += grid.integrate(weight * dk_square_array(grid, z, k))
    return float(total)


def gamma_seminorm(b, z, k, p):
    """Weighted semi-norm int |D^k b|^2 + int (1 + eps b/sqrt2) |D^k z|^2."""
    zv = None if z is None else z.physical()
    return gamma_seminorm_array(b.grid, np.real(b.physical()), zv, k, p.eps)


def gl_energy_array(grid, psi, eps):
    grad = gradient(grid, psi)
    dens = 0.5 * np.sum(np.abs(grad) ** 2, axis=0) + (1.0 - np.abs(psi) ** 2) ** 2 / (4.0 * eps * eps)
    return float(grid.integrate(dens))


def gl_energy(psi, p):
    """Ginzburg-Landau energy int |grad psi|^2/2 + (1 - |psi|^2)^2 / (4 eps^2)."""
    return gl_energy_array(psi.grid, np.asarray(psi.physical(), dtype=np.complex128), p.eps)


def band_limited_random(grid, max_mode, target_hs_norm, s, seed, zero_mean=True):
    """Seeded real random field with spectrum in |k| <= max_mode, scaled to a given H^s norm."""
    if not 0 <= max_mode < grid.n // 2:
        raise ConfigurationError(f"max_mode must be in [0, n/2), got {max_mode}")
    if target_hs_norm == 0:
        return Field(grid, np.zeros(grid.shape), PHYSICAL, True)
    rng = np.random.default_rng(seed)
    kk = np.sqrt(sum(k.astype(float) ** 2 for k in grid.mode_indices)) * np.ones(grid.shape)
    support = kk <= max_mode
    if zero_mean:
        support &= kk > 0
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    count = int(support.sum())
    coeffs[support] = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    values = grid.ifft(coeffs).real
    norm = sobolev_norm_array(grid, values, s)
    if norm == 0:
        raise ConfigurationError("random field has no support; increase max_mode")
    return Field(grid, values * (target_hs_norm / norm), PHYSICAL, True)
