"""Closed-form Fourier propagators for the linear comparison models.

Every model reduces, mode by mode, to d/dt X = -A X with a real matrix
A = [[p, q], [-q, r]]. Its exponential is evaluated in closed form by the
compiled kernel (``kernels.semigroup``); ``expm_taylor_squaring`` is an
independent oracle used in tests.
"""
from dataclasses import dataclass, asdict, field
import json

import numpy as np

from . import kernels
from .errors import ConfigurationError, LemmaViolation
from .hydro import d_from_v_hat, v_hat_from_d
from .spectral import KAPPA_0

SQRT2 = np.sqrt(2.0)


@dataclass
class TwoByTwoFlow:
    """Generator A = [[p, q], [-q, r]]; fields may be arrays (one entry per mode)."""

    p: np.ndarray
    q: np.ndarray
    r: np.ndarray

    def matrix(self):
        p, q, r = np.broadcast_arrays(self.p, self.q, self.r)
        return np.stack([np.stack([p, q], -1), np.stack([-q, r], -1)], -2)


def semigroup_closed_form(flow, t):
    """exp(-t A) as an array of shape ``(..., 2, 2)``."""
    if np.any(np.asarray(t) < 0):
        raise ConfigurationError("t must be >= 0")
    e00, e01, e10, e11 = kernels.semigroup(flow.p, flow.q, flow.r, t)
    return np.stack([np.stack([e00, e01], -1), np.stack([e10, e11], -1)], -2)


def expm_taylor_squaring(a, order=20):
    """exp(a) for a stack of small matrices by scaling, Taylor series and squaring."""
    a = np.asarray(a, dtype=np.float64)
    norms = np.max(np.sum(np.abs(a), axis=-1), axis=-1)
    squarings = np.maximum(0, np.ceil(np.log2(np.maximum(norms, 1e-300) / 0.25))).astype(int)
    scaled = a / (2.0 ** squarings)[..., None, None]
    eye = np.broadcast_to(np.eye(a.shape[-1]), a.shape)
    result = eye.copy()
    term = eye.copy()
    for k in range(1, order + 1):
        term = term @ scaled / k
        result = result + term
    for j in range(int(squarings.max(initial=0))):
        sel = squarings > j
        result[sel] = result[sel] @ result[sel]
    return result


def cd_flow(xi_abs, p):
    """Generator M(xi) of the symmetrized (c, d) system in the parabolic frame."""
    xi_abs = np.asarray(xi_abs, dtype=np.float64)
    omega = p.eps ** 2 * xi_abs ** 2
    scale = p.nu / p.eps
    mu = xi_abs * np.sqrt(2.0 + omega) / p.nu
    return TwoByTwoFlow(scale * (2.0 + omega), scale * mu, scale * omega)


def damped_wave_flow(xi_abs, nu):
    xi_abs = np.asarray(xi_abs, dtype=np.float64)
    return TwoByTwoFlow(2.0 * nu + 0.0 * xi_abs, SQRT2 * xi_abs, 0.0 * xi_abs)


def parabolic_flow(xi_abs, p, kappa=None):
    """a-frame generator of the linear parabolic model; ``kappa`` overrides ``p.kappa``."""
    xi_abs = np.asarray(xi_abs, dtype=np.float64)
    kappa = p.kappa if kappa is None else kappa
    diff = kappa * p.eps * xi_abs ** 2
    return TwoByTwoFlow(2.0 * p.nu + diff, SQRT2 * xi_abs, diff)


@dataclass
class ModePropagator:
    """Per-wavenumber closed-form factors of exp(-t M(xi))."""

    xi_abs: np.ndarray
    omega: np.ndarray
    mu: np.ndarray
    disc: np.ndarray
    alpha: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    scale: float

    @classmethod
    def from_params(cls, xi_abs, p):
        xi_abs = np.asarray(xi_abs, dtype=np.float64)
        omega = p.eps ** 2 * xi_abs ** 2
        mu = xi_abs * np.sqrt(2.0 + omega) / p.nu
        disc = 1.0 - mu ** 2
        root = complex_root(disc)
        scale = p.nu / p.eps
        return cls(
            xi_abs=xi_abs,
            omega=omega,
            mu=mu,
            disc=disc,
            alpha=1.0 + root,
            lambda1=scale * (omega + 1.0 - root),
            lambda2=scale * (omega + 1.0 + root),
            scale=scale,
        )

    def matrix(self):
        s = self.scale
        return np.stack(
            [
                np.stack([s * (2.0 + self.omega), s * self.mu], -1),
                np.stack([-s * self.mu, s * self.omega], -1),
            ],
            -2,
        )

    def eigen_semigroup(self, t):
        """exp(-tM) from the P^{-1} e^{-tD} P eigen-decomposition (non-degenerate modes only)."""
        mu, al = self.mu.astype(complex), self.alpha
        denom = mu * mu - al * al
        e1 = np.exp(-self.lambda1 * t)
        e2 = np.exp(-self.lambda2 * t)
        m00 = (mu * mu * e1 - al * al * e2) / denom
        m01 = (al * mu * e1 - al * mu * e2) / denom
        m10 = (al * mu * e2 - al * mu * e1) / denom
        m11 = (mu * mu * e2 - al * al * e1) / denom
        return np.stack([np.stack([m00, m01], -1), np.stack([m10, m11], -1)], -2)


def complex_root(disc):
    """sqrt(D) for D >= 0, i sqrt(-D) for D < 0."""
    disc = np.asarray(disc, dtype=np.float64)
    return np.where(disc >= 0, np.sqrt(np.abs(disc)) + 0j, 1j * np.sqrt(np.abs(disc)))


def _apply(mat, x_hat, y_hat):
    return (
        mat[..., 0, 0] * x_hat + mat[..., 0, 1] * y_hat,
        mat[..., 1, 0] * x_hat + mat[..., 1, 1] * y_hat,
    )


def propagate_cd(c0, d0, p, t):
    """Exact homogeneous flow of the (c, d) system for parabolic-frame time ``t``."""
    grid = c0.grid
    mat = semigroup_closed_form(cd_flow(grid.xi_abs, p), t)
    c_hat, d_hat = _apply(mat, grid.fft(c0.physical()), grid.fft(d0.physical()))
    return _real_field(grid, c_hat), _real_field(grid, d_hat)


def _real_field(grid, hat):
    from .spectral import Field, PHYSICAL

    return Field(grid, np.real(grid.ifft(hat)), PHYSICAL, True)


def propagate_flow_arrays(grid, flow, a0, u0, t):
    """Apply exp(-tA) per mode to (a_hat, d_hat(u)); returns physical (a, u)."""
    mat = semigroup_closed_form(flow, t)
    a_hat, d_hat = _apply(mat, grid.fft(a0), d_from_v_hat(grid, grid.fft(u0)))
    a = np.real(grid.ifft(a_hat))
    u = np.real(grid.ifft(v_hat_from_d(grid, d_hat)))
    return a, u


def propagate_damped_wave(a0, u0, nu, t):
    """Damped wave model (speed sqrt2, damping 2 nu) in the a-frame; returns (a, u) arrays."""
    grid = a0.grid
    return propagate_flow_arrays(grid, damped_wave_flow(grid.xi_abs, nu), a0.physical(), u0.physical(), t)


def propagate_parabolic(a0, u0, p, t, kappa=None):
    """Linear parabolic model in the a-frame; returns (a, u) arrays."""
    grid = a0.grid
    flow = parabolic_flow(grid.xi_abs, p, kappa)
    return propagate_flow_arrays(grid, flow, a0.physical(), u0.physical(), t)


@dataclass
class RegimeFit:
    name: str
    C: float
    c: float | None
    worst_ratio_xi: float
    worst_ratio_t: float
    n_xi: int
    finite: bool


@dataclass
class BoundReport:
    eps: float
    kappa: float
    nu: float
    split_r: float
    regimes: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _unit_vectors(count):
    theta = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
    vecs = np.stack([np.cos(theta), np.sin(theta)], -1)
    return vecs / np.sum(np.abs(vecs), axis=-1, keepdims=True)


def verify_semigroup_bounds(p, xi_grid, t_grid, n_directions=32):
    """Fit the constants of the two-regime pointwise envelopes of exp(-t M(xi)).

    Small frequencies (|xi| <= r nu):
        |e^{-tM}(a,b)| <= C e^{-nu eps xi^2 t} [e^{-nu t/eps}(|a|+|b|) + e^{-c xi^2 t/(nu eps)}(|xi|/nu |a| + |b|)]
    Other frequencies (|xi| >= r nu):
        |e^{-tM}(a,b)| <= C exp(-nu (1 + eps^2 xi^2) t / (2 eps)) (|a| + |b|)

    Norms are l^1 on C^2. ``c`` is the largest rate valid on the sampled
    small-frequency modes, ``C`` the smallest constant valid on the whole sweep.
    """
    if not p.kappa < KAPPA_0:
        raise ConfigurationError(f"kappa must be < kappa_0 = sqrt(8/9) = {KAPPA_0:.6f}")
    xi = np.asarray(xi_grid, dtype=np.float64)
    t = np.asarray(t_grid, dtype=np.float64)
    nu, eps = p.nu, p.eps
    r_nu = p.split_r * nu
    vecs = _unit_vectors(n_directions)
    report = BoundReport(
        eps=eps, kappa=p.kappa, nu=nu, split_r=p.split_r,
        sweep={
            "n_xi": int(xi.size), "xi_min": float(xi.min()), "xi_max": float(xi.max()),
            "n_t": int(t.size), "t_min": float(t.min()), "t_max": float(t.max()),
            "n_directions": n_directions,
        },
    )

    X, T = np.meshgrid(xi, t, indexing="ij")
    mat = semigroup_closed_form(cd_flow(X, p), T)
    image = np.einsum("...ij,dj->...di", mat, vecs)
    lhs = np.sum(np.abs(image), axis=-1)  # (xi, t, directions)
    a_abs = np.abs(vecs[:, 0])
    b_abs = np.abs(vecs[:, 1])

    small = xi <= r_nu * (1 + 1e-12)
    other = xi >= r_nu * (1 - 1e-12)

    if small.any():
        prop = ModePropagator.from_params(xi[small], p)
        positive = prop.xi_abs > 0
        slow_rate = np.real(prop.lambda1) - nu * eps * prop.xi_abs ** 2
        if positive.any():
            c_fit = float(np.min(slow_rate[positive] * nu * eps / prop.xi_abs[positive] ** 2))
        else:
            c_fit = 1.0
        Xs, Ts = X[small][..., None], T[small][..., None]
        rhs = np.exp(-nu * eps * Xs ** 2 * Ts) * (
            np.exp(-nu * Ts / eps) * (a_abs + b_abs)
            + np.exp(-c_fit * Xs ** 2 * Ts / (nu * eps)) * (Xs / nu * a_abs + b_abs)
        )
        report.regimes["small"] = asdict(_fit_constant("small", lhs[small], rhs, Xs, Ts, c_fit))
    if other.any():
        Xo, To = X[other][..., None], T[other][..., None]
        rhs = np.exp(-nu * (1.0 + eps ** 2 * Xo ** 2) * To / (2.0 * eps)) * (a_abs + b_abs)
        report.regimes["other"] = asdict(_fit_constant("other", lhs[other], rhs, Xo, To, None))
    for name, fit in report.regimes.items():
        if not fit["finite"]:
            raise LemmaViolation(f"envelope for regime {name!r} is not finite on the sweep")
    return report


def _fit_constant(name, lhs, rhs, X, T, c_value):
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lhs > 0, lhs / rhs, 0.0)
    idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    C = float(ratio[idx])
    return RegimeFit(
        name=name,
        C=C,
        c=c_value,
        worst_ratio_xi=float(np.broadcast_to(X, ratio.shape)[idx]),
        worst_ratio_t=float(np.broadcast_to(T, ratio.shape)[idx]),
        n_xi=int(lhs.shape[0]),
        finite=bool(np.isfinite(C)),
    )


def default_bound_sweep(p, n_xi=64, n_t=64):
    """Log-spaced |xi| across both regimes and times spanning the fast and slow scales."""
    r_nu = p.split_r * p.nu
    xi_small = np.geomspace(1e-3 * r_nu, r_nu, n_xi // 2)
    xi_other = np.geomspace(r_nu, 100.0 * max(p.high_threshold, r_nu), n_xi - n_xi // 2)
    xi = np.concatenate([[0.0], xi_small, xi_other])
    t_fast = p.eps / p.nu
    t = np.concatenate([[0.0], np.geomspace(1e-3 * t_fast, 1e3 * t_fast, n_t)])
    return xi, t
