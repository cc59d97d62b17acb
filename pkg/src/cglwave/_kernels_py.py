"""Pure numpy implementation of the hot pointwise kernels.

Mirrors ``_kernels.pyx`` one to one; selected by ``cglwave.kernels`` when the
compiled extension is unavailable or ``CGLWAVE_PURE_PYTHON=1`` is set.
"""
import numpy as np

# |D t^2| below this uses the truncated series for cosh and sinh(x)/x
CONFLUENT_THRESHOLD = 1e-6


def reaction_flow(psi, dt, kappa, eps):
    """Exact flow of d/dt psi = (kappa + i) eps^-2 psi (1 - |psi|^2) over ``dt``.

    Returns ``(psi_new, min_m0, max_dev)`` where ``min_m0`` is the smallest
    input ``|psi|^2`` and ``max_dev`` the largest ``| |psi|^2 - 1 |`` on input.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    m0 = psi.real * psi.real + psi.imag * psi.imag
    x = 2.0 * kappa * dt / (eps * eps)
    # log(m(dt)/m0) = -log(m0 + (1 - m0) e^{-x})
    log_ratio = -np.log1p((1.0 - m0) * np.expm1(-x))
    factor = np.exp(log_ratio * (0.5 + 0.5j / kappa))
    out = psi * factor
    return out, float(m0.min()), float(np.abs(m0 - 1.0).max())


def semigroup(p, q, r, t):
    """Entries of exp(-t A) for A = [[p, q], [-q, r]], broadcast over inputs.

    Returns the four real arrays ``(e00, e01, e10, e11)``.
    """
    p, q, r, t = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (p, q, r, t)))
    m = 0.5 * (p + r)
    h = 0.5 * (p - r)
    disc = h * h - q * q
    x2 = disc * t * t

    cosh_part = np.empty_like(m)
    sinh_part = np.empty_like(m)  # sinh(t sqrt(D)) / sqrt(D), times exp(-m t)

    small = np.abs(x2) < CONFLUENT_THRESHOLD
    pos = (~small) & (disc > 0)
    neg = (~small) & (disc < 0)

    if small.any():
        decay = np.exp(-m[small] * t[small])
        xs = x2[small]
        cosh_part[small] = decay * (1.0 + xs / 2.0)
        sinh_part[small] = decay * t[small] * (1.0 + xs / 6.0)
    if pos.any():
        sd = np.sqrt(disc[pos])
        tp = t[pos]
        slow = np.exp(-(m[pos] - sd) * tp)
        ratio = np.exp(-2.0 * sd * tp)
        cosh_part[pos] = 0.5 * slow * (1.0 + ratio)
        sinh_part[pos] = slow * (-np.expm1(-2.0 * sd * tp)) / (2.0 * sd)
    if neg.any():
        w = np.sqrt(-disc[neg])
        tn = t[neg]
        decay = np.exp(-m[neg] * tn)
        cosh_part[neg] = decay * np.cos(w * tn)
        sinh_part[neg] = decay * np.sin(w * tn) / w

    # exp(-tA) = e^{-mt} [cosh I - (sinh/sqrtD) B],  B = [[h, q], [-q, -h]]
    e00 = cosh_part - sinh_part * h
    e01 = -sinh_part * q
    e10 = sinh_part * q
    e11 = cosh_part + sinh_part * h
    return e00, e01, e10, e11
