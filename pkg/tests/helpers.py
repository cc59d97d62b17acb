from cglwave.hydro import build_psi
from cglwave.spectral import band_limited_random


def random_state(grid, p, amp=0.2, seed=0, max_mode=None):
    """Seeded (a0, phi0, psi0) with smooth band-limited data."""
    max_mode = max_mode if max_mode is not None else min(8, grid.n // 8)
    a0 = band_limited_random(grid, max_mode, amp, p.s, seed)
    phi0 = band_limited_random(grid, max_mode, amp, p.s, seed + 7919)
    return a0, phi0, build_psi(a0, phi0, p)
