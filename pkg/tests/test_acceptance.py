"""End-to-end acceptance checks, one test class per criterion.

Each test is tagged with ``criterion(number, title)``; conftest prints one
PASS/FAIL line per criterion at the end of the session, with the measured
quantities recorded through ``record_property("detail", ...)``.
"""
import math

import numpy as np
import pytest

from cglwave.cli import main
from cglwave.errors import RegimeViolation
from cglwave.experiments import (
    BV_MUTATIONS,
    BZ_MUTATIONS,
    envelope_constant,
    loglog_fit,
    residual_bv_reformulated,
    residual_bz,
    residual_convergence,
    run_comparison,
    scale_to_threshold,
    small_data_threshold,
    zz,
)
from cglwave.hydro import SQRT2, build_psi, compute_M0, extract_hydro, hydro_arrays
from cglwave.linear import (
    ModePropagator,
    cd_flow,
    default_bound_sweep,
    expm_taylor_squaring,
    semigroup_closed_form,
    verify_semigroup_bounds,
)
from cglwave.solver import SolverConfig, integrate, integrate_bv
from cglwave.spectral import (
    GridSpec,
    PerturbationParams,
    band_limited_random,
    gamma_seminorm_array,
    gl_energy_array,
    gradient,
    sobolev_norm_array,
)

GRID_1D = GridSpec(1, 256)
GRID_2D = GridSpec(2, 64, 2.0 * np.pi * 4)


def _data(grid, p, amp, seed, max_mode=8):
    a0 = band_limited_random(grid, max_mode, amp, p.s, seed)
    phi0 = band_limited_random(grid, max_mode, amp, p.s, seed + 1_000_003)
    return a0, phi0


def _bv_hs(grid, b, v, s):
    return math.sqrt(sobolev_norm_array(grid, b, s) ** 2 + sobolev_norm_array(grid, v, s) ** 2)


# 1 ---------------------------------------------------------------------------


def _scaled_semigroup_error(xi, t, p, tol):
    flow = cd_flow(xi, p)
    got = semigroup_closed_form(flow, t)
    want = expm_taylor_squaring(-np.asarray(t)[..., None, None] * flow.matrix())
    prop = ModePropagator.from_params(xi, p)
    slow = np.minimum(prop.lambda1.real, prop.lambda2.real)
    # the entries of exp(-tM) are of size exp(-t min Re lambda); below the
    # smallest normal double the comparison is against zero
    scale = np.maximum(tol * np.exp(-np.asarray(t) * slow), np.finfo(float).tiny)
    return np.max(np.abs(got - want).max(axis=(-1, -2)) / scale)


@pytest.mark.criterion(1, "semigroup closed form vs scaling-and-squaring oracle")
class TestSemigroupOracle:
    EPS = (0.05, 0.1, 0.2)

    def test_standard_sweep(self, record_property):
        worst = 0.0
        xi = np.geomspace(1e-2, 1e3, 400)
        for eps in self.EPS:
            for kappa in (eps / 2, eps, math.sqrt(eps)):
                p = PerturbationParams(eps, kappa)
                ts = np.array([0.01, 0.1, 1.0, 10.0]) * eps
                X, T = np.meshgrid(xi, ts, indexing="ij")
                worst = max(worst, _scaled_semigroup_error(X, T, p, 1e-10))
        record_property("detail", f"standard sweep worst err/tol {worst:.3g}")
        assert worst <= 1.0

    def test_degenerate_locus(self, record_property):
        rng = np.random.default_rng(2024)
        worst, count, max_disc = 0.0, 0, 0.0
        for eps in self.EPS:
            for kappa in (eps / 2, eps, math.sqrt(eps)):
                p = PerturbationParams(eps, kappa)
                n = 23 if count < 184 else 200 - count
                disc = rng.uniform(-1e-4, 1e-4, n)
                disc[0] = 0.0
                # invert Delta = 1 - |xi|^2 (2 + eps^2 |xi|^2) / nu^2 for |xi|^2
                x2 = (-2.0 + np.sqrt(4.0 + 4.0 * eps ** 2 * p.nu ** 2 * (1.0 - disc))) / (2.0 * eps ** 2)
                xi = np.sqrt(x2)
                max_disc = max(max_disc, float(np.abs(ModePropagator.from_params(xi, p).disc).max()))
                ts = np.array([0.01, 0.1, 1.0, 10.0]) * eps
                X, T = np.meshgrid(xi, ts, indexing="ij")
                worst = max(worst, _scaled_semigroup_error(X, T, p, 1e-8))
                count += n
        record_property("detail", f"{count} near-degenerate modes worst err/tol {worst:.3g}")
        assert count >= 200
        assert max_disc < 1e-4
        assert worst <= 1.0


# 2 ---------------------------------------------------------------------------


def _regime_states(grid, n_states=20):
    rng = np.random.default_rng(11)
    for seed in range(n_states):
        eps = float(rng.choice([0.05, 0.1, 0.2, 0.5]))
        kappa = float(rng.choice([0.5 * eps, eps, min(math.sqrt(eps), 0.9)]))
        p = PerturbationParams(eps, kappa, 3)
        # amplitudes keep ||Psi|^2 - 1|_inf well below 1/2
        a0, phi0 = _data(grid, p, float(rng.uniform(0.05, 0.5)), seed, max_mode=min(6, grid.n // 8))
        peak = eps / SQRT2 * np.abs(a0.values).max()
        if peak > 0.3:
            a0.values *= 0.3 / peak
        yield p, build_psi(a0, phi0, p).values


def _identity_defects(grid):
    worst = {"gamma0": 0.0, "gain": 0.0, "z": 0.0, "zz": 0.0}
    for p, psi in _regime_states(grid):
        eps = p.eps
        b, v, z = hydro_arrays(grid, psi, eps)
        energy = gl_energy_array(grid, psi, eps)
        g0 = gamma_seminorm_array(grid, b, z, 0, eps)
        worst["gamma0"] = max(worst["gamma0"], abs(g0 - 8.0 * energy) / (8.0 * energy))
        gain = eps / SQRT2 * gradient(grid, b) + (1.0 + eps / SQRT2 * b) * np.imag(z)
        worst["gain"] = max(worst["gain"], float(np.abs(gain).max()))
        # z = v - i grad ln rho^2 equals -2i grad(Psi) / Psi
        z_direct = -2j * gradient(grid, psi) / psi
        worst["z"] = max(worst["z"], float(np.abs(z - z_direct).max()))
        log_grad = gradient(grid, np.log(np.abs(psi) ** 2))
        split = np.sum(v * v, axis=0) - np.sum(log_grad * log_grad, axis=0)
        scale = max(float(np.abs(split).max()), 1.0)
        worst["zz"] = max(worst["zz"], float(np.abs(np.real(zz(z)) - split).max()) / scale)
    return worst


def _check_identities(worst):
    assert worst["gamma0"] <= 1e-10
    assert worst["gain"] <= 1e-8
    assert worst["z"] <= 1e-8
    assert worst["zz"] <= 1e-12


def _fmt(worst):
    return ", ".join(f"{k} {v:.2g}" for k, v in worst.items())


@pytest.mark.criterion(2, "hydrodynamic identity suite over 20 random states")
class TestIdentities:
    def test_one_dimensional(self, record_property):
        worst = _identity_defects(GRID_1D)
        record_property("detail", "1-D " + _fmt(worst))
        _check_identities(worst)

    def test_two_dimensional_smoke(self, record_property):
        worst = _identity_defects(GRID_2D)
        record_property("detail", "2-D " + _fmt(worst))
        _check_identities(worst)


# 3 and 4 -----------------------------------------------------------------------

SEEDS = range(5)
EPS_LONG = 0.1
KAPPAS_LONG = (0.05, 0.1, 0.316)


@pytest.fixture(scope="module")
def long_runs():
    """Five seeded runs per kappa over t_b in [0, 10/eps], every step recorded."""
    out = {}
    for kappa in KAPPAS_LONG:
        p = PerturbationParams(EPS_LONG, kappa, 2)
        for seed in SEEDS:
            a0, phi0 = _data(GRID_1D, p, 0.04, seed)
            # just inside the operational small-data threshold
            a0, phi0 = scale_to_threshold(a0, phi0, p, fraction=1.0 - 1e-9)
            M0 = compute_M0(a0, phi0, p)
            cfg = SolverConfig(dt=EPS_LONG ** 2 / 4.0, t_end=10.0 / EPS_LONG)
            try:
                traj = integrate(build_psi(a0, phi0, p), cfg, p, keep_snapshots=False, hydro_norms=False)
                err = None
            except RegimeViolation as exc:
                traj, err = exc.trajectory, exc
            energy = np.array([d["energy"] for d in traj.diagnostics])
            dev = np.array([d["dev_inf"] for d in traj.diagnostics])
            out[(kappa, seed)] = {"p": p, "M0": M0, "energy": energy, "dev": dev, "error": err,
                                  "t_end": traj.times[-1]}
    return out


@pytest.mark.criterion(3, "Ginzburg-Landau energy non-increasing")
class TestEnergyMonotone:
    def test_long_runs(self, long_runs, record_property):
        worst = -np.inf
        for key, run in long_runs.items():
            e = run["energy"]
            worst = max(worst, float(np.max((e[1:] - e[:-1]) / e[:-1])))
            assert run["error"] is None, key
            assert run["t_end"] == pytest.approx(10.0 / EPS_LONG)
        record_property("detail", f"{len(long_runs)} runs, max relative step increase {worst:.2g}")
        assert worst <= 1e-8

    def test_two_dimensional_smoke(self, record_property):
        p = PerturbationParams(0.1, 0.1, 3)
        a0, phi0 = _data(GRID_2D, p, 0.3, 3, max_mode=6)
        traj = integrate(build_psi(a0, phi0, p), SolverConfig(dt=0.0025, t_end=2.0), p,
                         keep_snapshots=False, hydro_norms=False)
        e = np.array([d["energy"] for d in traj.diagnostics])
        worst = float(np.max((e[1:] - e[:-1]) / e[:-1]))
        record_property("detail", f"2-D max relative step increase {worst:.2g}")
        assert worst <= 1e-8


@pytest.mark.criterion(4, "|Psi| stays away from zero under the small-data threshold")
class TestNonVanishing:
    @pytest.mark.parametrize("kappa", [0.1, 0.316], ids=["kappa=eps", "kappa=sqrt(eps)"])
    def test_modulus_deviation(self, long_runs, kappa, record_property):
        worst = 0.0
        for seed in SEEDS:
            run = long_runs[(kappa, seed)]
            p = run["p"]
            assert run["M0"] <= small_data_threshold(p) * (1 + 1e-12)
            assert run["error"] is None
            worst = max(worst, float(run["dev"].max()))
        record_property("detail", f"kappa={kappa}: max ||Psi|^2-1|_inf {worst:.3g}")
        assert worst < 0.5


# 5 ---------------------------------------------------------------------------


def _cross_solver(grid, p, amp, t_end, max_mode):
    a0, phi0 = _data(grid, p, amp, 1, max_mode)
    psi0 = build_psi(a0, phi0, p)
    dt = p.eps ** 2 / 8.0
    ref = integrate(psi0, SolverConfig(dt=dt, t_end=t_end, method="rk4_reference"), p, hydro_norms=False)
    b_psi, v_psi, _ = hydro_arrays(grid, ref.snapshots[-1], p.eps)
    h0 = extract_hydro(psi0, p)
    direct = integrate_bv(h0.b, h0.v, SolverConfig(dt=dt, t_end=t_end, method="bv_direct"), p)
    h = direct.snapshots[-1]
    diff = _bv_hs(grid, h.b.values - b_psi, h.v.values - v_psi, p.s)
    return diff / _bv_hs(grid, b_psi, v_psi, p.s)


@pytest.mark.criterion(5, "Psi-solver extraction vs direct (b, v) integrator")
class TestCrossSolver:
    def test_one_dimensional(self, record_property):
        rel = _cross_solver(GRID_1D, PerturbationParams(0.1, 0.1, 2), 0.1, 1.0, 8)
        record_property("detail", f"1-D relative H^s gap {rel:.3g}")
        assert rel <= 1e-6

    def test_two_dimensional_smoke(self, record_property):
        rel = _cross_solver(GRID_2D, PerturbationParams(0.1, 0.1, 3), 0.1, 0.25, 6)
        record_property("detail", f"2-D relative H^s gap {rel:.3g}")
        assert rel <= 1e-6


# 6 ---------------------------------------------------------------------------


@pytest.mark.criterion(6, "convergence orders of the splitting and of the residuals")
class TestConvergence:
    def test_strang_order(self, record_property):
        p = PerturbationParams(0.1, 0.1, 2)
        a0, phi0 = _data(GRID_1D, p, 0.1, 2)
        psi0 = build_psi(a0, phi0, p)
        finals = []
        for j in range(4):
            cfg = SolverConfig(dt=p.eps ** 2 / 4.0 / 2 ** j, t_end=0.5)
            finals.append(integrate(psi0, cfg, p, keep_snapshots=True, hydro_norms=False).snapshots[-1])
        diffs = [np.linalg.norm(finals[j] - finals[j + 1]) for j in range(3)]
        orders = [math.log2(diffs[j] / diffs[j + 1]) for j in range(2)]
        record_property("detail", "Strang orders " + ", ".join(f"{o:.3f}" for o in orders))
        assert min(orders) >= 1.9

    def test_residual_halving(self, record_property):
        p = PerturbationParams(0.1, 0.1, 2)
        a0, phi0 = _data(GRID_1D, p, 0.3, 3)
        psi0 = build_psi(a0, phi0, p)
        series = {"bz": [], "bv": []}
        for stride in (0.004, 0.002, 0.001):
            cfg = SolverConfig(dt=stride / 4.0, t_end=0.1, method="rk4_reference", record_stride=4)
            traj = integrate(psi0, cfg, p, hydro_norms=False)
            series["bz"].append(residual_bz(traj, p))
            series["bv"].append(residual_bv_reformulated(traj, p))
        ratios = {k: [residual_convergence(s[j], s[j + 1]) for j in range(2)] for k, s in series.items()}
        record_property("detail", "; ".join(f"{k} ratios " + ", ".join(f"{r:.3f}" for r in v)
                                            for k, v in ratios.items()))
        assert min(min(v) for v in ratios.values()) >= 3.5


# 7 ---------------------------------------------------------------------------

T_SAMPLES = 0.125 * np.arange(33)


def _compare(eps, kappa):
    p = PerturbationParams(eps, kappa, 2)
    a0, phi0 = _data(GRID_1D, p, 0.1, 1)
    return run_comparison(a0, phi0, p, "parabolic", T_SAMPLES)


@pytest.mark.criterion(7, "comparison envelopes against the parabolic model")
class TestComparisonEnvelopes:
    def test_early_slope_and_constant_stability(self, record_property):
        runs = [_compare(eps, eps) for eps in (0.2, 0.1, 0.05)]
        slopes = []
        for res in runs:
            m = res.lowest_order
            assert m == 0
            assert np.all(res.errors[m][1:] > 0)
            slopes.append(loglog_fit(res.times, res.errors[m], "t", "first_third").slope)
        norm = [envelope_constant(r, normalized=True) for r in runs]
        raw = [envelope_constant(r, normalized=False) for r in runs]
        spread = max(norm) / min(norm)
        record_property("detail", "early slopes " + ", ".join(f"{s:.3f}" for s in slopes)
                        + f"; normalized C max/min {spread:.3f}; raw C max/min {max(raw) / min(raw):.3f}")
        assert max(slopes) <= 0.7
        assert spread <= 2.0

    def test_kappa_equal_eps_is_best(self, record_property):
        eps = 0.1
        consts = {name: envelope_constant(_compare(eps, kappa), normalized=True)
                  for name, kappa in (("eps", eps), ("eps^3/4", eps ** 0.75), ("sqrt(eps)", math.sqrt(eps)))}
        record_property("detail", "normalized C " + ", ".join(f"kappa={k}: {v:.3g}" for k, v in consts.items()))
        assert consts["eps"] < min(consts["eps^3/4"], consts["sqrt(eps)"])


# 8 ---------------------------------------------------------------------------


@pytest.mark.criterion(8, "semigroup bound constants finite and stable under refinement")
class TestBoundCertification:
    @pytest.mark.parametrize("eps,kappa", [(0.1, 0.1), (0.05, 0.025), (0.2, math.sqrt(0.2))])
    def test_refinement(self, eps, kappa, record_property):
        p = PerturbationParams(eps, kappa)
        reports = []
        for n_xi in (64, 256):
            xi, t = default_bound_sweep(p, n_xi=n_xi, n_t=64)
            reports.append(verify_semigroup_bounds(p, xi, t, 32).regimes)
        parts = []
        for regime in ("small", "other"):
            coarse, fine = reports[0][regime], reports[1][regime]
            assert coarse["finite"] and fine["finite"]
            c_ratio = max(coarse["C"], fine["C"]) / min(coarse["C"], fine["C"])
            assert c_ratio < 2.0
            parts.append(f"{regime} C {coarse['C']:.3g}->{fine['C']:.3g}")
            if coarse["c"] is not None:
                rate_ratio = max(coarse["c"], fine["c"]) / min(coarse["c"], fine["c"])
                assert coarse["c"] > 0 and rate_ratio < 2.0
                parts.append(f"c {coarse['c']:.3g}->{fine['c']:.3g}")
        record_property("detail", f"eps={eps:.3g} kappa={kappa:.3g}: " + ", ".join(parts))


# 9 ---------------------------------------------------------------------------


@pytest.mark.criterion(9, "residual suites detect single-term sign flips")
class TestMutations:
    def test_sign_flips(self, record_property):
        p = PerturbationParams(0.1, 0.1, 2)
        a0, phi0 = _data(GRID_1D, p, 0.3, 3)
        cfg = SolverConfig(dt=2.5e-5, t_end=1e-3, method="rk4_reference", record_stride=4)
        traj = integrate(build_psi(a0, phi0, p), cfg, p, hydro_norms=False)
        base_bz = residual_bz(traj, p).max
        base_bv = residual_bv_reformulated(traj, p).max
        ratios = {m: residual_bz(traj, p, m).max / base_bz for m in BZ_MUTATIONS}
        ratios.update({m: residual_bv_reformulated(traj, p, m).max / base_bv for m in BV_MUTATIONS})
        record_property("detail", ", ".join(f"{k} {v:.3g}x" for k, v in ratios.items()))
        assert ratios["flip_grad_zz"] >= 100
        assert ratios["flip_h0_zz"] >= 100


# 10 --------------------------------------------------------------------------

DETERMINISM_CONFIG = """[grid]
n = 256

[params]
eps = 0.1
kappa = 0.1

[solver]
t_end = 0.2
record_stride = 4

[initial]
seed = 7
amp = 0.1
phase_amp = 0.1
small_data = ignore

[experiment]
t_stride = 0.125
t_window = 0.5
workers = 2
"""


@pytest.mark.criterion(10, "bit-identical CSV artifacts for repeated runs")
class TestDeterminism:
    @pytest.mark.parametrize("command", ["simulate", "compare", "sweep", "diagnostics"])
    def test_repeat(self, tmp_path, command, record_property):
        cfg = tmp_path / "run.ini"
        cfg.write_text(DETERMINISM_CONFIG)
        outs = []
        for tag in ("first", "second"):
            root = tmp_path / tag
            assert main([command, "--config", str(cfg), "--out", str(root), "--quiet"]) == 0
            outs.append(root)
        first = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.csv"))
        second = sorted(p.relative_to(outs[1]) for p in outs[1].rglob("*.csv"))
        assert first and first == second
        for rel in first:
            assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel
        record_property("detail", f"{command}: {len(first)} CSV identical")
