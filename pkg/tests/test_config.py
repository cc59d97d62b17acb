from pathlib import Path

import pytest

from cglwave.config import EXPERIMENT_KEYS, load_config, parse_config
from cglwave.errors import ConfigurationError

MINIMAL = "[params]\neps = 0.1\nkappa = 0.1\n"


def _violations(text):
    with pytest.raises(ConfigurationError) as info:
        parse_config(text)
    assert info.value.exit_code == 2
    return info.value.violations


class TestParse:
    def test_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.grid.dim == 1 and cfg.grid.n == 256
        assert cfg.params.s == 2
        assert cfg.solver.method == "strang_exact"
        assert cfg.solver.dt is None
        assert cfg.initial.preset == "random_band"
        assert cfg.experiment.name == "simulate"

    def test_experiment_defaults_filled(self):
        cfg = parse_config(MINIMAL + "[experiment]\nname = compare\n")
        assert set(cfg.experiment.options) == set(EXPERIMENT_KEYS["compare"])
        assert cfg.experiment.options["model"] == "parabolic"

    def test_round_trip(self):
        cfg = parse_config(MINIMAL + "[solver]\ndt = 0.001\nt_end = 0.5\n[experiment]\nname = sweep\nworkers = 2\n")
        again = parse_config(cfg.to_ini())
        assert again == cfg
        assert again.to_dict()["solver"]["dt"] == 0.001

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text(MINIMAL)
        assert load_config(path).params.eps == 0.1


class TestRejection:
    def test_missing_required(self):
        v = _violations("[grid]\nn = 64\n")
        assert sum("missing required key" in m for m in v) == 2

    def test_eps_range_message(self):
        v = _violations("[params]\neps = 1.5\nkappa = 0.1\n")
        assert any("eps must be in (0,1]" in m for m in v)

    def test_kappa_range_message(self):
        v = _violations("[params]\neps = 0.1\nkappa = 1.0\n")
        assert any("kappa must be in (0,1)" in m for m in v)

    def test_grid_message(self):
        v = _violations(MINIMAL + "[grid]\nn = 100\n")
        assert any("n must be a power of two >= 16" in m for m in v)

    def test_all_violations_reported_together(self):
        v = _violations("[params]\neps = 0\nkappa = 2\n[grid]\nn = 12\ndim = 3\n[solver]\nmethod = euler\n")
        assert len(v) >= 5

    def test_unknown_section_and_key(self):
        v = _violations(MINIMAL + "[extras]\nfoo = 1\n[grid]\nsize = 3\n")
        assert any("extras" in m for m in v)
        assert any("size" in m for m in v)

    def test_key_of_other_experiment(self):
        v = _violations(MINIMAL + "[experiment]\nname = simulate\nmodel = parabolic\n")
        assert any("model" in m for m in v)

    def test_bad_types(self):
        v = _violations("[params]\neps = small\nkappa = 0.1\n[grid]\nn = 6.5\n")
        assert len(v) >= 2

    def test_kappa_zero_for_semigroup(self):
        v = _violations("[params]\neps = 0.1\nkappa = 0.95\n[experiment]\nname = verify-semigroup\n")
        assert any("kappa_0" in m for m in v)

    def test_kappa_zero_irrelevant_elsewhere(self):
        assert parse_config("[params]\neps = 0.1\nkappa = 0.95\n").params.kappa == 0.95

    def test_max_mode_inside_dealiased_band(self):
        v = _violations(MINIMAL + "[grid]\nn = 32\n[initial]\nmax_mode = 12\n")
        assert any("max_mode" in m for m in v)

    def test_diagnostics_k(self):
        v = _violations(MINIMAL + "[experiment]\nname = diagnostics\nk = 3\n")
        assert any("k must satisfy" in m for m in v)

    def test_dt_exceeds_t_end(self):
        v = _violations(MINIMAL + "[solver]\ndt = 2\nt_end = 1\n")
        assert any("dt must not exceed" in m for m in v)

    def test_malformed_ini(self):
        _violations("eps = 0.1\n")

    def test_nan_not_double_reported(self):
        v = _violations("[params]\nkappa = 0.1\n")
        assert len(v) == 1


@pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "configs").glob("*.ini")), ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert cfg.experiment.name in path.stem.replace("_", "-")
