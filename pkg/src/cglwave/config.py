"""Run configuration: one INI document, validated in full before any run.

Annotated example (every key shown; only ``[params] eps`` and ``kappa`` are
required, everything else has the default listed here)::

    [grid]
    dim = 1                  ; 1 or 2
    n = 256                  ; points per dimension, power of two >= 16
    L = 100.53096491487338   ; period of the torus (default 2 pi 16)

    [params]
    eps = 0.1                ; in (0, 1]
    kappa = 0.1              ; in (0, 1)
    s = 2                    ; Sobolev index, s > 1 + dim/2 is recommended

    [solver]
    method = strang_exact    ; strang_exact | rk4_reference | bv_direct
    dt = auto                ; auto picks the per-method default
    t_end = 1.0              ; parabolic-frame end time
    record_stride = 1        ; steps between recorded snapshots
    dealias = true

    [initial]
    preset = random_band     ; gaussian_bump | single_mode | random_band
    seed = 1
    max_mode = 8             ; random_band: largest integer wavenumber
    amp = 0.04               ; H^s norm of a0 (random_band) or peak amplitude
    phase_amp = 0.04         ; same for phi0
    width = 4.0              ; gaussian_bump width
    mode = 1                 ; single_mode integer wavenumber
    small_data = warn        ; warn | enforce | ignore the M0 threshold
    threshold_factor = 0.1   ; M0 <= factor * min(nu, 1/kappa, 1/eps)

    [experiment]
    name = simulate          ; simulate | compare | sweep | verify-semigroup | diagnostics
    ; experiment-specific keys, see EXPERIMENT_KEYS

    [output]
    directory = runs
"""
from configparser import ConfigParser, Error as ParserError
from dataclasses import asdict, dataclass, field
import math

from .errors import ConfigurationError
from .solver import METHODS
from .spectral import DEFAULT_PERIOD, KAPPA_0

PRESETS = ("gaussian_bump", "single_mode", "random_band")
EXPERIMENTS = ("simulate", "compare", "sweep", "verify-semigroup", "diagnostics")
SMALL_DATA_MODES = ("warn", "enforce", "ignore")

SECTION_KEYS = {
    "grid": ("dim", "n", "L"),
    "params": ("eps", "kappa", "s"),
    "solver": ("method", "dt", "t_end", "record_stride", "dealias"),
    "initial": ("preset", "seed", "max_mode", "amp", "phase_amp", "width", "mode",
                "small_data", "threshold_factor"),
    "experiment": None,  # checked per experiment name
    "output": ("directory",),
}
REQUIRED = {"params": ("eps", "kappa")}

EXPERIMENT_KEYS = {
    "simulate": {"snapshots": ("bool", False)},
    "compare": {
        "model": ("str", "parabolic"),
        "t_stride": ("float", 0.125),
        "t_window": ("float", 4.0),
    },
    "sweep": {
        "sweep": ("str", "halve_eps_fixed_nu"),
        "n_points": ("int", 3),
        "model": ("str", "parabolic"),
        "t_stride": ("float", 0.125),
        "t_window": ("float", 4.0),
        "workers": ("int", 1),
    },
    "verify-semigroup": {
        "n_xi": ("int", 64),
        "n_t": ("int", 64),
        "n_directions": ("int", 32),
    },
    "diagnostics": {
        "k": ("int", 1),
        "residuals": ("bool", True),
    },
}


@dataclass
class GridConfig:
    dim: int = 1
    n: int = 256
    L: float = DEFAULT_PERIOD


@dataclass
class ParamConfig:
    eps: float = 0.1
    kappa: float = 0.1
    s: int = 2


@dataclass
class SolverSection:
    method: str = "strang_exact"
    dt: float | None = None
    t_end: float = 1.0
    record_stride: int = 1
    dealias: bool = True


@dataclass
class InitialConfig:
    preset: str = "random_band"
    seed: int = 1
    max_mode: int = 8
    amp: float = 0.04
    phase_amp: float = 0.04
    width: float = 4.0
    mode: int = 1
    small_data: str = "warn"
    threshold_factor: float = 0.1


@dataclass
class ExperimentConfig:
    name: str = "simulate"
    options: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    params: ParamConfig = field(default_factory=ParamConfig)
    solver: SolverSection = field(default_factory=SolverSection)
    initial: InitialConfig = field(default_factory=InitialConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    output: str = "runs"

    def to_dict(self):
        return asdict(self)

    def to_ini(self):
        """Effective configuration as an INI document (round-trips through parse_config)."""
        lines = []
        d = self.to_dict()
        for section in ("grid", "params", "solver", "initial"):
            lines.append(f"[{section}]")
            for key, value in d[section].items():
                lines.append(f"{key} = {_fmt(value)}")
            lines.append("")
        lines.append("[experiment]")
        lines.append(f"name = {self.experiment.name}")
        for key, value in self.experiment.options.items():
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
        lines.append("[output]")
        lines.append(f"directory = {self.output}")
        return "\n".join(lines) + "\n"


def _fmt(value):
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class _Reader:
    """Typed access to one section that records problems instead of raising."""

    def __init__(self, parser, section, problems):
        self.items = dict(parser.items(section)) if parser.has_section(section) else {}
        self.section = section
        self.problems = problems

    def get(self, key, kind, default):
        if key not in self.items:
            return default
        raw = self.items[key].strip()
        try:
            if kind == "int":
                value = float(raw)
                if value != int(value):
                    raise ValueError
                return int(value)
            if kind == "float":
                return float(raw)
            if kind == "bool":
                low = raw.lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError
            if kind == "float_or_auto":
                return None if raw.lower() == "auto" else float(raw)
            return raw
        except ValueError:
            self.problems.append(f"[{self.section}] {key}: cannot parse {raw!r} as {kind}")
            return default


def parse_config(text):
    """Parse and validate an INI document; raises ConfigurationError listing every problem."""
    parser = ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except ParserError as exc:
        raise ConfigurationError(f"malformed configuration: {exc}", [str(exc)]) from None

    problems = []
    for section in parser.sections():
        if section not in SECTION_KEYS:
            problems.append(f"unknown section [{section}]")
            continue
        allowed = SECTION_KEYS[section]
        if allowed is None:
            continue
        for key in parser[section]:
            if key not in allowed:
                problems.append(f"[{section}] unknown key {key!r} (allowed: {', '.join(allowed)})")
    for section, keys in REQUIRED.items():
        for key in keys:
            if not parser.has_option(section, key):
                problems.append(f"[{section}] missing required key {key!r}")

    g = _Reader(parser, "grid", problems)
    grid = GridConfig(g.get("dim", "int", 1), g.get("n", "int", 256), g.get("L", "float", DEFAULT_PERIOD))
    pr = _Reader(parser, "params", problems)
    params = ParamConfig(pr.get("eps", "float", math.nan), pr.get("kappa", "float", math.nan), pr.get("s", "int", 2))
    so = _Reader(parser, "solver", problems)
    solver = SolverSection(
        method=so.get("method", "str", "strang_exact"),
        dt=so.get("dt", "float_or_auto", None),
        t_end=so.get("t_end", "float", 1.0),
        record_stride=so.get("record_stride", "int", 1),
        dealias=so.get("dealias", "bool", True),
    )
    ini = _Reader(parser, "initial", problems)
    initial = InitialConfig(
        preset=ini.get("preset", "str", "random_band"),
        seed=ini.get("seed", "int", 1),
        max_mode=ini.get("max_mode", "int", 8),
        amp=ini.get("amp", "float", 0.04),
        phase_amp=ini.get("phase_amp", "float", 0.04),
        width=ini.get("width", "float", 4.0),
        mode=ini.get("mode", "int", 1),
        small_data=ini.get("small_data", "str", "warn"),
        threshold_factor=ini.get("threshold_factor", "float", 0.1),
    )
    ex = _Reader(parser, "experiment", problems)
    name = ex.get("name", "str", "simulate")
    options = {}
    if name in EXPERIMENT_KEYS:
        spec = EXPERIMENT_KEYS[name]
        for key in ex.items:
            if key != "name" and key not in spec:
                problems.append(f"[experiment] unknown key {key!r} for {name!r} (allowed: {', '.join(spec)})")
        for key, (kind, default) in spec.items():
            options[key] = ex.get(key, kind, default)
    out = _Reader(parser, "output", problems)
    cfg = RunConfig(grid, params, solver, initial, ExperimentConfig(name, options),
                    out.get("directory", "str", "runs"))
    problems.extend(validate(cfg))
    if problems:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(problems), problems)
    return cfg


def validate(cfg):
    """All cross-field checks; returns a list of messages (empty when valid)."""
    out = []
    g, p, so, ini, ex = cfg.grid, cfg.params, cfg.solver, cfg.initial, cfg.experiment
    if g.dim not in (1, 2):
        out.append("[grid] dim must be 1 or 2")
    if g.n < 16 or g.n & (g.n - 1):
        out.append("[grid] n must be a power of two >= 16")
    if not g.L > 0:
        out.append("[grid] L must be positive")
    if not math.isnan(p.eps) and not 0 < p.eps <= 1:
        out.append("[params] eps must be in (0,1]")
    if not math.isnan(p.kappa) and not 0 < p.kappa < 1:
        out.append("[params] kappa must be in (0,1)")
    if p.s < 2:
        out.append("[params] s must be an integer >= 2")
    if so.method not in METHODS:
        out.append(f"[solver] method must be one of {', '.join(METHODS)}")
    if so.dt is not None and not so.dt > 0:
        out.append("[solver] dt must be positive or 'auto'")
    if not so.t_end > 0:
        out.append("[solver] t_end must be positive")
    elif so.dt is not None and so.dt > so.t_end:
        out.append("[solver] dt must not exceed t_end")
    if so.record_stride < 1:
        out.append("[solver] record_stride must be >= 1")
    if ini.preset not in PRESETS:
        out.append(f"[initial] preset must be one of {', '.join(PRESETS)}")
    if ini.seed < 0:
        out.append("[initial] seed must be >= 0")
    if ini.preset == "random_band" and not 0 < ini.max_mode < g.n // 3:
        out.append(f"[initial] max_mode must be in (0, n/3) = (0, {g.n // 3}) to stay inside the dealiased band")
    if ini.preset == "single_mode" and not 0 < ini.mode < g.n // 3:
        out.append(f"[initial] mode must be in (0, n/3) = (0, {g.n // 3})")
    if ini.preset == "gaussian_bump" and not ini.width > 0:
        out.append("[initial] width must be positive")
    if ini.amp < 0 or ini.phase_amp < 0:
        out.append("[initial] amp and phase_amp must be >= 0")
    if ini.small_data not in SMALL_DATA_MODES:
        out.append(f"[initial] small_data must be one of {', '.join(SMALL_DATA_MODES)}")
    if not ini.threshold_factor > 0:
        out.append("[initial] threshold_factor must be positive")
    if ex.name not in EXPERIMENTS:
        out.append(f"[experiment] name must be one of {', '.join(EXPERIMENTS)}")
    opts = ex.options
    if ex.name in ("compare", "sweep"):
        if opts["model"] not in ("damped_wave", "parabolic"):
            out.append("[experiment] model must be damped_wave or parabolic")
        if not opts["t_stride"] > 0 or not opts["t_window"] >= 2 * opts["t_stride"]:
            out.append("[experiment] need t_stride > 0 and t_window >= 2 t_stride")
    if ex.name == "sweep":
        if opts["sweep"] not in ("halve_eps_fixed_nu", "halve_eps_fixed_kappa", "vary_t"):
            out.append("[experiment] sweep must be halve_eps_fixed_nu, halve_eps_fixed_kappa or vary_t")
        if opts["n_points"] < 3:
            out.append("[experiment] n_points must be >= 3")
        if opts["workers"] < 1:
            out.append("[experiment] workers must be >= 1")
    if ex.name == "verify-semigroup":
        if p.kappa >= KAPPA_0:
            out.append(f"[params] kappa = {p.kappa} violates kappa < kappa_0 = sqrt(8/9) = {KAPPA_0:.6f}, "
                       "required by the second-regime semigroup bound")
        for key in ("n_xi", "n_t", "n_directions"):
            if opts[key] < 2:
                out.append(f"[experiment] {key} must be >= 2")
    if ex.name == "diagnostics" and not 1 <= opts["k"] <= p.s:
        out.append(f"[experiment] k must satisfy 1 <= k <= s = {p.s}")
    if ex.name == "diagnostics" and so.method == "bv_direct":
        out.append("[solver] diagnostics needs a wave-function method (strang_exact or rk4_reference)")
    return out


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
