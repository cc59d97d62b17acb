"""Command line entry point: ``cglwave <subcommand> --config run.ini``."""
import argparse
from dataclasses import replace
import sys
import warnings

from .config import EXPERIMENT_KEYS, parse_config
from .errors import CGLWaveError, ConfigurationError
from .io import output_root
from .runner import EXIT_CONFIG, ProgressWriter, run

SUBCOMMANDS = ("simulate", "compare", "sweep", "verify-semigroup", "diagnostics")


def build_parser():
    ap = argparse.ArgumentParser(prog="cglwave", description="Long-wave CGL experiments on a periodic grid")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="INI configuration file")
        sp.add_argument("--out", default=None, help="output root (default: $CGLWAVE_OUTPUT_ROOT or ./runs)")
        sp.add_argument("--seed", type=int, default=None, help="override [initial] seed")
        sp.add_argument("--quiet", action="store_true", help="no progress or report on stdout")
        if name in ("compare", "sweep"):
            sp.add_argument("--model", choices=("damped_wave", "parabolic"), default=None)
    return ap


def _apply_overrides(text, command, args):
    """Force the experiment name to the subcommand and apply flag overrides."""
    cfg = parse_config(_with_experiment(text, command))
    ini = cfg.initial
    if args.seed is not None:
        ini = replace(ini, seed=args.seed)
    options = dict(cfg.experiment.options)
    if getattr(args, "model", None):
        options["model"] = args.model
    cfg = replace(cfg, initial=ini, experiment=replace(cfg.experiment, options=options))
    # re-parse the effective document so every cross-field check sees the overrides
    return parse_config(cfg.to_ini())


def _with_experiment(text, command):
    """Replace or insert ``name`` in the [experiment] section; drop keys of other experiments."""
    out, in_exp, seen = [], False, False
    allowed = set(EXPERIMENT_KEYS[command]) | {"name"}
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            if in_exp and not seen:
                out.append(f"name = {command}")
                seen = True
            in_exp = stripped == "[experiment]"
            out.append(line)
            continue
        if in_exp and "=" in stripped and not stripped.startswith((";", "#")):
            key = stripped.split("=", 1)[0].strip()
            if key == "name":
                out.append(f"name = {command}")
                seen = True
                continue
            if key not in allowed and _known_elsewhere(key):
                continue
        out.append(line)
    if in_exp and not seen:
        out.append(f"name = {command}")
        seen = True
    if not seen:
        out += ["", "[experiment]", f"name = {command}"]
    return "\n".join(out) + "\n"


def _known_elsewhere(key):
    return any(key in keys for keys in EXPERIMENT_KEYS.values())


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _apply_overrides(text, args.command, args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    root = args.out if args.out is not None else str(output_root(None if "[output]" not in text else cfg.output))
    progress = None if args.quiet else ProgressWriter(sys.stdout)
    with warnings.catch_warnings():
        if args.quiet:
            warnings.simplefilter("ignore")
        try:
            outcome = run(cfg, config_text=text, out_root=root, progress=progress, command=args.command)
        except CGLWaveError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return exc.exit_code
    if not args.quiet:
        sys.stdout.write(outcome.report)
        print(f"artifacts: {outcome.out_dir}")
    if outcome.status != 0:
        print(f"error: {outcome.summary.get('error', {}).get('message', 'run failed')}", file=sys.stderr)
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
