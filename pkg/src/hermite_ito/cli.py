"""Command line: ``run <config>``, ``summarize <dir>``, ``list-presets``.

A config file has a ``[run]`` section (kind, seed, output) and one section
named after the experiment kind whose keys are that experiment's
parameters.  Unknown sections or keys are errors, reported with their line.

Exit codes: 0 all criteria pass, 1 some criterion fails, 2 configuration
or usage error, 3 numeric or simulation failure.
"""
from __future__ import annotations

import argparse
import configparser
import inspect
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, HermiteItoError, UsageError
from .experiments import KINDS, convergence_csv, slope_fit
from .levy_app import PRESETS, preset

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
RUN_KEYS = {"kind", "seed", "output"}
CAP_KINDS = {"ito-purejump", "ito-brownian", "levy-spde"}
LEVEL_FILE = re.compile(r"level_(\d+)\.csv$")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    output: Path
    params: dict


def _key_lines(text: str) -> dict:
    # (section, key) -> line number, for diagnostics
    lines, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = no
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
        lines[(section, key)] = no
    return lines


def _convert(raw: str, default, where: str):
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(raw)
            return low in ("true", "yes", "1")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            kind = type(default[0]) if default else float
            return tuple(kind(v) for v in re.split(r"[,\s]+", raw.strip()) if v)
        return raw.strip()
    except ValueError:
        raise ConfigurationError(f"{where}: cannot read {raw!r} as {type(default).__name__}") from None


def parameters(kind: str) -> dict:
    fn = KINDS[kind].__wrapped__
    return {name: p.default for name, p in inspect.signature(fn).parameters.items()}


def parse_config(text: str, base: Path = Path(".")) -> ExperimentConfig:
    lines = _key_lines(text)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config syntax: {exc}") from None

    def at(section, key=None):
        return f"line {lines.get((section, key), '?')} [{section}]" + (f" {key}" if key else "")

    if "run" not in parser:
        raise ConfigurationError("missing [run] section")
    for key in parser["run"]:
        if key not in RUN_KEYS:
            raise ConfigurationError(f"{at('run', key)}: unknown key (allowed: {', '.join(sorted(RUN_KEYS))})")
    kind = parser["run"].get("kind")
    if kind not in KINDS:
        raise ConfigurationError(f"{at('run', 'kind')}: unknown kind {kind!r} (known: {', '.join(KINDS)})")
    seed = _convert(parser["run"].get("seed", "0"), 0, at("run", "seed"))
    output = Path(parser["run"].get("output", f"results/{kind}"))
    if not output.is_absolute():
        output = base / output
    for section in parser.sections():
        if section not in ("run", kind):
            raise ConfigurationError(f"{at(section)}: section does not match kind {kind!r}")
    defaults = parameters(kind)
    params = {}
    if kind in parser:
        for key, raw in parser[kind].items():
            if key not in defaults or key == "seed":
                allowed = ", ".join(k for k in defaults if k != "seed")
                raise ConfigurationError(f"{at(kind, key)}: unknown key (allowed: {allowed})")
            params[key] = _convert(raw, defaults[key], at(kind, key))
    if "seed" in defaults:
        params["seed"] = seed
    _validate(kind, {**defaults, **params}, lambda key: at(kind, key))
    return ExperimentConfig(kind, seed, output, params)


def _validate(kind, values, at):
    for key, val in values.items():
        if key.endswith("paths") and key not in ("save_paths", "refinement_paths") and val < 1:
            raise ConfigurationError(f"{at(key)}: path counts must be >= 1")
        if key in ("save_paths", "refinement_paths") and val < 0:
            raise ConfigurationError(f"{at(key)}: must be >= 0")
    levels = values.get("levels")
    if levels is not None and (len(levels) < 2 or any(b <= a for a, b in zip(levels, levels[1:]))):
        raise ConfigurationError(f"{at('levels')}: levels must be at least two ascending integers")
    if kind in CAP_KINDS and values["N_eval"] > values["N_big"] - 6:
        raise ConfigurationError(f"{at('N_eval')}: N_eval must be <= N_big - 6")


def write_outputs(cfg: ExperimentConfig, result) -> None:
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(result.tables.items()):
        target = out / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, newline="\n")
    summary = ["criterion,measured,threshold,status"]
    for c in result.criteria:
        thr = "|".join(repr(v) for v in c.threshold) if isinstance(c.threshold, tuple) else repr(c.threshold)
        summary.append(f"{c.id},{c.measured!r},{thr},{c.status}")
    (out / "summary.csv").write_text("\n".join(summary) + "\n", newline="\n")
    verdict = {
        "kind": cfg.kind,
        "seed": cfg.seed,
        "parameters": {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.params.items()},
        "criteria": [c.as_dict() for c in result.criteria],
        "passed": result.passed,
        "info": _jsonable(result.info),
        "runtime_seconds": round(result.runtime, 3),
    }
    (out / "verdict.json").write_text(json.dumps(verdict, indent=2, sort_keys=True) + "\n", newline="\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def run(config_path) -> int:
    path = Path(config_path)
    try:
        cfg = parse_config(path.read_text(), path.parent)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, UsageError) as exc:
        print(f"config error in {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run_id = f"{cfg.kind}/seed={cfg.seed}"
    try:
        result = KINDS[cfg.kind](**cfg.params)
    except (ConfigurationError, UsageError) as exc:
        print(f"config error in run {run_id}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HermiteItoError as exc:
        print(f"numeric error in run {run_id}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_outputs(cfg, result)
    for c in result.criteria:
        print(c.line())
    print(f"{'PASS' if result.passed else 'FAIL'} {run_id} ({result.runtime:.1f} s) -> {cfg.output}")
    return EXIT_OK if result.passed else EXIT_FAIL


def read_levels(directory: Path) -> dict:
    levels = {}
    for f in sorted(directory.glob("level_*.csv")):
        m = LEVEL_FILE.search(f.name)
        data = np.atleast_2d(np.loadtxt(f, delimiter=",", skiprows=1))
        if data.size == 0:
            raise UsageError(f"{f} has no rows")
        levels[int(m.group(1))] = (float(data[0, 1]), data[:, 2])
    return levels


def summarize(directory) -> int:
    directory = Path(directory)
    if not directory.is_dir():
        print(f"error: {directory} is not a directory", file=sys.stderr)
        return EXIT_CONFIG
    try:
        levels = read_levels(directory)
        if len(levels) < 2:
            raise UsageError(f"need at least two level_*.csv files in {directory}, found {len(levels)}")
        keys = sorted(levels)
        dts = [levels[k][0] for k in keys]
        medians = [float(np.median(levels[k][1])) for k in keys]
        slope = slope_fit(dts, medians)
    except (UsageError, ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = convergence_csv(keys, dts, medians, slope)
    (directory / "convergence.csv").write_text(text, newline="\n")
    sys.stdout.write(text)
    return EXIT_OK


def list_presets() -> int:
    for name in PRESETS:
        m = preset(name)
        print(f"{name}: small-jump rate {m.small.rate:g} ({m.small.kind}, eps {m.small.eps:g}), "
              f"large-jump rate {m.large_rate:g} at +-{m.large_size:g}, "
              f"|sigma| {np.linalg.norm(m.sigma.c):g}, |b| {np.linalg.norm(m.b.c):g}")
    print("experiment kinds: " + ", ".join(KINDS))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hermite-ito", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_sum = sub.add_parser("summarize", help="convergence table from level-tagged CSVs")
    p_sum.add_argument("directory")
    sub.add_parser("list-presets", help="show model presets and experiment kinds")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config)
    if args.command == "summarize":
        return summarize(args.directory)
    return list_presets()


if __name__ == "__main__":
    sys.exit(main())
