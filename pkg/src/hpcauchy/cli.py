"""Command-line runner: ``hpcauchy <experiment> [--config FILE] [flags]``.

Each run writes ``summary.json``, ``histogram.csv`` (when the experiment
produces values), ``samples.jsonl`` (with ``--dump-samples``) and
``MANIFEST.json`` into ``--out``.  Exit status: 0 on success, 1 when an
acceptance check fails or a replay does not reproduce, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

import numpy as np

from . import __version__
from .errors import AccuracyError, ConvergenceError, DomainError, FitError, SamplerQualityError
from .experiments import DEFAULTS, DESCRIPTIONS, GENERATORS, run
from .stats import write_histogram_csv

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, default=_json_default, indent=1)


def config_hash(cfg):
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=_json_default).encode()).hexdigest()


def _git_rev():
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        return out.stdout.strip() or None
    except (OSError, subprocess.SubprocessError):
        return None


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


# flag name -> (config key, type); flags that every experiment shares come first
_COMMON = {"seed": int, "workers": int}
_FLAGS = {
    "boole": {"atoms": int, "t": _floats, "seeds": int, "rel_tol": float},
    "cauchy": {"generator": str, "samples": int, "W": float, "L": float, "rho": float, "h": float, "n": int,
               "e0": float, "jitter": float, "shifts": int, "alpha": _floats, "beta": _floats,
               "theta": _floats, "tol_re": float, "tol_im": float, "ks_max": float, "p_min": float,
               "hist_lo": float, "hist_hi": float, "hist_bins": int},
    "number-variance": {"process": str, "samples": int, "W": float, "h": float, "rho": float, "x_min": float,
                        "x_max": float, "x_points": int, "anchors": str, "anchor_step": float,
                        "slope_rel_tol": float, "var_rel_tol": float},
    "gamma": {"route": str, "generator": str, "samples": int, "W": float, "L": float, "rho": float, "h": float,
              "n": int, "e0": float, "jitter": float, "shifts": int, "x": float, "eta_max": float,
              "eta_points": int, "tol": float},
    "metrics-sweep": {"pairs": int, "max_atoms": int, "w_max": float},
    "shift-covariance": {"samples": int, "a": float, "windows": _floats, "max_discrepancy": float},
    "star-modulus": {"samples": int, "W": float, "x": float, "deltas": _floats},
}


def build_parser():
    p = _Parser(prog="hpcauchy", description="Cauchy-law experiments for random Herglotz-Pick functions.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name, flags in _FLAGS.items():
        sp = sub.add_parser(name, help=DESCRIPTIONS[name])
        sp.add_argument("--config", help="TOML file with flat key = value pairs")
        sp.add_argument("--out", default=None, help="output directory (default runs/<experiment>)")
        sp.add_argument("--dump-samples", action="store_true", help="also write samples.jsonl")
        for key, typ in {**_COMMON, **flags}.items():
            if key == "workers" and "workers" not in DEFAULTS[name]:
                continue
            flag = "--" + key.replace("_", "-")
            # window flags keep their case (--W, --L) and also accept lower case
            names = [flag] if flag == flag.lower() else [flag, flag.lower()]
            sp.add_argument(*names, dest=key, default=None, type=typ)
    rp = sub.add_parser("replay", help="re-run a manifest and compare summaries")
    rp.add_argument("manifest")
    rp.add_argument("--out", default=None)
    sub.add_parser("list", help="list experiment families")
    return p


def load_config(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if any(isinstance(v, dict) for v in data.values()):
        raise UsageError("config must be flat key = value pairs")
    return data


def execute(name, overrides, out, dump_samples=False):
    """Run one experiment and write its artifacts; returns ``(passed, summary)``."""
    t0 = time.perf_counter()
    try:
        result, cfg = run(name, overrides)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    wall = time.perf_counter() - t0
    os.makedirs(out, exist_ok=True)
    summary = {"schema_version": SCHEMA_VERSION, "experiment": name, "seed": cfg["seed"], **result.summary}
    text = canonical_json(summary)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        fh.write(text)
    outputs = ["summary.json"]
    if result.values is not None:
        write_histogram_csv(os.path.join(out, "histogram.csv"), result.values, result.edges)
        outputs.append("histogram.csv")
    if dump_samples and result.sample_lines:
        with open(os.path.join(out, "samples.jsonl"), "w") as fh:
            for row in result.sample_lines:
                fh.write(json.dumps(row, default=_json_default) + "\n")
        outputs.append("samples.jsonl")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "experiment": name,
        "seed": cfg["seed"],
        "config": cfg,
        "config_hash": config_hash(cfg),
        "git_revision": _git_rev(),
        "wall_time_s": wall,
        "summary_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "outputs": outputs,
        "passed": result.passed,
    }
    with open(os.path.join(out, "MANIFEST.json"), "w") as fh:
        fh.write(canonical_json(manifest))
    return result.passed, summary


def replay(manifest_path, out=None):
    try:
        with open(manifest_path) as fh:
            man = json.load(fh)
        name, cfg, want = man["experiment"], man["config"], man["summary_sha256"]
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"unreadable manifest: {exc}") from exc
    if man.get("schema_version") != SCHEMA_VERSION:
        raise UsageError(f"manifest schema {man.get('schema_version')} != {SCHEMA_VERSION}")
    out = out or os.path.join(os.path.dirname(os.path.abspath(manifest_path)), "replay")
    execute(name, cfg, out)
    with open(os.path.join(out, "summary.json")) as fh:
        got = hashlib.sha256(fh.read().encode()).hexdigest()
    return got == want


def list_experiments():
    lines = [f"{name:18s} {DESCRIPTIONS[name]}" for name in DEFAULTS]
    lines.append("cauchy generators: " + ", ".join(GENERATORS))
    return "\n".join(lines)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("an experiment name is required (try 'list')")
        if args.command == "list":
            print(list_experiments())
            return EXIT_OK
        if args.command == "replay":
            same = replay(args.manifest, args.out)
            print("replay identical" if same else "replay differs")
            return EXIT_OK if same else EXIT_FAIL
        name = args.command
        cfg = load_config(args.config) if args.config else {}
        flags = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config", "out", "dump_samples") and v is not None}
        cfg.update(flags)
        out = args.out or os.path.join("runs", name)
        passed, summary = execute(name, cfg, out, args.dump_samples)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FitError, AccuracyError, ConvergenceError, SamplerQualityError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        print("FAIL")
        return EXIT_FAIL
    print(json.dumps({k: v for k, v in summary.items() if not isinstance(v, list) or len(v) <= 16},
                     default=_json_default))
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
