"""Command-line interface: experiment orchestration and stable on-disk output.

Subcommands
  run           one policy, Monte Carlo over repetitions
  compare       several policies on one shared instance and seed
  lower-bounds  asymptotic bound constants for an instance, all M
  tree          exact enumeration of self-play trapping states
  verify        re-hash a result directory against its manifest

Outputs are CSV (RFC 4180, CRLF) plus a JSON manifest carrying the config
echo, generator name, and sha256 of every artifact. CSV bodies depend only
on (config, seed), never on wall-clock or thread count.

Exit codes: 0 success, 2 usage, 3 config file errors, 4 invalid
configuration values, 5 resource cap exceeded, 6 verification mismatch,
7 output I/O failure.
"""

import argparse
import csv
import dataclasses
import datetime
import hashlib
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .analysis import lower_bound_ours, lower_bound_zhao
from .core import BanditInstance
from .policies import POLICY_TAGS
from .simulator import GENERATOR_NAME, SimulationConfig, run_monte_carlo
from . import tree as treemod

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_VALIDATION = 4
EXIT_RESOURCE = 5
EXIT_VERIFY = 6
EXIT_IO = 7

SCHEMA_VERSION = 1

SUMMARY_COLUMNS = ("rep", "policy", "final_pseudo_regret", "final_realized_regret",
                   "term_a", "term_b", "term_c", "collisions_total",
                   "switches_total", "transitions_1", "transitions_2",
                   "transitions_3", "transitions_4", "transitions_5")
CURVES_COLUMNS = ("policy", "t", "mean_regret", "std_regret",
                  "mean_cum_collisions", "lb_ours_times_logt",
                  "lb_zhao_times_logt")
HIST_COLUMNS = ("policy", "bin_left", "bin_right", "count")
HIST_BINS = 20


class ConfigError(Exception):
    """Structural problem in a config file; carries a line number if known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)


_CONFIG_KEYS = {
    "means": (list, tuple),
    "K": (int,),
    "M": (int,),
    "T": (int,),
    "model": (str,),
    "policy": (str,),
    "policies": (list,),
    "reps": (int,),
    "seed": (int,),
    "tol": (int, float),
    "unpulled": (int, float, str),
    "f_variant": (str,),
    "collision_switch_in_topm": (bool,),
    "T0": (int,),
    "checkpoint_mode": (str,),
    "checkpoint_ratio": (int, float),
    "threads": (int,),
}


def _key_line(text, key):
    for i, line in enumerate(text.splitlines(), 1):
        if '"%s"' % key in line:
            return i
    return None


def split_policy(name):
    """'mctopm-klucb' -> ('mctopm', 'klucb'); flavor defaults to klucb."""
    s = str(name).strip().lower()
    flavor = "klucb"
    for suffix in ("-ucb", "-klucb"):
        if s.endswith(suffix):
            flavor = suffix[1:]
            s = s[: -len(suffix)]
            break
    if s not in POLICY_TAGS:
        raise ConfigError("unknown policy %r (tags: %s, optional -ucb/-klucb suffix)"
                          % (name, ", ".join(POLICY_TAGS)))
    return s, flavor


def policy_label(config):
    """Canonical policy string used in output rows."""
    if config.policy == "musicalchairs":
        return "musicalchairs"
    return "%s-%s" % (config.policy, config.flavor)


def _parse_unpulled(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError("unpulled must be a number or \"inf\", got %r" % (value,))


def parse_config(path, policy_key="policy"):
    """Read and validate a JSON config file into SimulationConfig.

    policy_key selects between the single-policy form ("policy") and the
    list form ("policies") used by compare; the latter returns a list of
    configs differing only in policy.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError("cannot read config %s: %s" % (path, e))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("invalid JSON: %s" % e.msg, line=e.lineno)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")

    for key, value in data.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError("unknown key %r" % key, line=_key_line(text, key))
        # bool is an int subclass; keep the two apart
        ok_types = _CONFIG_KEYS[key]
        if isinstance(value, bool) and bool not in ok_types:
            raise ConfigError("key %r: expected %s, got boolean"
                              % (key, "/".join(t.__name__ for t in ok_types)),
                              line=_key_line(text, key))
        if not isinstance(value, ok_types):
            raise ConfigError("key %r: expected %s, got %s"
                              % (key, "/".join(t.__name__ for t in ok_types),
                                 type(value).__name__),
                              line=_key_line(text, key))
    if "means" in data:
        for v in data["means"]:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError("means must be numbers",
                                  line=_key_line(text, "means"))

    if policy_key == "policy":
        if "policy" not in data:
            raise ConfigError("missing required key \"policy\"")
        names = [data["policy"]]
    else:
        if "policies" not in data or not data["policies"]:
            raise ConfigError("compare needs a non-empty \"policies\" list")
        names = list(data["policies"])

    base = dict(
        M=data.get("M"), T=data.get("T"), reps=data.get("reps", 1),
        master_seed=data.get("seed"),
        means=tuple(float(v) for v in data["means"]) if "means" in data else None,
        K=data.get("K"), model=data.get("model", "I"),
        tol=float(data.get("tol", 1e-6)),
        unpulled=_parse_unpulled(data.get("unpulled", 1.0)),
        f_variant=data.get("f_variant", "theory"),
        collision_switch_in_topm=data.get("collision_switch_in_topm", False),
        T0=data.get("T0", 0),
        checkpoint_mode=data.get("checkpoint_mode", "auto"),
        checkpoint_ratio=float(data.get("checkpoint_ratio", 1.1)),
        threads=data.get("threads", 1),
    )
    if base["M"] is None:
        raise ConfigError("missing required key \"M\"")
    if base["T"] is None:
        raise ConfigError("missing required key \"T\"")

    configs = []
    for name in names:
        tag, flavor = split_policy(name)
        configs.append(SimulationConfig(policy=tag, flavor=flavor, **base))
    return configs[0] if policy_key == "policy" else configs


def _apply_overrides(config, args):
    changes = {}
    if getattr(args, "reps", None) is not None:
        changes["reps"] = args.reps
    if getattr(args, "seed", None) is not None:
        changes["master_seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        changes["threads"] = args.threads
    return dataclasses.replace(config, **changes) if changes else config


def _fmt(value):
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


class _OutputSet:
    """Tracks files written by one command so failures leave nothing behind."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.paths = []

    def path(self, name):
        p = os.path.join(self.out_dir, name)
        self.paths.append(p)
        return p

    def discard_all(self):
        for p in self.paths:
            try:
                os.unlink(p)
            except OSError:
                pass


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _mean_bounds(summary):
    """Lower-bound constants for the summary's instance(s).

    With explicit means this is the instance's constant; in random-instance
    mode it is the average of the per-repetition constants.
    """
    cfg = summary.config
    if cfg.means is not None:
        inst = BanditInstance(cfg.means)
        return lower_bound_ours(inst, cfg.M), lower_bound_zhao(inst, cfg.M)
    ours = []
    zhao = []
    for row in summary.means:
        inst = BanditInstance(row)
        ours.append(lower_bound_ours(inst, cfg.M))
        zhao.append(lower_bound_zhao(inst, cfg.M))
    return float(np.mean(ours)), float(np.mean(zhao))


def _summary_rows(summary):
    label = policy_label(summary.config)
    trans = summary.transitions.sum(axis=1)
    for i in range(len(summary.final_pseudo)):
        yield (i, label, float(summary.final_pseudo[i]),
               float(summary.final_realized[i]), float(summary.term_a[i]),
               float(summary.term_b[i]), float(summary.term_c[i]),
               int(summary.collisions_total[i]), int(summary.switches_total[i]),
               int(trans[i, 0]), int(trans[i, 1]), int(trans[i, 2]),
               int(trans[i, 3]), int(trans[i, 4]))


def _curve_rows(summary):
    label = policy_label(summary.config)
    ours, zhao = _mean_bounds(summary)
    for i, t in enumerate(summary.checkpoints):
        logt = float(np.log(t)) if t > 1 else 0.0
        yield (label, int(t), float(summary.regret_mean[i]),
               float(summary.regret_std[i]), float(summary.collisions_mean[i]),
               ours * logt, zhao * logt)


def _hist_rows(summary):
    label = policy_label(summary.config)
    counts, edges = np.histogram(summary.final_pseudo, bins=HIST_BINS)
    for i, c in enumerate(counts):
        yield (label, float(edges[i]), float(edges[i + 1]), int(c))


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(outputs, configs, started, command):
    names = [os.path.basename(p) for p in outputs.paths]
    manifest = {
        "format": "mpbandit-manifest",
        "schema_version": SCHEMA_VERSION,
        "build": "mpbandit %s" % __version__,
        "generator": GENERATOR_NAME,
        "command": command,
        "started_utc": started,
        "finished_utc": _now(),
        "config": [c.to_dict() for c in configs],
        "files": {},
    }
    for name, path in zip(names, list(outputs.paths)):
        manifest["files"][name] = {
            "sha256": _sha256(path),
            "bytes": os.path.getsize(path),
        }
    path = outputs.path("manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _now():
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _write_run_outputs(out_dir, summaries, command):
    started = _now()
    os.makedirs(out_dir, exist_ok=True)
    outputs = _OutputSet(out_dir)
    try:
        _write_csv(outputs.path("summary.csv"), SUMMARY_COLUMNS,
                   (row for s in summaries for row in _summary_rows(s)))
        _write_csv(outputs.path("curves.csv"), CURVES_COLUMNS,
                   (row for s in summaries for row in _curve_rows(s)))
        _write_csv(outputs.path("hist.csv"), HIST_COLUMNS,
                   (row for s in summaries for row in _hist_rows(s)))
        _write_manifest(outputs, [s.config for s in summaries], started, command)
    except BaseException:
        outputs.discard_all()
        raise


def cmd_run(args):
    config = _apply_overrides(parse_config(args.config, "policy"), args)
    summary = run_monte_carlo(config)
    _write_run_outputs(args.out, [summary], "run")
    print("wrote summary.csv, curves.csv, hist.csv, manifest.json to", args.out)
    return EXIT_OK


def cmd_compare(args):
    configs = [_apply_overrides(c, args) for c in parse_config(args.config, "policies")]
    summaries = [run_monte_carlo(c) for c in configs]
    _write_run_outputs(args.out, summaries, "compare")
    print("wrote merged outputs for %d policies to %s" % (len(summaries), args.out))
    return EXIT_OK


def cmd_lower_bounds(args):
    try:
        means = tuple(float(x) for x in args.means.split(","))
    except ValueError:
        raise ConfigError("--means must be comma-separated numbers")
    try:
        inst = BanditInstance(means)
    except ValueError as e:
        raise ValueError(str(e))
    rows = []
    for M in range(1, inst.K + 1):
        if not inst.in_p_m(M):
            raise ValueError("means leave the %d-best set ambiguous (tied means)" % M)
        rows.append((M, lower_bound_ours(inst, M), lower_bound_zhao(inst, M)))
    started = _now()
    os.makedirs(args.out, exist_ok=True)
    outputs = _OutputSet(args.out)
    try:
        _write_csv(outputs.path("lower_bounds.csv"), ("M", "lb_ours", "lb_zhao"), rows)
        cfg = SimulationConfig(M=1, T=1, reps=1, master_seed=0, means=means)
        _write_manifest(outputs, [cfg], started, "lower-bounds")
    except BaseException:
        outputs.discard_all()
        raise
    for M, ours, zhao in rows:
        print("M=%d ours=%s zhao=%s" % (M, _fmt(ours), _fmt(zhao)))
    return EXIT_OK


def cmd_tree(args):
    try:
        means = [Fraction(x.strip()) for x in args.means.split(",")]
    except (ValueError, ZeroDivisionError):
        raise ConfigError("--means must be comma-separated rationals like 1/10")
    unpulled = _parse_unpulled(args.unpulled)
    root = treemod.enumerate_tree(args.K, args.M, args.flavor, args.depth, means,
                                  unpulled=unpulled, tol=args.tol,
                                  horizon_check=args.horizon_check,
                                  node_cap=args.node_cap)
    record = treemod.tree_summary(root)
    record["flavor"] = treemod._flavor_tag(args.flavor)
    record["means"] = [str(m) for m in means]
    # inf is not valid JSON; keep the record parseable by strict readers
    record["unpulled"] = unpulled if np.isfinite(unpulled) else "inf"
    text = json.dumps(record, sort_keys=True)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "tree.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def cmd_verify(args):
    manifest_path = os.path.join(args.out, "manifest.json")
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print("verify: cannot read manifest: %s" % e, file=sys.stderr)
        return EXIT_VERIFY
    bad = []
    for name, info in sorted(manifest.get("files", {}).items()):
        path = os.path.join(args.out, name)
        if not os.path.exists(path):
            bad.append("%s: missing" % name)
            continue
        digest = _sha256(path)
        if digest != info.get("sha256"):
            bad.append("%s: sha256 mismatch" % name)
    if bad:
        for line in bad:
            print("verify: %s" % line, file=sys.stderr)
        return EXIT_VERIFY
    print("verify: %d files match" % len(manifest.get("files", {})))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="mpbandit",
        description="multi-player bandit simulation benchmarks")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one policy's Monte Carlo experiment")
    run.add_argument("--config", required=True, help="JSON config path")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--reps", type=int, help="override repetitions")
    run.add_argument("--seed", type=int, help="override master seed")
    run.add_argument("--threads", type=int, help="parallel repetition chunks")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="run several policies, shared instance and seed")
    cmp_.add_argument("--config", required=True,
                      help="JSON config with a \"policies\" list")
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--reps", type=int)
    cmp_.add_argument("--seed", type=int)
    cmp_.add_argument("--threads", type=int)
    cmp_.set_defaults(func=cmd_compare)

    lb = sub.add_parser("lower-bounds", help="bound constants for an instance, all M")
    lb.add_argument("--means", required=True, help="comma-separated arm means")
    lb.add_argument("--out", required=True)
    lb.set_defaults(func=cmd_lower_bounds)

    tr = sub.add_parser("tree", help="exact self-play trapping analysis")
    tr.add_argument("--K", type=int, required=True)
    tr.add_argument("--M", type=int, required=True)
    tr.add_argument("--flavor", default="selfish-klucb",
                    help="selfish-ucb or selfish-klucb")
    tr.add_argument("--depth", type=int, required=True)
    tr.add_argument("--means", required=True,
                    help="comma-separated rationals, e.g. 1/10,9/10")
    tr.add_argument("--unpulled", default="1.0",
                    help="index value for unpulled arms (number or inf)")
    tr.add_argument("--tol", type=float, default=1e-6)
    tr.add_argument("--horizon-check", type=int, default=50, dest="horizon_check")
    tr.add_argument("--node-cap", type=int, default=10_000_000, dest="node_cap")
    tr.add_argument("--out", help="also write tree.json here")
    tr.set_defaults(func=cmd_tree)

    ver = sub.add_parser("verify", help="re-hash outputs against manifest.json")
    ver.add_argument("--out", required=True, help="directory holding manifest.json")
    ver.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    except treemod.ResourceCapError as e:
        print("resource error: %s" % e, file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as e:
        print("invalid configuration: %s" % e, file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print("i/o error: %s" % e, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
