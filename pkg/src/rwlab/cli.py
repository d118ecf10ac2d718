"""Command-line front end: ``rwlab simulate | verify | sweep | tails``.

Options can also come from a flat ``key = value`` config file given with
``--config``; keys are option names with dashes or underscores, and flags
given on the command line win. Exit codes: 0 success, 2 bad usage or
configuration, 3 verification failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

from . import __version__
from .ensemble import ConfigError, SweepConfig, phase_table, ROW_FIELDS, run_streams
from .manifest import RunManifest, write_csv, write_jsonl, write_manifest
from .martingale import MartingaleTracker
from .rng import Rng
from .stats import StatsError, TrajectoryStats, tail_curve
from .verify import run_suite
from .walk import WalkState
from .weights import WeightError, WeightFunction

log = logging.getLogger("rwlab")

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).replace(",", " ").split()]


def _bool(text) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _add_weight_args(p):
    p.add_argument("--alpha", type=float, default=0.3, help="reinforcement exponent")
    p.add_argument("--w0", type=float, default=1.0, help="weight of an unvisited site")
    p.add_argument("--scale", type=float, default=1.0, help="weight scale c")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rwlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("simulate", parents=[common], help="one walk with martingale tracking")
    _add_weight_args(p)
    p.add_argument("--table", type=_floats, help="explicit weights w(1), w(2), ... (table mode)")
    p.add_argument("--tail", choices=["error", "constant"], default="constant",
                   help="rule past the end of --table")
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--stream", type=int, default=0, help="stream id of the walk")
    p.add_argument("--verify", choices=["off", "float", "rational"], default="off")
    p.add_argument("--restart", action="store_true",
                   help="restart the stopped process after each return to 0")
    p.add_argument("--stride", type=int, default=1, help="write every stride-th step")
    p.add_argument("--burnin", type=int, default=10)

    p = sub.add_parser("verify", parents=[common], help="exact property suite")
    p.add_argument("--trajectories", type=int, default=40, help="walks per weight family")
    p.add_argument("--steps", type=int, default=60)
    p.add_argument("--fuzz-states", type=int, default=2000)
    p.add_argument("--alphas", type=_floats, default=[0.0, 0.3, 0.49])
    p.add_argument("--no-tables", action="store_true", help="skip table-mode weights")
    p.add_argument("--float", action="store_true", help="float arithmetic instead of rational")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("sweep", parents=[common], help="phase table over exponents")
    p.add_argument("--alphas", type=_floats, default=[0.0, 0.3, 1.0, 2.0])
    p.add_argument("--w0", type=float, default=1.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--horizon", type=int, default=100_000)
    p.add_argument("--n-traj", type=int, default=100)
    p.add_argument("--window", type=float, default=0.5, help="trailing window fraction")
    p.add_argument("--burnin", type=int, default=10)
    p.add_argument("--threads", type=int)
    p.add_argument("--checkpoint-dir", type=Path)

    p = sub.add_parser("tails", parents=[common], help="frontier local-time tail curve")
    _add_weight_args(p)
    p.add_argument("--n-traj", type=int, default=1000)
    p.add_argument("--k-max", type=int, default=50)
    p.add_argument("--depth", type=int, default=30,
                   help="run each walk until it reaches +-depth (or the step cap)")
    p.add_argument("--cap", type=int, default=10_000_000, help="step cap per walk")
    p.add_argument("--direction", choices=["both", "right", "left"], default="both")
    p.add_argument("--min-fraction", type=float, default=0.9)
    p.add_argument("--threads", type=int)
    return parser


def _load_config(path: Path, subparser: argparse.ArgumentParser) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string("[rwlab]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None
    actions = {a.dest: a for a in subparser._actions}
    out = {}
    for key, raw in cp["rwlab"].items():
        dest = key.strip().replace("-", "_")
        act = actions.get(dest)
        if act is None or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        try:
            if isinstance(act, argparse._StoreTrueAction):
                out[dest] = _bool(raw)
            elif act.type is not None:
                out[dest] = act.type(raw)
            else:
                out[dest] = raw
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key!r}: {exc}") from None
        if act.choices is not None and out[dest] not in act.choices:
            raise UsageError(f"bad value for {key!r}: {raw!r}")
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        sp = subparsers.choices[args.command]
        sp.set_defaults(**_load_config(args.config, sp))
        args = parser.parse_args(argv)
    return args


def _settings(args, skip=("config", "out_dir", "verbose", "threads", "checkpoint_dir",
                          "command", "func")) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _weights(args) -> WeightFunction:
    if getattr(args, "table", None):
        return WeightFunction.from_table(args.table, w0=args.w0, tail=args.tail)
    return WeightFunction.power(args.alpha, scale=args.scale, w0=args.w0)


def cmd_simulate(args) -> int:
    if args.steps < 0 or args.stride < 1 or args.burnin < 1:
        raise UsageError("steps must be >= 0, stride and burnin >= 1")
    weights = _weights(args)
    exact = args.verify == "rational"
    manifest = RunManifest("simulate", _settings(args), "exact" if exact else "float")
    state = WalkState(weights, exact=exact)
    tracker = MartingaleTracker(state, verify=args.verify != "off", restart=args.restart,
                                strict=False, scratch_every=0 if exact else 1)
    stats = TrajectoryStats(burnin=args.burnin, stream_id=args.stream)
    rng = Rng(args.seed, args.stream)
    records = [{"step": 0, "position": 0, "value": 0.0, "gap": None, "stopped": False,
                "mode": tracker.mode}]
    for _ in range(args.steps):
        rec = state.advance(rng)
        tracker.track_step(state, rec)
        stats.observe(state, rec)
        last_gap = tracker.last_gap
        if rec.step % args.stride == 0:
            records.append({"step": rec.step, "position": rec.position,
                            "value": float(tracker.value),
                            "gap": None if last_gap is None else float(last_gap),
                            "stopped": tracker.stopped and not args.restart,
                            "mode": tracker.mode})
    stats.window = state.range
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / "trajectory.jsonl", records, manifest)
    write_csv(out / "stats.csv", ["n", "T_n", "frontier_lt"], stats.hit_rows(), manifest)
    summary = {**stats.summary(), "checks": tracker.checks, "violations": tracker.violations,
               "float_noise": tracker.float_noise, "stop_time": tracker.stop_time,
               "returns": tracker.returns, "final_value": float(tracker.value),
               "mode": tracker.mode}
    write_jsonl(out / "summary.jsonl", [summary], manifest)
    write_manifest(out / "manifest.json", manifest)
    print(f"simulate: {args.steps} steps, range {state.range}, "
          f"{tracker.violations} violations / {tracker.checks} checks ({tracker.mode})")
    return EXIT_VERIFY if tracker.violations else EXIT_OK


def cmd_verify(args) -> int:
    if args.trajectories < 0 or args.steps < 0 or args.fuzz_states < 0:
        raise UsageError("counts must be >= 0")
    report = run_suite(seed=args.seed, trajectories=args.trajectories, steps=args.steps,
                       fuzz_states=args.fuzz_states, alphas=tuple(args.alphas),
                       exact=not args.float, fault=args.inject_fault,
                       include_tables=not args.no_tables)
    manifest = RunManifest("verify", _settings(args), "float" if args.float else "exact")
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = [(name, t.checks, t.violations, "" if t.max_gap is None else repr(float(t.max_gap)))
            for name, t in report.tallies.items()]
    write_csv(out / "verify.csv", ["check", "checks", "violations", "max_gap"], rows, manifest)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_VERIFY


def _sweep_config(args) -> SweepConfig:
    return SweepConfig(alpha_grid=tuple(args.alphas), w0=args.w0, scale=args.scale,
                       horizon=args.horizon, n_traj=args.n_traj, master_seed=args.seed,
                       localization_window=args.window, burnin=args.burnin)


def cmd_sweep(args) -> int:
    config = _sweep_config(args)
    manifest = RunManifest("sweep", config.to_dict())
    result = phase_table(config, threads=args.threads, checkpoint_dir=args.checkpoint_dir)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "phase.csv", ROW_FIELDS, ([r[f] for f in ROW_FIELDS] for r in result.rows),
              manifest)
    write_jsonl(out / "trajectories.jsonl", result.records(), manifest)
    write_manifest(out / "manifest.json", manifest)
    for r in result.rows:
        print(", ".join(f"{k}={r[k]}" for k in ROW_FIELDS))
    return EXIT_OK


def cmd_tails(args) -> int:
    if args.n_traj < 1:
        raise UsageError("n_traj must be at least 1")
    if args.k_max < 0 or args.depth < 1 or args.cap < 1:
        raise UsageError("k_max must be >= 0, depth and cap >= 1")
    weights = _weights(args)
    stop_lo = 0 if args.direction == "right" else -args.depth
    stop_hi = 0 if args.direction == "left" else args.depth
    stats = run_streams(weights, args.cap, args.seed, list(range(args.n_traj)),
                        threads=args.threads, stop_hi=stop_hi, stop_lo=stop_lo)
    curve = tail_curve(stats, args.k_max, direction=args.direction, n_max=args.depth,
                       min_fraction=args.min_fraction, min_trajectories=1)
    manifest = RunManifest("tails", _settings(args))
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "tails.csv", ["k", "exceedance", "half_width"], curve.rows(), manifest)
    per_n = [(int(n), int(k), float(curve.per_n[i, k]))
             for i, n in enumerate(curve.depths) for k in curve.k]
    write_csv(out / "tails_per_n.csv", ["n", "k", "exceedance"], per_n, manifest)
    write_manifest(out / "manifest.json", manifest)
    print(f"tails: {len(stats)} walks, depths {int(curve.depths.min())}..{int(curve.depths.max())}, "
          f"exceedance < 0.01 from k={curve.first_below(0.01)}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "sweep": cmd_sweep, "tails": cmd_tails}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"rwlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, WeightError, StatsError) as exc:
        print(f"rwlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"rwlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
