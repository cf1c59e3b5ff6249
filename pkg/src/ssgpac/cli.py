"""Command-line interface: simulate, fit, predict, plan, eval, bounds.

Exit codes: 0 on success, 2 on invalid input (the message names the
offending flag), 1 on I/O or solver failures. Files are written
atomically; JSON results go to ``--out`` when given, else to stdout.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .complexity import SAMPLE_BOUNDS, ComplexityQuery, samples_npl
from .evaluation import DEFAULT_DELTAS, evaluate, plot_csv
from .game import (DEFAULT_BIG_M, ValidationError, check_strategy, dataset_to_csv, load_game,
                   read_dataset_csv)
from .npl import DEFAULT_KHAT, npl_fit
from .optim import ConvergenceError
from .parametric import gsuqr_fit, ssuqr_fit
from .planner import plan_strategy
from .serialization import atomic_write_text, dumps, load_model, save_model
from .simulate import (PAPER_SUQR_WEIGHTS, SAMPLERS, TRUTH_KINDS, GroundTruth, random_game,
                       simulate_dataset)

MODEL_KINDS = ("gsuqr", "ssuqr", "npl")


class CliError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals or not all(np.isfinite(vals)):
        raise argparse.ArgumentTypeError(f"expected finite numbers, got {text!r}")
    return vals


def _require(cond: bool, flag: str, message: str):
    if not cond:
        raise CliError(flag, message)


def _with_flag(flag: str, fn, *args):
    try:
        return fn(*args)
    except ValidationError as exc:
        raise CliError(flag, str(exc)) from None


def _emit(text: str, out):
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _truth(args, game):
    weights = args.weights or list(PAPER_SUQR_WEIGHTS)
    _require(len(weights) == 3, "--weights", "expected three weights w1,w2,w3")
    return _with_flag("--game", GroundTruth.from_game, game, args.truth, weights)


def _fitter(kind: str, args, game):
    if kind == "gsuqr":
        return lambda d: gsuqr_fit(d, args.big_m)
    if kind == "ssuqr":
        _require(game is not None and game.has_features, "--game",
                 "standard SUQR needs a game with rewards and penalties")
        return lambda d: ssuqr_fit(d, game)
    if kind == "npl":
        return lambda d: npl_fit(d, args.khat, args.big_m, clamp=not args.no_clamp)
    raise CliError("--model", f"unknown model kind {kind!r}")


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args):
    if args.game:
        game = _with_flag("--game", load_game, args.game)
    else:
        _require(args.targets is not None and args.resources is not None, "--targets",
                 "give --game, or --targets and --resources for a random game")
        _require(1 <= args.resources < args.targets, "--resources", "need 1 <= K < T")
        game = random_game(args.targets, args.resources, args.seed)
    _require(args.strategies >= 1, "--strategies", "must be at least 1")
    _require(args.attacks_per_strategy >= 1, "--attacks-per-strategy", "must be at least 1")
    truth = _truth(args, game)
    ds = simulate_dataset(truth, game.num_targets, game.num_resources, args.strategies,
                          args.attacks_per_strategy, args.sampler, args.seed)
    atomic_write_text(args.out, dataset_to_csv(ds))
    if args.game_out:
        atomic_write_text(args.game_out, dumps(game.to_dict()))
    sys.stdout.write(dumps({"records": len(ds), "unique_strategies": ds.num_unique,
                            "out": args.out}))


def cmd_fit(args):
    game = _with_flag("--game", load_game, args.game) if args.game else None
    data = _with_flag("--data", read_dataset_csv, args.data)
    _require(len(data) > 0, "--data", "dataset has no records")
    if game is not None:
        _require(game.num_targets == data.num_targets, "--game",
                 "game and dataset disagree on the number of targets")
    model = _fitter(args.model, args, game)(data)
    save_model(model, args.out)


def cmd_predict(args):
    model = _with_flag("--model", load_model, args.model)
    game = _with_flag("--game", load_game, args.game) if args.game else None
    x = np.asarray(args.x, dtype=float)
    K = game.num_resources if game is not None else None
    _with_flag("--x", check_strategy, x, K)
    T = getattr(model, "num_targets", None) or (game.num_targets if game else x.size)
    _require(x.size == T, "--x", f"expected {T} coverage values, got {x.size}")
    if getattr(model, "needs_game", False):
        _require(game is not None, "--game", "standard SUQR needs the game")
        q = model.predict(x, game)
    else:
        q = model.predict(x)
    _emit(dumps({"q": q.tolist()}), args.out)


def cmd_plan(args):
    game = _with_flag("--game", load_game, args.game)
    model = _with_flag("--model", load_model, args.model)
    _require(args.starts >= 1, "--starts", "must be at least 1")
    T = getattr(model, "num_targets", game.num_targets)
    _require(T == game.num_targets, "--model", "model and game disagree on the number of targets")
    if getattr(model, "needs_game", False):
        _require(game.has_features, "--game", "standard SUQR needs rewards and penalties")
    x, u, _ = plan_strategy(game, model, args.starts, args.seed)
    _emit(dumps({"x": x.tolist(), "utility": u}), args.out)


def cmd_eval(args):
    game = _with_flag("--game", load_game, args.game) if args.game else None
    _require(args.splits >= 1, "--splits", "must be at least 1")
    _require(0 < args.train_fraction < 1, "--train-fraction", "must lie in (0, 1)")
    _require(all(0 <= d < 1 for d in args.deltas), "--deltas", "each delta must lie in [0, 1)")
    _require(0 < args.threshold < 1, "--threshold", "must lie in (0, 1)")
    _require(args.jobs >= 1, "--jobs", "must be at least 1")
    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    for k in kinds:
        _require(k in MODEL_KINDS, "--models", f"unknown model kind {k!r}")
    if args.data:
        data = _with_flag("--data", read_dataset_csv, args.data)
        _require(data.num_unique >= 2, "--data", "need at least two distinct strategies")
        reference = "empirical"
    else:
        _require(game is not None and args.truth is not None, "--data",
                 "give --data, or --game and --truth to simulate")
        truth = _truth(args, game)
        _require(args.strategies >= 2, "--strategies", "need at least two strategies")
        T, K = game.num_targets, game.num_resources

        def data(seed):
            return simulate_dataset(truth, T, K, args.strategies, args.attacks_per_strategy,
                                    args.sampler, seed)
        reference = truth
    fitters = {k: _fitter(k, args, game) for k in kinds}
    reports = evaluate(fitters, data, args.splits, args.deltas, args.train_fraction, args.seed,
                       reference, args.mode, game, args.threshold, args.jobs)
    _emit(dumps({"reports": [r.to_dict() for r in reports.values()]}), args.out)
    if args.csv:
        atomic_write_text(args.csv, plot_csv(reports.values()))


def cmd_bounds(args):
    checks = [(0 < args.alpha < 1, "--alpha", "must lie in (0, 1)"),
              (0 < args.delta < 1, "--delta", "must lie in (0, 1)"),
              (args.targets >= 2, "--targets", "must be at least 2"),
              (1 <= args.resources < args.targets, "--resources", "need 1 <= K < T"),
              (args.big_m > 0, "--big-m", "must be positive"),
              (args.khat > 0, "--khat", "must be positive"),
              (args.r_max > 0, "--r-max", "must be positive"),
              (args.p_min < 0, "--p-min", "must be negative")]
    for ok, flag, msg in checks:
        _require(ok, flag, msg)
    q = ComplexityQuery(args.alpha, args.delta, args.targets, args.big_m, args.resources,
                        args.khat, args.r_max, -args.p_min)
    if args.model == "npl":
        try:
            res = samples_npl(q, args.cover)
        except ValueError as exc:
            raise CliError("--cover", str(exc)) from None
    else:
        res = SAMPLE_BOUNDS[args.model](q)
    _emit(dumps(res.to_dict()), args.out)


# -- parser ------------------------------------------------------------------

def _add_truth_flags(p):
    p.add_argument("--truth", choices=TRUTH_KINDS, help="ground-truth adversary kind")
    p.add_argument("--weights", type=_float_list,
                   help="w1,w2,w3 of the ground truth (default -9.85,0.37,0.15)")
    p.add_argument("--strategies", type=int, default=50, help="strategies to sample")
    p.add_argument("--attacks-per-strategy", type=int, default=20)
    p.add_argument("--sampler", choices=SAMPLERS, default="uniform-rejection")


def _add_model_flags(p):
    p.add_argument("--khat", type=float, default=DEFAULT_KHAT, help="NPL Lipschitz bound")
    p.add_argument("--big-m", type=float, default=DEFAULT_BIG_M, help="exponent range M")
    p.add_argument("--no-clamp", action="store_true",
                   help="do not clamp NPL exponents to [-M/2, M/2]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssgpac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate attack data from a ground-truth adversary")
    p.add_argument("--game", help="game.json; omit to draw a random game")
    p.add_argument("--targets", type=int, help="T for a random game")
    p.add_argument("--resources", type=int, help="K for a random game")
    _add_truth_flags(p)
    p.set_defaults(truth="suqr-standard")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="dataset CSV to write")
    p.add_argument("--game-out", help="also write the game as JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a response model to attack data")
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--game", help="game.json (required for ssuqr)")
    _add_model_flags(p)
    p.add_argument("--out", required=True, help="model JSON to write")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="attack distribution at a coverage vector")
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--x", type=_float_list, required=True, help="comma-separated coverage")
    p.add_argument("--game", help="game.json (required for ssuqr)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("plan", help="best defender strategy against a model")
    p.add_argument("--game", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--starts", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("eval", help="train/test evaluation of response models")
    p.add_argument("--data", help="dataset CSV (empirical reference)")
    p.add_argument("--game", help="game.json (for ssuqr or simulation)")
    _add_truth_flags(p)
    p.add_argument("--models", default="gsuqr,npl", help="comma-separated model kinds")
    _add_model_flags(p)
    p.add_argument("--splits", type=int, default=100)
    p.add_argument("--deltas", type=_float_list, default=list(DEFAULT_DELTAS))
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--mode", choices=("fine", "coarse"), default="fine")
    p.add_argument("--threshold", type=float, default=1e-9, help="coarse-mode clip")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="report JSON")
    p.add_argument("--csv", help="plot-ready CSV (m,alpha,delta)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bounds", help="sample-complexity bound")
    p.add_argument("--model", choices=tuple(SAMPLE_BOUNDS), required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--targets", type=int, required=True)
    p.add_argument("--resources", type=int, default=1)
    p.add_argument("--big-m", type=float, default=DEFAULT_BIG_M)
    p.add_argument("--khat", type=float, default=DEFAULT_KHAT)
    p.add_argument("--r-max", type=float, default=10.0)
    p.add_argument("--p-min", type=float, default=-10.0)
    p.add_argument("--cover", choices=("exact", "bernstein"), default="exact")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except CliError as exc:
        print(f"ssgpac {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"ssgpac {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ssgpac {args.command}: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    except (ConvergenceError, RuntimeError) as exc:
        print(f"ssgpac {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
