"""Command-line entry point.

Exit codes: 0 success, 1 a ``check`` failed, 2 usage or parameter error,
3 I/O or parse error.  The default seed can be overridden through the
``PU_LAB_SEED`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .bounds import BOUNDS, UnknownBoundError, verify_bound
from .concept_core import ConceptClass, claw_certificate, vc_dimension
from .hard_instances import FAMILIES, instance_to_json, load_instance
from .harness import ExperimentConfig, Learner, run_trial, sweep_sample_complexity, write_csv
from .learners import hypothesis_to_json
from .rng import DEFAULT_SEED

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
SEED_ENV = "PU_LAB_SEED"


class UsageError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _family_params(args) -> dict:
    keys = ("d", "rho", "o", "eps", "z", "m", "h", "r", "n", "j", "side", "k", "o1", "o2",
            "extra_mass")
    params = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    # Builders name these sets in upper case.
    for lower, upper in (("o", "O"), ("j", "J"), ("o1", "O1"), ("o2", "O2")):
        if lower in params:
            params[upper] = params.pop(lower)
    return params


def _add_family_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=sorted(FAMILIES))
    for name in ("d", "z", "m", "h", "n", "k"):
        p.add_argument(f"--{name}", type=int)
    for name in ("rho", "eps", "r", "extra-mass"):
        p.add_argument(f"--{name}", help="decimal or p/q")
    p.add_argument("--o", help="comma-separated set O")
    p.add_argument("--j", help="comma-separated set J")
    p.add_argument("--o1", help="comma-separated faces of the first die")
    p.add_argument("--o2", help="comma-separated faces of the second die")
    p.add_argument("--side", choices=["pos", "neg"])


def cmd_vcdim(args) -> int:
    cls = ConceptClass.from_json(_read_json(args.cls))
    print(vc_dimension(cls))
    return EXIT_OK


def cmd_claw(args) -> int:
    cls = ConceptClass.from_json(_read_json(args.cls))
    cert = claw_certificate(cls, cls.n if args.max_level is None else args.max_level)
    print(f"{cert.value} (certified to M={cert.max_level})")
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.family is None:
        raise UsageError("gen needs --family")
    try:
        inst = FAMILIES[args.family](_family_params(args))
    except KeyError as exc:
        raise UsageError(f"family {args.family} needs --{str(exc.args[0]).lower()}") from None
    _emit(_dump(instance_to_json(inst)), args.out)
    return EXIT_OK


def cmd_learn(args) -> int:
    inst = load_instance(_read_json(args.instance))
    learner = _learner(args)
    rec = run_trial(inst, learner, args.b, args.a, args.seed)
    trial = rec.to_json()
    trial.pop("elapsed")
    out = {"learner": str(learner), "trial": trial,
           "hypothesis": None if rec.hypothesis is None else hypothesis_to_json(rec.hypothesis)}
    _emit(_dump(out), args.out)
    return EXIT_OK


def _learner(args) -> Learner:
    if args.gamma is None:
        return Learner.parse(args.learner)
    g = Fraction(args.gamma) if "/" in args.gamma else float(args.gamma)
    return Learner(args.learner.partition(":")[0].strip(), g)


def cmd_experiment(args) -> int:
    eps_values = _floats(args.eps)
    if not eps_values:
        raise UsageError("--eps needs at least one value")
    params = _family_params(args)
    # Here --eps is the failure target, never a family parameter.
    params.pop("eps", None)
    config = ExperimentConfig(
        family=args.family or "",
        params=params,
        learner=str(_learner(args)),
        b_grid=tuple(_ints(args.b_grid)),
        a_grid=tuple(_ints(args.a_grid)) if args.a_grid else (),
        paired=args.paired,
        eps=max(eps_values),
        delta=args.delta,
        trials=args.trials,
        seed=args.seed,
        instance_path=args.instance,
    )
    if not config.instance_path and not config.family:
        raise UsageError("experiment needs --instance or --family")
    rows = sweep_sample_complexity(config, eps_values, jobs=args.jobs)
    _emit(write_csv(rows, config), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = {k: getattr(args, k) for k in ("eps", "delta", "trials", "b", "a", "k",
                                         "alpha", "base", "shift", "count", "triples")}
    for key in ("rho", "gamma"):
        v = getattr(args, key)
        cfg[key] = None if v is None else Fraction(v)
    cfg["seed"] = args.seed
    cfg["jobs"] = args.jobs
    if args.eta is not None:
        cfg["eta"] = Fraction(args.eta)
    report = verify_bound(args.bound, cfg)
    _emit(_dump(report.to_json()), args.out)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pulab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help=f"master seed (default ${SEED_ENV} or {DEFAULT_SEED})")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("vcdim", help="VC dimension of a class JSON")
    p.add_argument("--class", dest="cls", required=True)
    p.set_defaults(func=cmd_vcdim)

    p = sub.add_parser("claw", help="certified claw number of a class JSON")
    p.add_argument("--class", dest="cls", required=True)
    p.add_argument("--max-level", type=int, default=None)
    p.set_defaults(func=cmd_claw)

    p = sub.add_parser("gen", help="write a PU instance JSON")
    _add_family_args(p)
    common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("learn", help="run one trial on an instance JSON")
    p.add_argument("--instance", required=True)
    p.add_argument("--learner", default="perm")
    p.add_argument("--gamma", default=None)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("experiment", help="sample-size sweep to CSV")
    p.add_argument("--instance", default=None)
    _add_family_args(p)
    p.set_defaults(eps="0.1")
    p.add_argument("--learner", default="perm")
    p.add_argument("--gamma", default=None)
    p.add_argument("--b-grid", required=True)
    p.add_argument("--a-grid", default=None)
    p.add_argument("--paired", action="store_true", help="use a = b")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=100)
    common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("check", help="evaluate a registered bound")
    p.add_argument("--bound", required=True, choices=sorted(BOUNDS))
    for name in ("eta", "rho", "gamma"):
        p.add_argument(f"--{name}", default=None)
    for name in ("eps", "delta", "alpha", "shift"):
        p.add_argument(f"--{name}", type=float, default=None)
    for name in ("trials", "b", "a", "k", "count", "triples"):
        p.add_argument(f"--{name}", type=int, default=None)
    p.add_argument("--base", choices=["agno", "scar_pos"], default=None)
    common(p)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = default_seed()
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be at least 1")
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, UnknownBoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
