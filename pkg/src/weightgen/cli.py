"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 specification error, 4 numeric or
solver error, 5 resource budget exceeded. Module errors print one
machine-parseable line ``error[Code]: message`` on stderr.

The environment variable WEIGHTGEN_MAX_TABLE_BYTES (decimal integer) caps the
predicted size of exact-frequency tables.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from . import __version__
from .asymptotics import asymptotic_frequencies, build_transfer, solve_asymptotic_weights
from .counting import (
    Weights,
    build_count_table,
    load_count_table,
    save_count_table,
    table_fingerprint,
)
from .errors import WeightgenError
from .exact import (
    ExactSampleStats,
    build_exact_table,
    exact_sample_many,
    occurrence_vector,
    predicted_table_bytes,
)
from .fitting import FitOptions, TargetProfile, fit_weights, objective
from .frequencies import frequency_profile
from .grammar import parse_file, standardize
from .sampling import RandomSource, SampleStats, sample_many


def _fraction(text: str) -> Fraction:
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(text)


def _parse_assignments(pairs, value_parser=_fraction) -> dict:
    out = {}
    for pair in pairs or ():
        for item in pair.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise WeightgenError("expected atom=value, got %r" % item)
            atom, value = item.split("=", 1)
            out[atom.strip()] = value_parser(value.strip())
    return out


def _load(path):
    spec = parse_file(path)
    std, report = standardize(spec)
    return std, report


def _weights_for(args, spec) -> Weights:
    if getattr(args, "uniform", False):
        base = {}
    else:
        base = dict(spec.declared_weights)
    base.update(_parse_assignments(getattr(args, "weight", None)))
    return Weights(base)


def _targets_for(args, spec) -> dict[str, Fraction]:
    targets = dict(spec.declared_targets)
    override = _parse_assignments(getattr(args, "target", None))
    if override:
        targets.update(override)
    if not targets:
        raise WeightgenError("no targets: declare 'target atom = value ;' or pass --target")
    return targets


def _print_seed_line(out, seed, spec, weights):
    out.write("# seed=%d spec=%s table=%s\n" % (seed, spec.fingerprint()[:16],
                                                table_fingerprint(spec, weights)[:16]))


def _emit_samples(out, samples, spec, fmt):
    display = spec.display
    if fmt == "tree":
        for tree in samples:
            out.write(tree.render_tree(display) + "\n")
    else:
        for tree in samples:
            out.write(tree.render_word(display) + "\n")


def _get_table(spec, weights, n, cache_path):
    if cache_path and os.path.exists(cache_path):
        table = load_count_table(cache_path, spec, weights)
        if table.n_max >= n:
            return table
    table = build_count_table(spec, weights, n)
    if cache_path:
        save_count_table(table, cache_path)
    return table


def _cmd_validate(args):
    std, report = _load(args.spec)
    print("axiom: %s" % std.axiom)
    print("classes: %d (%d introduced)" % (len(std.classes), len(report.introduced_classes)))
    print("atoms: %s" % " ".join(std.atoms))
    if std.distinguished:
        print("distinguished: %s" % " ".join(std.distinguished))
    print(report.describe())
    return 0


def _cmd_count(args):
    std, _ = _load(args.spec)
    weights = _weights_for(args, std)
    cls = args.cls or std.axiom
    table = _get_table(std, weights, args.size, args.table_cache)
    value = table.count(cls, args.size)
    if value.denominator == 1:
        print(value.numerator)
    else:
        print("%s\t%.12g" % (value, float(value)))
    return 0


def _cmd_sample(args):
    std, _ = _load(args.spec)
    weights = _weights_for(args, std)
    seed = args.seed if args.seed is not None else int.from_bytes(os.urandom(8), "little")
    table = _get_table(std, weights, args.size, args.table_cache)
    rng = RandomSource(seed)
    _print_seed_line(sys.stdout, seed, std, weights)
    stats = SampleStats()
    samples = sample_many(table, std.axiom, args.size, args.count, rng, stats)
    _emit_samples(sys.stdout, samples, std, args.format)
    return 0


def _cmd_freqs(args):
    std, _ = _load(args.spec)
    weights = _weights_for(args, std)
    atoms = tuple(args.atoms.split(",")) if args.atoms else None
    profile = frequency_profile(std, weights, args.size, atoms=atoms, method=args.method)
    print("#atom\texact\tdecimal")
    for atom, value in profile.items():
        print("%s\t%s\t%.10g" % (std.display.get(atom, atom), value, float(value)))
    return 0


def _cmd_fit(args):
    std, _ = _load(args.spec)
    targets = TargetProfile(_targets_for(args, std), args.size)
    options = FitOptions(
        tolerance=args.tolerance,
        max_evaluations=args.max_evals,
        initial_weights=_weights_for(args, std),
        pinned=tuple(args.pin or ()),
        restart_seed=args.restart_seed,
    )
    result = fit_weights(std, targets, options)
    print("#atom\tweight")
    for atom in targets.entries:
        print("%s\t%.10g" % (atom, float(result.weights.weight(atom))))
    print("# objective %.6g evaluations %d converged %s"
          % (result.objective_value, result.evaluations, str(result.converged).lower()))
    return 0 if result.converged else 4


def _cmd_asympt(args):
    std, _ = _load(args.spec)
    weights = _weights_for(args, std)
    ts = build_transfer(std)
    report = asymptotic_frequencies(ts, weights)
    print(report.describe(std.display))
    return 0


def _cmd_solve(args):
    std, _ = _load(args.spec)
    targets = {a: float(v) for a, v in _targets_for(args, std).items()}
    ts = build_transfer(std)
    weights = solve_asymptotic_weights(ts, targets)
    report = asymptotic_frequencies(ts, weights)
    print("#atom\tweight")
    for atom in targets:
        print("%s\t%.10g" % (atom, float(weights.weight(atom))))
    print("# rho %.12g" % report.rho)
    return 0


def _cmd_exact_sample(args):
    std, _ = _load(args.spec)
    counts = _parse_assignments(args.occurrences, value_parser=int)
    vector = occurrence_vector(std, counts, args.size)
    budget = os.environ.get("WEIGHTGEN_MAX_TABLE_BYTES")
    budget = int(budget) if budget else None
    predicted = predicted_table_bytes(std, vector)
    print("# exact table predicted bytes: %d" % predicted)
    table = build_exact_table(std, vector.atoms, vector, max_bytes=budget)
    seed = args.seed if args.seed is not None else int.from_bytes(os.urandom(8), "little")
    _print_seed_line(sys.stdout, seed, std, Weights.uniform())
    print("# fiber size: %d" % table.fiber_count())
    rng = RandomSource(seed)
    stats = ExactSampleStats()
    samples = exact_sample_many(table, args.count, rng, stats)
    _emit_samples(sys.stdout, samples, std, args.format)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weightgen",
        description="Count, sample and tune weighted decomposable structures.",
    )
    parser.add_argument("--version", action="version", version="weightgen " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_spec(p):
        p.add_argument("spec", help="grammar file")

    def add_weights(p):
        p.add_argument("--weight", action="append", metavar="ATOM=VALUE",
                       help="override an atom weight (repeatable, comma-separable)")
        p.add_argument("--uniform", action="store_true",
                       help="ignore weights declared in the grammar file")

    p = sub.add_parser("validate", help="parse, standardize and report structure")
    add_spec(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("count", help="exact weighted count at a size")
    add_spec(p)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--class", dest="cls", help="class to count (default: axiom)")
    p.add_argument("--table-cache", help="binary count-table cache file")
    add_weights(p)
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("sample", help="draw random structures of a size")
    add_spec(p)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("-m", "--count", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("word", "tree"), default="word")
    p.add_argument("--table-cache", help="binary count-table cache file")
    add_weights(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("freqs", help="exact expected atom frequencies")
    add_spec(p)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--method", choices=("auto", "dp", "pointing"), default="auto")
    p.add_argument("--atoms", help="comma-separated atom subset (default: all)")
    add_weights(p)
    p.set_defaults(func=_cmd_freqs)

    p = sub.add_parser("fit", help="fit weights to targeted frequencies at a size")
    add_spec(p)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--target", action="append", metavar="ATOM=VALUE")
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--max-evals", type=int, default=5000)
    p.add_argument("--pin", action="append", metavar="ATOM",
                   help="pin this atom's weight to 1")
    p.add_argument("--restart-seed", type=int)
    add_weights(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("asympt", help="dominant root and asymptotic frequency slopes")
    add_spec(p)
    add_weights(p)
    p.set_defaults(func=_cmd_asympt)

    p = sub.add_parser("solve", help="weights achieving asymptotic target frequencies")
    add_spec(p)
    p.add_argument("--target", action="append", metavar="ATOM=VALUE")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("exact-sample", help="uniform sampling at exact atom counts")
    add_spec(p)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--occurrences", action="append", required=True,
                   metavar="ATOM=COUNT,...")
    p.add_argument("-m", "--count", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("word", "tree"), default="word")
    p.set_defaults(func=_cmd_exact_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WeightgenError as err:
        sys.stderr.write(err.oneline() + "\n")
        return err.exit_status
    except BrokenPipeError:
        return 0
    except OSError as err:
        sys.stderr.write("error[IO]: %s\n" % err)
        return 3


if __name__ == "__main__":
    sys.exit(main())
