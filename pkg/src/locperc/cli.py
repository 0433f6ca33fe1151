"""
Command-line front end.

Every subcommand can take its options from a TOML job file::

    command = "estimate"

    [law]
    law = "dng:0.5"
    d = 2

    [run]
    n = 64
    sem = "directed"
    samples = 1_000_000
    seed = 7

    [output]
    path = "gs://bucket/runs/dng-0.5.csv"

Options given on the command line override the file. Output paths are resolved by
``cloudly.upathlib``, so they may be local paths or cloud blob URIs.

Exit status is 0 if the checked condition holds (or the job succeeded), 1 if it is
violated, and 2 on errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import tomllib
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from cloudly.upathlib import resolve_path

from . import __version__
from ._util import MAX_WORKERS
from .domination import (
    check_local_domination,
    check_pairwise_domination,
    check_sandwich,
    check_stochastic_domination,
    exchangeable_reduce,
    up_set_mass,
)
from .exact_oracle import (
    DEFAULT_BUDGET,
    OneArmOracle,
    exact_aon_site_check,
    exact_dir_undir_check,
    verify_interpolation_monotonicity,
)
from .exploration import EdgeSemantics
from .local_laws import (
    DegreeDistribution,
    DomainError,
    LawFamily,
    LocalLaw,
    NeighborMask,
    as_fraction,
    direction_names,
    family,
    format_number,
    hitting_profile,
    make_exchangeable,
    mix_with_empty,
)
from .monte_carlo import (
    estimate_one_arm,
    fit_decay,
    pseudo_critical,
    scan_parameter,
    survival_proxy,
)
from .serializer import (
    EstimateCsvSerializer,
    LawCsvSerializer,
    LawJsonSerializer,
    OrjsonSerializer,
)
from .thresholds import threshold_report

logger = logging.getLogger(__name__)

HOLDS, VIOLATED, ERROR = 0, 1, 2


class ConfigError(ValueError):
    pass


# Law specifications


def _number(text: str, exact: bool):
    x = as_fraction(text)
    return x if exact else float(x)


def parse_law_spec(text: str, d: int, *, exact: bool = False) -> LocalLaw:
    """
    Build a law from a short specification:

    - ``<family>:<param>``, e.g. ``iid:0.5``, ``dng:3/8``, ``corner-stick:0.1``;
    - ``exchangeable:<a0>,<a1>,...,<a2d>``, a degree distribution;
    - ``mix:<p>,<law spec>``, the law mixed with the empty set;
    - ``file:<path>``, a JSON law file, or CSV if the path ends in ``.csv``.
    """
    name, sep, rest = text.strip().partition(":")
    if not sep:
        raise DomainError(f"law spec '{text}' has no parameter; expected e.g. 'iid:0.5'")
    if name == "file":
        return load_law(rest, d, exact=exact)
    if name == "exchangeable":
        alphas = [_number(a, exact) for a in rest.split(",")]
        dd = DegreeDistribution(d, np.array(alphas, dtype=object if exact else np.float64))
        return make_exchangeable(dd)
    if name == "mix":
        p, comma, inner = rest.partition(",")
        if not comma:
            raise DomainError(f"law spec '{text}' should look like 'mix:<p>,<law spec>'")
        return mix_with_empty(parse_law_spec(inner, d, exact=exact), _number(p, exact))
    return family(name, d)(_number(rest, exact), exact=exact)


def load_law(path: str, d: int, *, exact: bool = False) -> LocalLaw:
    file = resolve_path(path)
    if path.endswith(".csv"):
        # CSV files carry no name; the law is named after the file.
        law = LawCsvSerializer.load(file, dim=d, exact=exact)
        return law.with_name(path.rsplit("/", 1)[-1].removesuffix(".csv"))
    law = LawJsonSerializer.load(file)
    if law.dim != d:
        raise DomainError(f"law in '{path}' has dimension {law.dim} but d = {d}")
    if exact and not law.is_exact:
        law = LocalLaw(d, np.array([as_fraction(v) for v in law.probs], dtype=object), name=law.name)
    return law


def _samples(text: str) -> int:
    # Accepts '1e6'.
    x = float(text)
    if x != int(x) or x < 1:
        raise argparse.ArgumentTypeError(f"sample count must be a positive integer; got {text}")
    return int(x)


def _grid(text: str) -> list[float]:
    # '0.1,0.2,0.3' or '<start>:<stop>:<num>'
    if text.count(":") == 2:
        start, stop, num = text.split(":")
        return [float(x) for x in np.linspace(float(start), float(stop), int(num))]
    return [float(x) for x in text.split(",")]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


# Job config


@dataclass
class JobConfig:
    """Parsed ``--config`` file: the command and option values keyed by option name."""

    command: str | None
    values: dict = field(default_factory=dict)
    origins: dict = field(default_factory=dict)  #: option name -> '[table] key'


_TABLES = ("law", "run", "output")
# Keys of the [output] table that are named differently on the command line.
_OUTPUT_KEYS = {"path": "output", "format": "format", "log-level": "log_level", "log_level": "log_level"}


def load_job_config(path: str) -> JobConfig:
    file = resolve_path(path)
    try:
        text = file.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file '{path}' does not exist") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        # The message carries the line and column.
        raise ConfigError(f"{path}: {e}") from None

    job = JobConfig(command=None)
    for key, value in doc.items():
        if key == "command":
            if not isinstance(value, str):
                raise ConfigError(f"{path}: 'command' must be a string; got {value!r}")
            job.command = value
        elif key in _TABLES:
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: '{key}' must be a table")
            for k, v in value.items():
                dest = _OUTPUT_KEYS.get(k) if key == "output" else k.replace("-", "_")
                if dest is None:
                    raise ConfigError(f"{path}: unknown key '{k}' in table [{key}]")
                job.values[dest] = v
                job.origins[dest] = f"[{key}] {k}"
        else:
            raise ConfigError(
                f"{path}: unknown top-level key '{key}'; expected 'command' or tables {list(_TABLES)}"
            )
    return job


def _apply_config(sub: argparse.ArgumentParser, job: JobConfig, path: str) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for dest, value in job.values.items():
        where = f"{path}: {job.origins[dest]}"
        action = actions.get(dest)
        if action is None or dest in ("help", "config"):
            raise ConfigError(f"{where}: not an option of command '{job.command}'")
        if action.nargs == 0:
            # store_true flags
            if not isinstance(value, bool):
                raise ConfigError(f"{where}: expected true or false; got {value!r}")
        else:
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            if action.type is not None:
                try:
                    value = action.type(str(value))
                except (ValueError, TypeError, argparse.ArgumentTypeError) as e:
                    raise ConfigError(f"{where}: bad value {value!r}: {e}") from None
            if action.choices is not None and value not in action.choices:
                raise ConfigError(
                    f"{where}: {value!r} is not one of {list(action.choices)}"
                )
        defaults[dest] = value
    sub.set_defaults(**defaults)


def _need(args, *names: str) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise ConfigError(
                f"'{args.command}' needs --{name.replace('_', '-')} (on the command line or in the config file)"
            )


# Output


def _write(args, data: bytes) -> None:
    if args.output:
        resolve_path(args.output).write_bytes(data, overwrite=True)
        logger.info("wrote '%s'", args.output)
    else:
        sys.stdout.write(data.decode("utf-8"))
        sys.stdout.flush()


def _report(args, obj: dict, lines: Sequence[str]) -> None:
    as_json = args.format == "json" or (
        args.format is None and args.output is not None and args.output.endswith(".json")
    )
    if as_json:
        _write(args, OrjsonSerializer.serialize(obj | {"version": __version__}))
    else:
        _write(args, ("\n".join(lines) + "\n").encode("utf-8"))


def _law(args, name: str = "law") -> LocalLaw:
    return parse_law_spec(getattr(args, name), args.d, exact=args.exact)


def _sem(args) -> EdgeSemantics:
    return EdgeSemantics.parse(args.sem)


def _family(args) -> LawFamily:
    return family(args.family, args.d)


def _fmt_masks(masks, d: int) -> str:
    return ", ".join(str(NeighborMask(int(m), d)) for m in masks) or "-"


# Commands


def cmd_hitting_profile(args) -> int:
    _need(args, "law", "d")
    law = _law(args)
    prof = hitting_profile(law)
    f = law.full
    rows = [
        {
            "mask": m,
            "directions": NeighborMask(m, law.dim).names(),
            "prob": law.probs[m],
            "zeta": prof.zeta[m],
            "hit": prof.hit[m],
        }
        for m in range(f + 1)
    ]
    obj = {
        "law": law.name,
        "dim": law.dim,
        "ordering": ",".join(direction_names(law.dim)),
        "exact": law.is_exact,
        "profile": rows,
    }
    lines = [f"hitting profile of {law.name} (d = {law.dim})", "mask  A                 P[N = A]      P[N ∩ A ≠ ∅]"]
    for r in rows:
        lines.append(
            f"{r['mask']:<5} {str(NeighborMask(r['mask'], law.dim)):<17} {format_number(r['prob']):<13} {format_number(r['hit'])}"
        )
    _report(args, obj, lines)
    if args.emit_law:
        file = resolve_path(args.emit_law)
        if args.emit_law.endswith(".csv"):
            LawCsvSerializer.dump(law, file, overwrite=True)
        else:
            LawJsonSerializer.dump(law, file, overwrite=True)
        logger.info("wrote law to '%s'", args.emit_law)
    return HOLDS


def cmd_check_domination(args) -> int:
    _need(args, "p", "q", "d")
    P, Q = _law(args, "p"), _law(args, "q")
    rep = check_local_domination(P, Q, args.mode, args.tol)
    lines = [
        f"{P.name} vs {Q.name}: local condition ({rep.mode}) {'holds' if rep.holds else 'is violated'}"
        + (" strictly" if rep.strict else ""),
        f"violations: {len(rep.violations)}",
    ]
    for v in rep.violations:
        lines.append(
            f"  A = {NeighborMask(v.mask, rep.dim)}: {format_number(v.lhs)} > {format_number(v.rhs)}"
        )
    lines.append(f"equalities ({len(rep.equalities)}): {_fmt_masks(rep.equalities, rep.dim)}")
    _report(args, {"P": P.name, "Q": Q.name} | rep.to_dict(), lines)
    return HOLDS if rep.holds else VIOLATED


def cmd_check_pairwise(args) -> int:
    _need(args, "p", "q", "d")
    P, Q = _law(args, "p"), _law(args, "q")
    rep = check_pairwise_domination(P, Q, args.tol)
    lines = [
        f"{P.name} vs {Q.name}: pairwise condition {'holds' if rep.holds else 'is violated'}",
        f"pairs checked: {rep.pairs_checked}, equalities: {rep.equalities}, violations: {len(rep.violations)}",
    ]
    for v in rep.violations[:20]:
        lines.append(
            f"  A = {NeighborMask(v.a, rep.dim)}, B = {NeighborMask(v.b, rep.dim)}: {format_number(v.lhs)} > {format_number(v.rhs)}"
        )
    _report(args, {"P": P.name, "Q": Q.name} | rep.to_dict(), lines)
    return HOLDS if rep.holds else VIOLATED


def cmd_check_stochastic(args) -> int:
    _need(args, "p", "q", "d")
    P, Q = _law(args, "p"), _law(args, "q")
    holds, witness = check_stochastic_domination(P, Q, args.tol)
    obj = {"P": P.name, "Q": Q.name, "holds": holds, "witness": None}
    lines = [f"{P.name} is {'' if holds else 'not '}stochastically dominated by {Q.name}"]
    if witness is not None:
        mp, mq = up_set_mass(P, witness), up_set_mass(Q, witness)
        obj["witness"] = {
            "masks": witness,
            "P_mass": float(mp),
            "Q_mass": float(mq),
        }
        lines.append(f"up-set witness ({len(witness)} masks): {_fmt_masks(witness, P.dim)}")
        lines.append(f"P[U] = {format_number(mp)} > Q[U] = {format_number(mq)}")
    _report(args, obj, lines)
    return HOLDS if holds else VIOLATED


def cmd_reduce_exchangeable(args) -> int:
    _need(args, "d", "alphas")
    alphas = [_number(a, args.exact) for a in args.alphas.split(",")]
    dd = DegreeDistribution(args.d, np.array(alphas, dtype=object if args.exact else np.float64))
    chain = exchangeable_reduce(dd, args.tol)
    sandwich = check_sandwich(dd, args.tol)
    lines = [f"mean degree {format_number(dd.mean)}, p = {format_number(sandwich.p)}"]
    for i, x in enumerate(chain):
        lines.append(f"step {i}: " + ",".join(format_number(a) for a in x.alphas))
    lines.append(
        f"all-or-nothing <= exchangeable <= degree-constrained: {'holds' if sandwich.holds else 'is violated'}"
    )
    obj = {
        "chain": [[format_number(a) for a in x.alphas] for x in chain],
        "p": format_number(sandwich.p),
        "sandwich_holds": sandwich.holds,
    }
    _report(args, obj, lines)
    return HOLDS if sandwich.holds else VIOLATED


def _write_estimates(args, estimates) -> None:
    _write(args, EstimateCsvSerializer.serialize(estimates))


def cmd_estimate(args) -> int:
    _need(args, "d", "n", "samples")
    sem = _sem(args)
    if sem.needs_law:
        _need(args, "law")
    law = _law(args) if sem.needs_law else None
    if args.theta_proxy:
        est = survival_proxy(law, args.d, sem, args.samples, args.seed, workers=args.workers)
    else:
        est = estimate_one_arm(
            law, args.d, args.n, sem, args.samples, args.seed, workers=args.workers
        )
    _write_estimates(args, [est])
    return HOLDS


def cmd_scan(args) -> int:
    _need(args, "family", "grid", "d", "n", "samples")
    estimates = scan_parameter(
        _family(args),
        args.grid,
        args.d,
        args.n,
        _sem(args),
        args.samples,
        args.seed,
        workers=args.workers,
        common_random_numbers=not args.independent,
        quiet=args.quiet,
    )
    _write_estimates(args, estimates)
    return HOLDS


def cmd_fit_decay(args) -> int:
    _need(args, "law", "d", "radii", "samples")
    law = _law(args)
    sem = _sem(args)
    fit = fit_decay(law, args.d, args.radii, sem, args.samples, args.seed, workers=args.workers)
    obj = {
        "model": law.name,
        "d": args.d,
        "semantics": str(sem),
        "samples": args.samples,
        "seed": args.seed,
        "version": __version__,
    } | fit.to_dict()
    lines = [
        f"{law.name}, d = {args.d}, {sem}: c_hat = {fit.c_hat:.6g} (R^2 = {fit.r_squared:.4f})",
        f"radii used: {fit.radii}" + (f", dropped: {fit.dropped}" if fit.dropped else ""),
    ]
    _report(args, obj, lines)
    return HOLDS


def cmd_pseudo_critical(args) -> int:
    _need(args, "family", "d", "n", "samples", "threshold", "tol")
    sem = _sem(args)
    x = pseudo_critical(
        _family(args),
        args.d,
        args.n,
        sem,
        args.threshold,
        args.samples,
        args.seed,
        args.tol,
        lo=args.lo,
        hi=args.hi,
        common_random_numbers=args.crn,
        workers=args.workers,
        quiet=args.quiet,
    )
    obj = {
        "kind": "finite-size pseudo-critical point",
        "family": args.family,
        "d": args.d,
        "n": args.n,
        "semantics": str(sem),
        "threshold": args.threshold,
        "value": x,
        "tol": args.tol,
        "samples": args.samples,
        "seed": args.seed,
        "version": __version__,
    }
    lines = [
        f"finite-size pseudo-critical point of {args.family} (d = {args.d}, n = {args.n}, {sem}, "
        f"threshold {args.threshold}): {x:.6g} ± {args.tol / 2:.2g}"
    ]
    _report(args, obj, lines)
    return HOLDS


def cmd_verify_interpolation(args) -> int:
    _need(args, "p", "q", "d", "n")
    P, Q = _law(args, "p"), _law(args, "q")
    res = verify_interpolation_monotonicity(
        P,
        Q,
        args.d,
        args.n,
        _sem(args),
        budget=args.budget,
        chains=args.chains,
        seed=args.seed,
    )
    lines = [
        f"interpolation from {P.name} to {Q.name} (d = {args.d}, n = {args.n}): "
        f"{'monotone' if res.holds else 'NOT monotone'} over {res.pairs_checked} pairs"
        + ("" if res.exhaustive else " (random chains)")
    ]
    if res.counterexample is not None:
        U, a, lhs, rhs = res.counterexample
        lines.append(f"U = {sorted(U)}, a = {a}: {format_number(lhs)} > {format_number(rhs)}")
    obj = {"P": P.name, "Q": Q.name, "d": args.d, "n": args.n, "seed": args.seed} | res.to_dict()
    _report(args, obj, lines)
    return HOLDS if res.holds else VIOLATED


def cmd_exact(args) -> int:
    _need(args, "d", "n")
    sem = _sem(args)
    if sem.needs_law:
        _need(args, "law")
    law = _law(args) if sem.needs_law else None
    oracle = OneArmOracle(
        args.d, args.n, sem, [law] if law is not None else [], budget=args.budget, workers=args.workers
    )
    value = oracle.value(law)
    obj = {
        "model": law.name if law is not None else str(sem),
        "d": args.d,
        "n": args.n,
        "semantics": str(sem),
        "exact_value": value,
        "configurations_enumerated": oracle.configurations,
        "version": __version__,
    }
    if isinstance(value, Fraction):
        obj["exact_value_float"] = float(value)
    _report(args, obj, [format_number(value)])
    return HOLDS


def cmd_check_identity(args) -> int:
    _need(args, "identity", "p", "d", "n")
    p = _number(args.p, args.exact)
    if args.identity == "dir-undir":
        left, right = exact_dir_undir_check(p, args.d, args.n, budget=args.budget)
        names = ("directed iid", "undirected bond")
    else:
        left, right = exact_aon_site_check(p, args.d, args.n, budget=args.budget)
        names = ("all-or-nothing at n+1", "site")
    equal = left == right if isinstance(left, Fraction) else abs(left - right) <= 1e-12
    obj = {
        "identity": args.identity,
        "p": format_number(p),
        "d": args.d,
        "n": args.n,
        "left": left,
        "right": right,
        "equal": equal,
    }
    lines = [
        f"{names[0]}: {format_number(left)}",
        f"{names[1]}: {format_number(right)}",
        "equal" if equal else "NOT equal",
    ]
    _report(args, obj, lines)
    return HOLDS if equal else VIOLATED


def cmd_report_thresholds(args) -> int:
    _need(args, "d")
    rep = threshold_report(args.d, args.pc_upper)
    _report(args, rep.to_dict(), rep.lines())
    return HOLDS


COMMANDS = {
    "hitting-profile": cmd_hitting_profile,
    "check-domination": cmd_check_domination,
    "check-pairwise": cmd_check_pairwise,
    "check-stochastic": cmd_check_stochastic,
    "reduce-exchangeable": cmd_reduce_exchangeable,
    "estimate": cmd_estimate,
    "scan": cmd_scan,
    "fit-decay": cmd_fit_decay,
    "pseudo-critical": cmd_pseudo_critical,
    "verify-interpolation": cmd_verify_interpolation,
    "exact": cmd_exact,
    "check-identity": cmd_check_identity,
    "report-thresholds": cmd_report_thresholds,
}


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML job file")
    common.add_argument("--output", help="output path or URI; stdout if omitted")
    common.add_argument("--format", choices=["text", "json"], help="report format")
    common.add_argument(
        "--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"]
    )
    common.add_argument("--d", type=int, help="dimension")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1, help=f"threads (up to {MAX_WORKERS} useful)")
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="oracle configuration budget")
    common.add_argument("--exact", action="store_true", help="exact rational arithmetic")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--quiet", action="store_true", help="no progress bars")

    parser = argparse.ArgumentParser(
        prog="locperc", description="Local comparison of percolation models on Z^d."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    cmds = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, help):
        subs[name] = cmds.add_parser(
            name, parents=[common], help=help, allow_abbrev=False
        )
        return subs[name]

    def law(sp, *names):
        for name in names:
            sp.add_argument(f"--{name}", help="law spec, e.g. iid:0.5, dng:3/8, file:law.json")

    def radius(sp):
        sp.add_argument("--n", type=int, help="radius")

    def semantics(sp):
        sp.add_argument("--sem", default="directed", help="directed, union, intersection or site:<p>")

    def samples(sp):
        sp.add_argument("--samples", type=_samples)

    sp = add("hitting-profile", "print P[N(o) ∩ A ≠ ∅] for every mask A")
    law(sp, "law")
    sp.add_argument("--emit-law", help="also write the law to this JSON or CSV path")

    sp = add("check-domination", "check the local comparison condition")
    law(sp, "p", "q")
    sp.add_argument("--mode", choices=["weak", "strict"], default="weak")

    sp = add("check-pairwise", "check the pairwise comparison condition")
    law(sp, "p", "q")

    sp = add("check-stochastic", "check stochastic domination of the neighbor sets")
    law(sp, "p", "q")

    sp = add("reduce-exchangeable", "reduce an exchangeable law to the degree-constrained one")
    sp.add_argument("--alphas", help="degree distribution a0,a1,...,a2d")

    sp = add("estimate", "Monte Carlo one-arm estimate")
    law(sp, "law")
    radius(sp)
    semantics(sp)
    samples(sp)
    sp.add_argument(
        "--theta-proxy", action="store_true", help="use the largest radius allowed by the ball size cap"
    )

    sp = add("scan", "one-arm estimates over a parameter grid")
    sp.add_argument("--family", help="law family, e.g. iid, dng, corner-stick")
    sp.add_argument("--grid", type=_grid, help="'0.1,0.2,0.3' or 'start:stop:num'")
    radius(sp)
    semantics(sp)
    samples(sp)
    sp.add_argument("--independent", action="store_true", help="independent seeds per grid point")

    sp = add("fit-decay", "fit exponential decay of the one-arm probability")
    law(sp, "law")
    sp.add_argument("--radii", type=_ints, help="e.g. 2,4,6,8")
    semantics(sp)
    samples(sp)

    sp = add("pseudo-critical", "bisect for a finite-size pseudo-critical point")
    sp.add_argument("--family", help="law family, e.g. iid, dng")
    radius(sp)
    semantics(sp)
    samples(sp)
    sp.add_argument("--threshold", type=float, default=0.5)
    sp.add_argument("--lo", type=float, default=0.0)
    sp.add_argument("--hi", type=float, default=1.0)
    sp.add_argument("--crn", action="store_true", help="common random numbers for all evaluations")

    sp = add("verify-interpolation", "exhaustively check interpolation monotonicity")
    law(sp, "p", "q")
    radius(sp)
    semantics(sp)
    sp.add_argument("--chains", type=int, default=64)

    sp = add("exact", "exact one-arm probability by enumeration")
    law(sp, "law")
    radius(sp)
    semantics(sp)

    sp = add("check-identity", "exact check of a one-arm identity")
    sp.add_argument("--identity", choices=["dir-undir", "aon-site"])
    sp.add_argument("--p", help="edge or site probability")
    radius(sp)

    sp = add("report-thresholds", "percolation thresholds from an upper bound on p_c(d)")
    sp.add_argument("--pc-upper", type=float)

    return parser, subs


_DEFAULT_TOL = {"check-domination": 1e-9, "check-pairwise": 1e-9, "check-stochastic": 1e-9, "reduce-exchangeable": 1e-9}


def _hoist_common_options(argv: list[str], subs) -> list[str]:
    # Options shared by all commands may come before the command name.
    i = next((k for k, a in enumerate(argv) if a in subs), None)
    if not i or any(a in ("-h", "--help", "--version") for a in argv[:i]):
        return argv
    return [argv[i], *argv[:i], *argv[i + 1 :]]


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)

    parser, subs = build_parser()
    if known.config:
        job = load_job_config(known.config)
        given = next((a for a in argv if a in subs), None)
        if job.command is not None:
            if job.command not in subs:
                raise ConfigError(f"{known.config}: unknown command '{job.command}'")
            if given is None:
                argv = [job.command, *argv]
            elif given != job.command:
                raise ConfigError(
                    f"command '{given}' conflicts with command '{job.command}' in {known.config}"
                )
        job.command = job.command or given
        if job.command is None:
            raise ConfigError(f"{known.config}: no command given")
        _apply_config(subs[job.command], job, known.config)

    args = parser.parse_args(_hoist_common_options(argv, subs))
    if args.tol is None:
        args.tol = _DEFAULT_TOL.get(args.command)
    return args


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return ERROR
    except SystemExit as e:
        # argparse usage errors and --help
        return ERROR if e.code else 0

    logging.basicConfig(
        level=args.log_level,
        format="[%(levelname)s; %(asctime)s; %(name)s] %(message)s",
    )
    logger.info("running '%s'", args.command)
    try:
        status = COMMANDS[args.command](args)
    except (ValueError, NotImplementedError, MemoryError, OSError) as e:
        # DomainError, ConfigError, ResourceGuardError and their relatives
        print(f"error: {e}", file=sys.stderr)
        return ERROR
    except Exception as e:
        logger.exception("'%s' failed", args.command)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return ERROR
    logger.info("'%s' finished with status %d", args.command, status)
    return status
