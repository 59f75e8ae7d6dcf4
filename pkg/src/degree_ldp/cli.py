"""Command-line interface: ``degree-ldp <command> [flags]``.

Scalar and record results go to stdout as JSON, curves and grids as CSV.
Any flag may also come from a ``--config`` file of ``key=value`` lines
(``#`` starts a comment); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import graphs, measures, penalty, sampler, tilted, verification
from .errors import DegenerateStatistic, DomainError, NoConfinement, NTooSmall, TooLarge

COMPUTE_ERRORS = (DegenerateStatistic, NoConfinement, TooLarge, NTooSmall)


class UsageError(Exception):
    pass


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _nonneg(text: str) -> float:
    v = float(text)
    if v < 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


def _count(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _count0(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_statistic(p: argparse.ArgumentParser, default: str = "zero") -> None:
    g = p.add_argument_group("degree statistic")
    g.add_argument("--statistic", default=default, choices=sorted(tilted._KINDS), help="statistic kind (default %(default)s)")
    g.add_argument("--gamma", type=float, help="weight for kstar, gwd, alt_kstar, penalty")
    g.add_argument("--e-gamma", type=_positive, help="penalty weight given as e^gamma")
    g.add_argument("--k", type=int, default=2, help="k-star order (default 2)")
    g.add_argument("--lambda1", type=_positive, default=1.0, help="gwd decay (default 1)")
    g.add_argument("--lambda2", type=float, default=0.5, help="alternating k-star ratio in (0,1) (default 0.5)")
    g.add_argument("--c", type=float, default=0.0, help="slope for the linear statistic")
    g.add_argument("--table", type=_floats, help="custom statistic values f(0),f(1),... (f(0)=0)")


def _add_output(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--format", choices=("json", "csv"), default=default, help="output format (default %(default)s)")
    p.add_argument("--output", "-o", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="degree-ldp", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value file supplying default flag values")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("rate", help="rate function of a degree distribution")
    p.add_argument("--beta", type=_positive, help="edge parameter")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--weights", type=_floats, help="comma-separated weights for degrees 0,1,...")
    src.add_argument("--measure", help="CSV file with header i,weight")
    src.add_argument("--poisson", type=_positive, help="evaluate at the Poisson law with this mean")
    p.add_argument("--normalize", action="store_true", help="rescale weights to sum to one")
    _add_output(p, "json")

    p = sub.add_parser("solve-j", help="minimize the one-dimensional variational objective")
    p.add_argument("--beta", type=_positive)
    _add_statistic(p)
    p.add_argument("--grid-points", type=_count, default=4096)
    p.add_argument("--tie-tol", type=_nonneg, help="objective gap within which minimizers count as tied")
    _add_output(p, "json")

    p = sub.add_parser("penalty-curve", help="objective H(theta) of the penalty model on a grid")
    p.add_argument("--beta", type=_positive)
    p.add_argument("--e-gamma", type=_positive)
    p.add_argument("--gamma", type=float, help="alternative to --e-gamma")
    p.add_argument("--theta-max", type=_positive)
    p.add_argument("--theta-min", type=_nonneg, default=0.0)
    p.add_argument("--points", type=_count, default=2048)
    _add_output(p, "csv")

    p = sub.add_parser("penalty-phase", help="regime of the penalty model over a (beta, e^gamma) grid")
    p.add_argument("--beta-min", type=_positive, default=0.5)
    p.add_argument("--beta-max", type=_positive, default=8.0)
    p.add_argument("--e-gamma-min", type=_positive, default=0.01)
    p.add_argument("--e-gamma-max", type=_positive, default=1.0)
    p.add_argument("--resolution", type=_count, default=50, help="points per axis")
    p.add_argument("--tie-tol", type=_nonneg, default=1e-6)
    _add_output(p, "csv")

    p = sub.add_parser("graphical", help="Erdos-Gallai test or construction from a target law")
    p.add_argument("--sequence", type=_ints, help="degree sequence in any order")
    p.add_argument("--target", type=_floats, help="target degree law y_0,...,y_M")
    p.add_argument("--n", type=_count, help="vertex count for --target")
    _add_output(p, "json")

    p = sub.add_parser("enumerate", help="exact degree-frequency table of G(n, beta/n)")
    p.add_argument("--n", type=_count)
    p.add_argument("--beta", type=_positive)
    p.add_argument("--allow-large", action="store_true", help="permit n = 8 (slow)")
    _add_output(p, "csv")

    p = sub.add_parser("partition", help="log partition function, exact and/or importance sampled")
    p.add_argument("--n", type=_count)
    p.add_argument("--beta", type=_positive)
    _add_statistic(p)
    p.add_argument("--samples", type=_count0, default=0, help="importance samples (0 = exact only)")
    p.add_argument("--seed", type=int)
    p.add_argument("--allow-large", action="store_true")
    _add_output(p, "json")

    p = sub.add_parser("simulate", help="edge-flip Metropolis chain for the degree-tilted model")
    p.add_argument("--n", type=_count)
    p.add_argument("--beta", type=_positive)
    _add_statistic(p)
    p.add_argument("--sweeps", type=_count, default=1000, help="sweeps after burn-in (default %(default)s)")
    p.add_argument("--burn-in", type=_count0, default=1000, help="burn-in sweeps (default %(default)s)")
    p.add_argument("--thin", type=_count, default=10, help="sweeps between retained samples (default %(default)s)")
    p.add_argument("--seed", type=int)
    p.add_argument("--chains", type=_count, default=1)
    p.add_argument("--trace", help="CSV file for the per-sample trace of the first chain")
    _add_output(p, "json")

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--quick", action="store_true", help="smaller Monte Carlo budgets")
    p.add_argument("--only", type=_ints, help="comma-separated criterion numbers")
    return parser


REQUIRED = {
    "rate": ("beta",),
    "solve-j": ("beta",),
    "penalty-curve": ("beta", "theta_max"),
    "enumerate": ("n", "beta"),
    "partition": ("n", "beta"),
    "simulate": ("n", "beta"),
}


def read_config(path: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise KeyError(name)


def parse(argv) -> tuple[argparse.ArgumentParser, argparse.Namespace]:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a command is required")
    sp = _subparser(parser, args.command)
    if args.config:
        try:
            conf = read_config(args.config)
        except (OSError, UsageError) as exc:
            parser.error(str(exc))
        known = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, value in conf.items():
            if key not in known:
                sp.error(f"unknown key {key!r} in config file")
            action = known[key]
            if action.nargs == 0:  # store_true flags
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = value
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    missing = [k for k in REQUIRED.get(args.command, ()) if getattr(args, k) is None]
    if missing:
        sp.error("missing required " + ", ".join("--" + k.replace("_", "-") for k in missing))
    return parser, args


def statistic_from(args) -> tilted.DegreeStatistic:
    kind = args.statistic
    gamma = args.gamma
    if kind == "penalty" and args.e_gamma is not None:
        if gamma is not None:
            raise UsageError("give --gamma or --e-gamma, not both")
        gamma = math.log(args.e_gamma)
    if kind in ("kstar", "gwd", "alt_kstar", "penalty") and gamma is None:
        raise UsageError(f"--gamma is required for statistic {kind}")
    if kind == "zero":
        return tilted.zero()
    if kind == "linear":
        return tilted.linear(args.c)
    if kind == "kstar":
        return tilted.kstar(args.k, gamma)
    if kind == "gwd":
        return tilted.gwd(args.lambda1, gamma)
    if kind == "alt_kstar":
        return tilted.alt_kstar(args.lambda2, gamma)
    if kind == "penalty":
        return tilted.penalty(gamma)
    if args.table is None:
        raise UsageError("--table is required for statistic custom")
    return tilted.custom(args.table)


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def cmd_rate(args) -> str:
    if args.poisson is not None:
        mu = measures.poisson_measure(args.poisson, 1e-14)
    elif args.measure:
        mu = measures.read_measure(args.measure)
    elif args.weights:
        mu = measures.SparseMeasure.from_weights(args.weights, normalize=args.normalize)
    else:
        raise UsageError("one of --weights, --measure or --poisson is required")
    rec = {
        "beta": args.beta,
        "mean": mu.mean,
        "rate": measures.rate_I(mu, args.beta),
        "rate_divergence_form": measures.rate_I_divergence_form(mu, args.beta),
        "level_set_bound": measures.level_set_lower_bound(mu.mean, args.beta),
    }
    if args.format == "csv":
        return _rows_csv(list(rec), [[f"{v:.17g}" for v in rec.values()]])
    return _json(rec)


def cmd_solve_j(args) -> str:
    f = statistic_from(args)
    sol = tilted.solve_J(f, args.beta, grid_points=args.grid_points, tie_tol=args.tie_tol)
    if args.format == "csv":
        return _rows_csv(
            ["theta", "value", "residual"],
            [[f"{m.theta:.17g}", f"{m.value:.17g}", f"{m.residual:.3g}"] for m in sol.minimizers],
        )
    return _json(sol.to_record())


def _penalty_model(args) -> penalty.PenaltyModel:
    if (args.e_gamma is None) == (args.gamma is None):
        raise UsageError("give exactly one of --gamma and --e-gamma")
    if args.e_gamma is not None:
        return penalty.PenaltyModel.from_e_gamma(args.beta, args.e_gamma)
    return penalty.PenaltyModel(args.beta, args.gamma)


def cmd_penalty_curve(args) -> str:
    model = _penalty_model(args)
    if not args.theta_min < args.theta_max:
        raise UsageError("--theta-min must be below --theta-max")
    theta, h = penalty.penalty_curve(model, args.theta_max, args.theta_min, args.points)
    if args.format == "json":
        return _json({"beta": model.beta, "e_gamma": model.b, "theta": theta.tolist(), "H": h.tolist()})
    return penalty.curve_csv(theta, h)


def cmd_penalty_phase(args) -> str:
    if args.beta_min > args.beta_max or args.e_gamma_min > args.e_gamma_max:
        raise UsageError("range minimum exceeds maximum")
    cells = penalty.phase_scan(
        (args.beta_min, args.beta_max), (args.e_gamma_min, args.e_gamma_max), args.resolution, args.tie_tol
    )
    if args.format == "json":
        return _json(
            [{"beta": c.model.beta, "e_gamma": c.model.b, "regime": c.regime.value, "roots": list(c.roots)} for c in cells]
        )
    return penalty.phase_csv(cells)


def cmd_graphical(args) -> str:
    if (args.sequence is None) == (args.target is None):
        raise UsageError("give exactly one of --sequence and --target")
    if args.sequence is not None:
        d = sorted(args.sequence, reverse=True)
        ok = graphs.erdos_gallai_check(d)
        return "graphical\n" if ok else "not graphical\n"
    if args.n is None:
        raise UsageError("--target needs --n")
    h = graphs.frequency_from_target(args.target, args.n)
    counts = list(h.counts[: h.max_degree + 1])
    rec = {"n": h.n, "counts": counts, "edges": h.edges, "graphical": graphs.erdos_gallai_check(h.to_sequence())}
    if args.format == "csv":
        return _rows_csv(["degree", "count"], [[i, c] for i, c in enumerate(counts)])
    return _json(rec)


def cmd_enumerate(args) -> str:
    table = graphs.enumerate_frequencies(args.n, args.beta, allow_large=args.allow_large)
    if args.format == "json":
        return _json([{"h_vector": list(h.counts), "count": c, "probability": p} for h, (c, p) in table.items()])
    return graphs.enumeration_csv(table)


def cmd_partition(args) -> str:
    f = statistic_from(args)
    rec: dict = {"n": args.n, "beta": args.beta, "statistic": f.label}
    if args.n <= graphs.MAX_ENUM_N or args.allow_large:
        rec["exact"] = graphs.exact_log_partition(args.n, args.beta, f, allow_large=args.allow_large)
    elif not args.samples:
        raise TooLarge(f"exact enumeration limited to n <= {graphs.MAX_ENUM_N}; pass --samples for an estimate")
    if args.samples:
        seed = sampler.default_seed() if args.seed is None else args.seed
        est, se = sampler.estimate_log_partition(args.n, args.beta, f, args.samples, seed=seed)
        rec.update(estimate=est, std_error=se, samples=args.samples, seed=seed)
    if args.format == "csv":
        return _rows_csv(list(rec), [list(rec.values())])
    return _json(rec)


def cmd_simulate(args) -> str:
    f = statistic_from(args)
    seed = sampler.default_seed() if args.seed is None else args.seed
    samples = max(1, args.sweeps // args.thin)
    cfg = sampler.ChainConfig(args.n, args.beta, f, burn_in=args.burn_in, samples=samples, thin=args.thin, seed=seed)
    preds, theta = None, None
    if not f.superlinear:
        sol = tilted.solve_J(f, args.beta)
        preds = tilted.predicted_measures(sol, f)
        theta = sol.thetas
    trace: list = []
    if args.chains == 1:
        parts = [sampler.mcmc_run(cfg, preds, trace)]
    else:
        parts = []
        for j, ss in enumerate(sampler.chain_seeds(seed, args.chains)):
            sub = sampler.ChainConfig(cfg.n, cfg.beta, f, cfg.burn_in, cfg.samples, cfg.thin, seed=ss)
            parts.append(sampler.mcmc_run(sub, preds, trace if j == 0 else None))
    summary = sampler.merge_summaries(parts, preds)
    if args.trace:
        Path(args.trace).write_text(
            _rows_csv(["sweep", "edges", "mu_f", "distance"], [[s, e, f"{m:.17g}", f"{d:.17g}"] for s, e, m, d in trace])
        )
    rec = summary.to_record()
    rec.update(statistic=f.label, n=args.n, beta=args.beta, chains=args.chains, seed=seed, predicted_theta=theta)
    if args.format == "csv":
        w = summary.mean_empirical_measure.weights
        return _rows_csv(["i", "weight"], [[i, f"{x:.17g}"] for i, x in enumerate(w)])
    return _json(rec)


def cmd_verify(args) -> int:
    results = verification.run_all(args.quick, only=args.only, echo=lambda s: print(s, flush=True))
    failed = [r.number for r in results if not r.passed]
    summary = f"{len(results) - len(failed)}/{len(results)} criteria passed"
    print(summary if not failed else f"{summary}; failed: {', '.join(map(str, failed))}")
    return 1 if failed else 0


COMMANDS = {
    "rate": cmd_rate,
    "solve-j": cmd_solve_j,
    "penalty-curve": cmd_penalty_curve,
    "penalty-phase": cmd_penalty_phase,
    "graphical": cmd_graphical,
    "enumerate": cmd_enumerate,
    "partition": cmd_partition,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser, args = parse(argv)
    sp = _subparser(parser, args.command)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        text = COMMANDS[args.command](args)
    except UsageError as exc:
        sp.print_usage(sys.stderr)
        print(f"{sp.prog}: error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        sp.print_usage(sys.stderr)
        print(f"{sp.prog}: error: DomainError: {exc}", file=sys.stderr)
        return 2
    except COMPUTE_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.output:
        Path(args.output).write_text(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:  # e.g. piped into head
            sys.stderr.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
