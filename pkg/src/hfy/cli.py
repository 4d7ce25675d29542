"""Command line interface: ``hfy {transform,basins,metastable,capacity,generate}``.

Every command writes CSV to ``--out`` (stdout by default). Options can also
come from a JSON object passed with ``--json``; explicit flags win.

Exit codes: 0 success, 2 input error, 3 numerical non-convergence.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import datasets, experiments
from .exceptions import ConvergenceError, InputError, ParameterError, PatternGenerationError
from .hopfield import RetrievalConfig, make_method
from .io import format_float, read_patterns, write_patterns

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3

METHODS = ("softmax", "entmax", "normmax", "sparsemax", "ksubsets", "seq-ksubsets")

DEFAULTS = {
    "transform": {"method": ["sparsemax"], "beta": list(np.logspace(-2, 2, 41))},
    "basins": {"method": ["sparsemax"], "beta": [1.0], "grid": "-1.5,1.5,-1.5,1.5,50", "eps": 0.01},
    "metastable": {"method": ["sparsemax"], "beta": [0.1, 1.0]},
    "capacity": {"method": ["sparsemax"], "beta": [8.0], "dim": [24], "n_patterns": [50],
                 "eps": ["bound"], "trials": 20},
    "generate": {"dim": 2, "n": 10, "min_angle": math.pi / 3, "jitter": 0.0},
}
COMMON_DEFAULTS = {"seed": 0, "radius": 1.0, "max_steps": 200, "edge_score": 0.0}


class CLIInputError(InputError):
    pass


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def _write_rows(header, rows, out):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def parse_method(token, alpha=None, k=None, n_patterns=None, edge_score=0.0):
    """Resolve ``name`` or ``name:param`` (alpha for entmax/normmax, k for subsets)."""
    name, _, param = token.partition(":")
    name = name.strip()
    if name not in METHODS:
        raise CLIInputError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    try:
        if param and name in ("entmax", "normmax"):
            alpha = float(param)
        elif param and name in ("ksubsets", "seq-ksubsets"):
            k = int(param)
    except ValueError as exc:
        raise CLIInputError(f"bad method parameter in {token!r}") from exc
    if n_patterns is None:
        n_patterns = k if k is not None else 1
    return make_method(name, alpha, k, n_patterns, edge_score)


def _parse_floats(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise CLIInputError(f"could not parse {what} {text!r}: {exc}") from exc


def _build_parser():
    parser = argparse.ArgumentParser(prog="hfy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, methods=True):
        p.add_argument("--json", dest="json_config", metavar="CONFIG",
                       help="JSON file with option values")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int)
        if methods:
            p.add_argument("--method", action="append",
                           help="method name, optionally name:alpha or name:k (repeatable)")
            p.add_argument("--alpha", type=float)
            p.add_argument("--k", type=int)
            p.add_argument("--edge-score", type=float,
                           help="pairwise score for seq-ksubsets")
            p.add_argument("--beta", type=float, action="append", help="inverse temperature (repeatable)")
            p.add_argument("--max-steps", type=int)

    p = sub.add_parser("transform", help="regularization path of a score vector")
    common(p)
    p.add_argument("--theta", help="comma-separated scores (default: the 5-d example vector)")
    p.add_argument("--theta-file", help="CSV file whose first row holds the scores")

    p = sub.add_parser("basins", help="attraction basins on a 2-d grid")
    common(p)
    p.add_argument("--patterns", required=False)
    p.add_argument("--header", action="store_true", default=None)
    p.add_argument("--grid", help='"x0,x1,y0,y1,res"')
    p.add_argument("--eps", type=float, help="softmax retrieval tolerance")

    p = sub.add_parser("metastable", help="support-size histogram of fixed points")
    common(p)
    p.add_argument("--patterns")
    p.add_argument("--queries")
    p.add_argument("--header", action="store_true", default=None)

    p = sub.add_parser("capacity", help="one-step exact retrieval under perturbations")
    common(p)
    p.add_argument("--dim", type=int, action="append")
    p.add_argument("--n-patterns", type=int, action="append")
    p.add_argument("--eps", action="append", help='perturbation norm or "bound" (repeatable)')
    p.add_argument("--radius", type=float)
    p.add_argument("--trials", type=int, help="perturbations per pattern")

    p = sub.add_parser("generate", help="write a synthetic pattern file")
    common(p, methods=False)
    p.add_argument("--kind", choices=("sphere_uniform", "min_angle", "grid2d"))
    p.add_argument("--dim", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--min-angle", type=float)
    p.add_argument("--jitter", type=float)
    return parser


def _resolve(args):
    """Fill unset options from ``--json`` and then from the built-in defaults."""
    values = vars(args)
    if args.json_config:
        try:
            with open(args.json_config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CLIInputError(f"cannot read config {args.json_config}: {exc}") from exc
        if not isinstance(config, dict):
            raise CLIInputError("JSON config must be an object")
        for key, val in config.items():
            key = key.replace("-", "_")
            if key not in values:
                raise CLIInputError(f"unknown option {key!r} in {args.json_config}")
            if values[key] is None:
                if key in ("method", "beta", "dim", "n_patterns", "eps") and args.command != "generate" \
                        and not isinstance(val, list) and not (args.command == "basins" and key == "eps"):
                    val = [val]
                values[key] = val
    for key, val in {**COMMON_DEFAULTS, **DEFAULTS[args.command]}.items():
        if key in values and values[key] is None:
            values[key] = val
    return args


def _load_patterns(path, header):
    if not path:
        raise CLIInputError("--patterns is required")
    return read_patterns(path, header=bool(header))


def _single_config(args, n_patterns):
    if len(args.beta) != 1:
        raise CLIInputError("this command takes a single --beta")
    method = parse_method(args.method[-1], args.alpha, args.k, n_patterns, args.edge_score)
    return RetrievalConfig(method, args.beta[0], args.max_steps)


def cmd_transform(args):
    if args.theta and args.theta_file:
        raise CLIInputError("give --theta or --theta-file, not both")
    if args.theta:
        theta = np.array(_parse_floats(args.theta, "--theta"))
    elif args.theta_file:
        theta = read_patterns(args.theta_file)[0]
    else:
        theta = experiments.FIG2_THETA
    if theta.size == 0:
        raise CLIInputError("empty score vector")
    method = parse_method(args.method[-1], args.alpha, args.k, theta.size, args.edge_score)
    rows = experiments.regularization_path(method, theta, args.beta)
    _write_rows(["beta", "coordinate", "value"], rows, args.out)


def cmd_basins(args):
    X = _load_patterns(args.patterns, args.header)
    cfg = _single_config(args, X.shape[0])
    grid = experiments.parse_grid(args.grid)
    rows = experiments.basins(X, cfg, grid, tol=args.eps)
    _write_rows(["x", "y", "label"], rows, args.out)


def cmd_metastable(args):
    X = _load_patterns(args.patterns, args.header)
    if not args.queries:
        raise CLIInputError("--queries is required")
    Q = read_patterns(args.queries, header=bool(args.header))
    if Q.shape[1] != X.shape[1]:
        raise CLIInputError(f"queries have dimension {Q.shape[1]}, patterns {X.shape[1]}")
    rows = []
    for token in args.method:
        method = parse_method(token, args.alpha, args.k, X.shape[0], args.edge_score)
        for beta in args.beta:
            cfg = RetrievalConfig(method, beta, args.max_steps)
            hist = experiments.metastable_histogram(X, Q, cfg)
            rows.extend((token, beta, size, pct) for size, pct in hist.items())
    _write_rows(["method", "beta", "support_size", "percent"], rows, args.out)


def cmd_capacity(args):
    token = args.method[-1]
    if token.partition(":")[0].strip() in ("ksubsets", "seq-ksubsets"):
        raise CLIInputError("capacity experiments take a simplex method")
    method = parse_method(token, args.alpha, args.k, None, args.edge_score)
    epss = []
    for e in args.eps:
        if e == "bound":
            epss.append(e)
        else:
            try:
                epss.append(float(e))
            except ValueError as exc:
                raise CLIInputError(f"bad --eps value {e!r}") from exc
    rows = experiments.capacity_sweep(args.dim, args.n_patterns, args.beta, epss, method,
                                      args.seed, radius=args.radius, n_perturb=args.trials)
    _write_rows(["D", "N", "beta", "eps", "success_rate", "status"], rows, args.out)


def cmd_generate(args):
    if args.kind is None:
        raise CLIInputError("--kind is required")
    rng = np.random.default_rng(args.seed)
    if args.kind == "sphere_uniform":
        X = datasets.make_sphere_uniform(args.dim, args.n, args.radius, rng=rng)
    elif args.kind == "min_angle":
        X = datasets.make_min_angle(args.dim, args.n, args.radius, args.min_angle, rng=rng)
    else:
        X = datasets.make_grid2d(args.n, args.radius, args.jitter, rng=rng)
    if args.out is None:
        sys.stdout.write(write_patterns(X))
    else:
        write_patterns(X, args.out)


COMMANDS = {
    "transform": cmd_transform,
    "basins": cmd_basins,
    "metastable": cmd_metastable,
    "capacity": cmd_capacity,
    "generate": cmd_generate,
}


# options whose values are comma lists that may start with a minus sign
_LIST_OPTIONS = ("--grid", "--theta")


def _join_list_options(argv):
    """Rewrite ``--grid -1,1,...`` as ``--grid=-1,1,...`` so argparse keeps the value."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _LIST_OPTIONS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None):
    parser = _build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_list_options(argv))
    try:
        _resolve(args)
        COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"hfy: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (InputError, ParameterError, PatternGenerationError, OSError) as exc:
        print(f"hfy: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
