"""Batch command line: fit / generate / eval.

fit       cluster a samples-as-rows CSV, single (lam, gamma) or a grid sweep
generate  emit one of the four synthetic benchmark datasets
eval      compare two label files (prints ARI and NMI)

Outputs are plain CSV with a leading manifest comment line recording the
library version and the full flag set; files are written to a temp name
and renamed, so failures never leave partial outputs. Exit codes: 0 ok,
2 unreadable input, 3 solver divergence, 4 invalid flags.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

__all__ = ["main", "entry"]

_VERSION = "0.1.0"

_EXIT_DATA = 2
_EXIT_DIVERGENCE = 3
_EXIT_USAGE = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract here is 4
    def error(self, message):
        raise CliError(_EXIT_USAGE, f"{self.prog}: {message}")


def _apply_thread_env(argv) -> None:
    """Best-effort thread cap: must run before numpy is first imported."""
    threads = os.environ.get("SPROGA_NUM_THREADS")
    for i, a in enumerate(argv):
        if a == "--threads" and i + 1 < len(argv):
            threads = argv[i + 1]
        elif a.startswith("--threads="):
            threads = a.split("=", 1)[1]
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))


# ---------------------------------------------------------------- csv I/O

def _read_table(path):
    """Parse a CSV of samples-as-rows. Returns (header or None, rows of str)."""
    try:
        with open(path, newline="") as fh:
            lines = [row for row in csv.reader(fh)
                     if row and not (row[0].startswith("#"))]
    except OSError as exc:
        raise CliError(_EXIT_DATA, f"cannot read {path}: {exc}") from exc
    if not lines:
        raise CliError(_EXIT_DATA, f"{path}: empty file")

    def _numeric(tok: str) -> bool:
        try:
            float(tok)
            return True
        except ValueError:
            return False

    header = None
    if not all(_numeric(tok) for tok in lines[0]):
        header = [tok.strip() for tok in lines[0]]
        lines = lines[1:]
        if not lines:
            raise CliError(_EXIT_DATA, f"{path}: header but no data rows")
    width = len(lines[0])
    for i, row in enumerate(lines):
        if len(row) != width:
            lineno = i + 1 + (1 if header else 0)
            raise CliError(_EXIT_DATA,
                           f"{path}: line {lineno}: expected {width} fields, found {len(row)}")
    return header, lines


def _parse_float_cell(path, lineno, col, tok):
    try:
        return float(tok)
    except ValueError:
        raise CliError(_EXIT_DATA,
                       f"{path}: line {lineno}: field {col + 1} is not a number: {tok!r}") from None


def _write_csv(path, manifest: str, header, rows) -> None:
    tmp = f"{path}.tmp-{os.getpid()}"
    try:
        with open(tmp, "w", newline="") as fh:
            fh.write(f"# {manifest}\n")
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _fmt(precision: int):
    return lambda v: f"{v:.{precision}f}"


# ---------------------------------------------------------------- fit

def _add_fit_args(p: _Parser) -> None:
    p.add_argument("--input", required=True, help="samples-as-rows CSV")
    p.add_argument("--out-dir", default=".", help="directory for output CSVs")
    p.add_argument("--labels-col", default=None,
                   help="name or 0-based index of a truth-label column")
    p.add_argument("--k", type=int, default=10, help="neighbor count")
    p.add_argument("--weights", choices=("gaussian", "filtered"), default="filtered")
    p.add_argument("--phi", type=float, default=0.5, help="gaussian kernel decay")
    p.add_argument("--filter-pct", type=float, default=0.10,
                   help="fraction of longest edges removed by the filtered scheme")
    p.add_argument("--q", choices=("1", "2", "inf"), default="2", help="fusion norm")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="single fusion strength (omit to sweep)")
    p.add_argument("--gamma", type=float, default=None,
                   help="single sparsity strength (with --lambda)")
    p.add_argument("--lambda-grid", default="auto",
                   help="'auto' or comma-separated values")
    p.add_argument("--gamma-grid", default="0",
                   help="'auto', '0', or comma-separated values")
    p.add_argument("--rho1", type=float, default=0.8, help="lambda grid ratio")
    p.add_argument("--rho2", type=float, default=0.8, help="gamma grid ratio")
    p.add_argument("--gamma-grid-len", type=int, default=10)
    p.add_argument("--nu", choices=("ones", "presolve"), default="ones",
                   help="feature weights: all ones, or adaptive from a gamma=0 pre-solve")
    p.add_argument("--epsilon", type=float, default=None,
                   help="smoothing budget (default 1e-3 * f(0))")
    p.add_argument("--eta", type=float, default=1e-6, help="stopping tolerance")
    p.add_argument("--maxit", type=int, default=20000)
    p.add_argument("--cluster-tol", type=float, default=1e-3,
                   help="fusion tolerance relative to the longest edge")
    p.add_argument("--precision", type=int, default=6, help="output decimals")
    p.add_argument("--threads", type=int, default=None,
                   help="cap for BLAS thread pools (numeric results unaffected)")
    p.add_argument("--config", default=None, help="key=value defaults file")


def _load_data(args):
    header, lines = _read_table(args.input)
    label_idx = None
    if args.labels_col is not None:
        if header and args.labels_col in header:
            label_idx = header.index(args.labels_col)
        else:
            try:
                label_idx = int(args.labels_col)
            except ValueError:
                raise CliError(_EXIT_USAGE,
                               f"--labels-col {args.labels_col!r} not found") from None
            if not 0 <= label_idx < len(lines[0]):
                raise CliError(_EXIT_USAGE, f"--labels-col index {label_idx} out of range")
    offset = 2 if header else 1
    labels = None
    rows = []
    for i, row in enumerate(lines):
        vals = [_parse_float_cell(args.input, i + offset, j, tok)
                for j, tok in enumerate(row) if j != label_idx]
        rows.append(vals)
    if label_idx is not None:
        labels = [row[label_idx] for row in lines]
    names = None
    if header:
        names = [h for j, h in enumerate(header) if j != label_idx]
    return rows, labels, names


def cmd_fit(args, argv) -> int:
    import numpy as np

    from .core import DataMatrix, SolverConfig
    from .graph import WeightConfig, build_graph
    from .metrics import adjusted_rand_index, normalized_mutual_info
    from .model_selection import (gamma_max, geometric_grid, lambda_range,
                                  path_sweep)
    from .solver import presolve_feature_weights

    if args.lam is not None and args.lambda_grid != "auto":
        raise CliError(_EXIT_USAGE, "--lambda and --lambda-grid are mutually exclusive")
    if args.gamma is not None and args.lam is None:
        raise CliError(_EXIT_USAGE, "--gamma requires --lambda (use --gamma-grid to sweep)")
    if args.k < 1:
        raise CliError(_EXIT_USAGE, "--k must be >= 1")

    rows, labels, names = _load_data(args)
    try:
        X = DataMatrix.from_samples(np.asarray(rows, dtype=float))
    except ValueError as exc:
        raise CliError(_EXIT_DATA, f"{args.input}: {exc}") from exc
    if args.k >= X.n:
        raise CliError(_EXIT_USAGE, f"--k {args.k} must be < n = {X.n}")

    scheme = "filtered_knn" if args.weights == "filtered" else "gaussian_knn"
    wcfg = WeightConfig(k=args.k, scheme=scheme, phi=args.phi,
                        filter_percentile=args.filter_pct)
    G = build_graph(X, wcfg)
    q = float("inf") if args.q == "inf" else float(args.q)
    lmin, lmax = lambda_range(X, G)

    if args.lam is not None:
        lambda_grid = [args.lam]
    elif args.lambda_grid == "auto":
        lambda_grid = geometric_grid(lmax, max(lmin, 1e-12 * lmax), args.rho1)
    else:
        lambda_grid = [float(v) for v in args.lambda_grid.split(",")]

    nu = None
    if args.nu == "presolve":
        lam_ref = float(np.median(lambda_grid))
        nu = presolve_feature_weights(
            X, G, SolverConfig(lam=lam_ref, q=q, epsilon=args.epsilon,
                               eta=args.eta, maxit=args.maxit))
    gmax = gamma_max(X, nu if nu is not None else np.ones(X.p))

    if args.lam is not None:
        gamma_grid = [args.gamma if args.gamma is not None else 0.0]
    elif args.gamma_grid == "auto":
        gamma_grid = list(geometric_grid(gmax, 0.0, args.rho2,
                                         length=args.gamma_grid_len)) if gmax > 0 else [0.0]
    else:
        gamma_grid = [float(v) for v in args.gamma_grid.split(",")]

    base = SolverConfig(lam=1.0, gamma=0.0, q=q, epsilon=args.epsilon,
                        eta=args.eta, maxit=args.maxit, nu=nu)
    points = path_sweep(X, G, base, lambda_grid, gamma_grid)

    divergences = [pt for pt in points if pt.error and "non-finite" in pt.error]
    solved = [pt for pt in points if pt.result is not None]
    if not solved:
        if divergences:
            raise CliError(_EXIT_DIVERGENCE,
                           f"every grid cell diverged; first: {divergences[0].error}")
        raise CliError(_EXIT_DIVERGENCE, f"no grid cell solved: {points[0].error}")

    truth = None
    if labels is not None:
        _, truth = np.unique(np.asarray(labels), return_inverse=True)

    def _ari_nmi(pt):
        return (adjusted_rand_index(truth, pt.result.labels),
                normalized_mutual_info(truth, pt.result.labels))

    if truth is not None:
        metric_rows = [(pt, *_ari_nmi(pt)) for pt in solved]
        best = max(metric_rows, key=lambda r: r[1])[0]
    else:
        metric_rows = None
        best = solved[-1]

    fmt = _fmt(args.precision)
    manifest = f"sproga {_VERSION} | {' '.join(argv)}"
    os.makedirs(args.out_dir, exist_ok=True)
    out = lambda name: os.path.join(args.out_dir, name)

    _write_csv(out("assignments.csv"), manifest, ["sample_id", "cluster"],
               [(i, int(c)) for i, c in enumerate(best.result.labels)])
    rn = np.sqrt((best.result.centers ** 2).sum(axis=1))
    feat_names = names if names is not None else list(range(X.p))
    _write_csv(out("features.csv"), manifest, ["feature", "l2norm", "selected"],
               [(feat_names[k], fmt(rn[k]), int(best.result.selected_features[k]))
                for k in range(X.p)])
    _write_csv(out("path.csv"), manifest,
               ["lambda", "gamma", "num_clusters", "objective", "iterations",
                "converged", "error"],
               [(fmt(pt.lam), fmt(pt.gamma),
                 pt.result.num_clusters if pt.result else "",
                 fmt(pt.result.objective_trace[-1]) if pt.result else "",
                 pt.result.iterations if pt.result else "",
                 int(pt.result.converged) if pt.result else "",
                 pt.error or "") for pt in points])
    if metric_rows is not None:
        _write_csv(out("metrics.csv"), manifest, ["lambda", "gamma", "ari", "nmi"],
                   [(fmt(pt.lam), fmt(pt.gamma), fmt(a), fmt(m))
                    for pt, a, m in metric_rows])

    print(f"lambda range [{fmt(lmin)}, {fmt(lmax)}], gamma_max {fmt(gmax)}")
    print(f"best cell: lambda={fmt(best.lam)} gamma={fmt(best.gamma)} "
          f"clusters={best.result.num_clusters}")
    if divergences and len(divergences) < len(points):
        print(f"warning: {len(divergences)} grid cell(s) diverged", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- generate

def _add_generate_args(p: _Parser) -> None:
    p.add_argument("--setting", type=int, required=True, help="benchmark 1..4")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=1.0,
                   help="shrink sample counts proportionally")
    p.add_argument("--out-prefix", default=None, help="default setting<k>")
    p.add_argument("--precision", type=int, default=6)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--config", default=None)


def cmd_generate(args, argv) -> int:
    from .synthetic import generate_setting

    if args.setting not in (1, 2, 3, 4):
        raise CliError(_EXIT_USAGE, f"--setting must be 1..4, got {args.setting}")
    if not args.scale > 0:
        raise CliError(_EXIT_USAGE, "--scale must be > 0")
    X, labels, mask = generate_setting(args.setting, args.seed, args.scale)

    prefix = args.out_prefix or f"setting{args.setting}"
    fmt = _fmt(args.precision)
    manifest = f"sproga {_VERSION} | {' '.join(argv)}"

    samples = X.values.T
    _write_csv(f"{prefix}_data.csv", manifest,
               [f"feature_{k}" for k in range(X.p)],
               [[fmt(v) for v in row] for row in samples])
    _write_csv(f"{prefix}_labels.csv", manifest, ["sample_id", "label"],
               [(i, int(c)) for i, c in enumerate(labels)])
    _write_csv(f"{prefix}_informative.csv", manifest, ["feature", "informative"],
               [(k, int(mask[k])) for k in range(X.p)])
    print(f"wrote {prefix}_data.csv ({samples.shape[0]}x{samples.shape[1]}), "
          f"{prefix}_labels.csv, {prefix}_informative.csv")
    return 0


# ---------------------------------------------------------------- eval

def _add_eval_args(p: _Parser) -> None:
    p.add_argument("truth", help="label CSV (last column is the label)")
    p.add_argument("predicted", help="label CSV (last column is the label)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--config", default=None)


def _read_labels(path):
    _, lines = _read_table(path)
    return [row[-1].strip() for row in lines]


def cmd_eval(args, argv) -> int:
    import numpy as np

    from .metrics import adjusted_rand_index, normalized_mutual_info

    a = _read_labels(args.truth)
    b = _read_labels(args.predicted)
    if len(a) != len(b):
        raise CliError(_EXIT_DATA,
                       f"label files differ in length: {len(a)} vs {len(b)}")
    _, ai = np.unique(np.asarray(a), return_inverse=True)
    _, bi = np.unique(np.asarray(b), return_inverse=True)
    print(f"ari={adjusted_rand_index(ai, bi):.6f} "
          f"nmi={normalized_mutual_info(ai, bi):.6f}")
    return 0


# ---------------------------------------------------------------- driver

def _load_config(path) -> dict:
    opts = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise CliError(_EXIT_USAGE,
                                   f"{path}: line {lineno}: expected key=value")
                key, val = line.split("=", 1)
                opts[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise CliError(_EXIT_DATA, f"cannot read config {path}: {exc}") from exc
    return opts


def _build_parser() -> _Parser:
    parser = _Parser(prog="sproga",
                     description="sparse convex clustering via smoothed proximal gradient")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_fit_args(sub.add_parser("fit", help="cluster a CSV"))
    _add_generate_args(sub.add_parser("generate", help="emit a benchmark dataset"))
    _add_eval_args(sub.add_parser("eval", help="score two label files"))
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _apply_thread_env(argv)
    parser = _build_parser()
    try:
        # flags override config-file values override defaults
        pre = _Parser(add_help=False)
        pre.add_argument("--config", default=None)
        known, _ = pre.parse_known_args(argv)
        args = parser.parse_args(argv)
        if known.config:
            conf = _load_config(known.config)
            for key in conf:
                if not hasattr(args, key):
                    raise CliError(_EXIT_USAGE, f"unknown config key {key!r}")
            defaults = {k: _coerce(v) for k, v in conf.items()}
            for sp in (parser, *_subparsers(parser)):
                sp.set_defaults(**defaults)
            args = parser.parse_args(argv)
        handler = {"fit": cmd_fit, "generate": cmd_generate, "eval": cmd_eval}[args.command]
        from .solver import NumericalDivergenceError
        try:
            return handler(args, argv)
        except NumericalDivergenceError as exc:
            raise CliError(_EXIT_DIVERGENCE, str(exc)) from exc
    except CliError as exc:
        print(f"sproga: error: {exc}", file=sys.stderr)
        return exc.code


def _subparsers(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            yield from action.choices.values()


def _coerce(raw: str):
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    for typ in (int, float):
        try:
            return typ(raw)
        except ValueError:
            pass
    return raw


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
