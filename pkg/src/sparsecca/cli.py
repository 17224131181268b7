"""Command-line front end.

Subcommands: ``fit``, ``tune``, ``simulate``, ``permtest``, ``baseline`` and
``pca-reduce``.  Every subcommand writes its outputs to ``--out`` together
with ``config.txt``, the fully resolved parameters of the run.

File formats
------------
Data CSVs are UTF-8, comma-delimited, one header row, samples as rows and
features as columns.  Outputs print numbers with 17 significant digits so a
write/read round trip is lossless.  Config files are ``key = value`` lines,
``#`` starts a comment; keys are the long flag names (``k-pairs`` or
``k_pairs``).  Explicit flags override the file.

Random numbers come from numpy's PCG64 seeded through
``SeedSequence(seed, spawn_key=(purpose, index))``; see :mod:`sparsecca.rng`.

Exit codes: 0 success, 2 user or input error, 3 numerical failure.
The default ``--threads`` comes from ``SPARSECCA_THREADS`` (else 1); outputs
do not depend on it.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import NuggetConfig, classical_cca, nugget_cca, pca_reduce
from .ecca import CanonicalModel, fit_ecca
from .exceptions import InputError, NumericalError, SparseCCAError
from .lasso import GRID_CONSTANTS, LassoConfig, default_lambda_grid
from .matcore import Dataset
from .permtest import DEFAULT_PERMUTATIONS, PROCEDURES, Procedure, perm_test
from .simlab import METHODS, MethodOptions, ScenarioConfig, run_example1, run_replicates
from .tuning import CRITERIA, SplitSpec, split, tune_lambda

EXIT_OK = 0
EXIT_USER = 2
EXIT_NUMERIC = 3
THREADS_ENV = "SPARSECCA_THREADS"
FLOAT_FMT = "%.17g"
CASES = {"case1": "example2_case1", "case2": "example2_case2", "example1": "example1"}


class UsageError(InputError):
    """Bad flags, config entries or input files."""


# ---------------------------------------------------------------- CSV I/O


def read_csv_matrix(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a header row plus numeric rows; errors name the file and line."""
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as err:
        raise UsageError(f"{path}: cannot open ({err.strerror})") from err
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise UsageError(f"{path}: file is empty")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise UsageError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
            try:
                values = [float(cell) for cell in row]
            except ValueError as err:
                raise UsageError(f"{path}: line {line}: {err}") from err
            if not all(np.isfinite(values)):
                raise UsageError(f"{path}: line {line}: non-finite value")
            rows.append(values)
    if not rows:
        raise UsageError(f"{path}: no data rows")
    return [h.strip() for h in header], np.array(rows, dtype=np.float64)


def write_csv(path: Path, header, rows) -> None:
    """Write rows; floats use 17 significant digits, everything else ``str``."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % value
    return str(value)


def write_matrix(path: Path, matrix: np.ndarray, header) -> None:
    write_csv(path, header, np.asarray(matrix).tolist())


def load_dataset(x_path, y_path) -> Dataset:
    _, x = read_csv_matrix(x_path)
    _, y = read_csv_matrix(y_path)
    if x.shape[0] != y.shape[0]:
        raise UsageError(
            f"sample counts differ: X is {x.shape[0]}x{x.shape[1]} (samples x features), "
            f"Y is {y.shape[0]}x{y.shape[1]}"
        )
    return Dataset.from_samples(x, y)


# ------------------------------------------------------------- config


def read_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise UsageError(f"{path}: cannot read config ({err.strerror})") from err
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}: line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise UsageError(f"{path}: line {lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    """``"0.1,0.3,1"`` or an inclusive range ``"start:stop:step"``."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(round(start + i * step, 12)) for i in range(count))
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}: {err}") from err


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _mu_grid(text: str) -> tuple[tuple[float, float], ...]:
    """``"0.01/0,0.1/0"`` -> ((0.01, 0), (0.1, 0)); a bare number means mu_y = 0."""
    out = []
    for item in _str_list(text):
        parts = item.split("/")
        try:
            mu = tuple(float(p) for p in parts)
        except ValueError as err:
            raise argparse.ArgumentTypeError(f"bad nugget entry {item!r}") from err
        if len(mu) == 1:
            mu = (mu[0], 0.0)
        if len(mu) != 2:
            raise argparse.ArgumentTypeError(f"bad nugget entry {item!r}")
        out.append(mu)
    return tuple(out)


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


# -------------------------------------------------------------- parser

# (flag, type, default, help); defaults are applied after merging the config file.
_COMMON = [
    ("out", str, None, "output directory (required)"),
    ("seed", int, 0, "base seed"),
    ("threads", int, None, f"worker threads (default ${THREADS_ENV} or 1)"),
]
_LASSO = [
    ("tol", float, 1e-8, "coordinate-descent tolerance"),
    ("max-iters", int, 10000, "coordinate-descent sweep cap"),
]
_DATA = [("x", str, None, "X csv (samples x p)"), ("y", str, None, "Y csv (samples x d)")]
_SPLIT = [
    ("split", str, "5:1", "train:holdout ratio or training fraction"),
    ("shuffle", _parse_bool, True, "shuffle before splitting"),
]
_GRID = [
    ("grid", _float_list, None, "explicit lambda1 grid (comma list or start:stop:step)"),
    ("grid-constants", _float_list, GRID_CONSTANTS, "c values for c*sqrt(n log p) when --grid is absent"),
]

SUBCOMMANDS = {
    "fit": _DATA + [
        ("lambda", float, None, "lambda1 (default 0.1*sqrt(n log p))"),
        ("k-pairs", int, 1, "number of canonical pairs"),
    ] + _LASSO + _COMMON,
    "tune": _DATA + _GRID + _SPLIT + [
        ("k-pairs", int, 1, "number of canonical pairs"),
        ("criterion", str, "first", f"validation score: {'|'.join(CRITERIA)}"),
        ("warm-start", _parse_bool, False, "warm-start fits along the grid"),
    ] + _LASSO + _COMMON,
    "simulate": [
        ("case", str, "case1", f"scenario: {'|'.join(CASES)}"),
        ("n", int, 500, "training sample size"),
        ("p", int, 100, "X dimension"),
        ("d", int, 5, "Y dimension"),
        ("sigma2", _float_list, (0.5,), "noise variances (comma list or start:stop:step)"),
        ("reps", int, 50, "replicates per sigma2"),
        ("methods", _str_list, ("ecca",), f"comma list from {','.join(METHODS)}"),
        ("grid-constants", _float_list, GRID_CONSTANTS, "c values for c*sqrt(n log p)"),
        ("nugget-grid", _mu_grid, ((1.0, 0.0),), "mu_x/mu_y entries, comma separated"),
        ("sign-alignment", str, "truth", "truth|convention"),
    ] + _LASSO + _COMMON,
    "permtest": _DATA + _GRID[1:] + _SPLIT + [
        ("procedure", str, "ecca-tuned", f"{'|'.join(PROCEDURES)}"),
        ("lambda", float, None, "lambda1 for ecca-fixed (default 0.1*sqrt(n log p))"),
        ("permutations", int, DEFAULT_PERMUTATIONS, "number of permutations"),
        ("mu-x", float, 1.0, "nugget on S_xx for the nugget procedure"),
        ("mu-y", float, 0.0, "nugget on S_yy for the nugget procedure"),
    ] + _LASSO + _COMMON,
    "baseline": _DATA + [
        ("method", str, "classical", "classical|nugget"),
        ("mu-x", float, 0.0, "nugget on S_xx"),
        ("mu-y", float, 0.0, "nugget on S_yy"),
        ("k-pairs", int, 1, "number of canonical pairs"),
    ] + _COMMON,
    "pca-reduce": [
        ("y", str, None, "Y csv (samples x d)"),
        ("components", int, None, "number of components (default ceil(d/2))"),
        ("out", str, None, "output directory (required)"),
    ],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparsecca", description="Sparse CCA by eigenvector decomposition.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, options in SUBCOMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file; flags override it")
        for flag, kind, _, text in options:
            p.add_argument(f"--{flag}", type=kind, default=None, help=text)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < explicit flags into one dict."""
    options = SUBCOMMANDS[args.command]
    known = {flag.replace("-", "_"): (kind, default) for flag, kind, default, _ in options}
    from_file = read_config(args.config) if args.config else {}
    # config.txt written by a previous run can be fed back in unchanged
    written_for = from_file.pop("command", args.command)
    if written_for != args.command:
        raise UsageError(f"{args.config}: written for {written_for!r}, not {args.command!r}")
    unknown = sorted(set(from_file) - set(known))
    if unknown:
        raise UsageError(f"{args.config}: unknown key(s) for {args.command}: {', '.join(unknown)}")
    cfg = {}
    for key, (kind, default) in known.items():
        value = getattr(args, key)
        if value is None and key in from_file:
            try:
                value = kind(from_file[key])
            except (ValueError, argparse.ArgumentTypeError) as err:
                raise UsageError(f"{args.config}: {key}: {err}") from err
        cfg[key] = default if value is None else value
    if "threads" in cfg:
        if cfg["threads"] is None:
            cfg["threads"] = _default_threads()
        if cfg["threads"] < 1:
            raise UsageError(f"--threads must be >= 1, got {cfg['threads']}")
    for key in ("x", "y", "out"):
        if key in cfg and cfg[key] is None:
            raise UsageError(f"{args.command}: --{key} is required")
    return cfg


def write_config(out: Path, command: str, cfg: dict) -> None:
    lines = [f"command = {command}"]
    for key in sorted(cfg):
        value = cfg[key]
        if isinstance(value, tuple):
            value = ",".join("/".join(_fmt(float(v)) for v in item) if isinstance(item, tuple) else _fmt(item) for item in value)
        elif value is None:
            value = ""
        else:
            value = _fmt(value)
        lines.append(f"{key} = {value}")
    (out / "config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


# ------------------------------------------------------------ commands


def _lasso(cfg) -> LassoConfig:
    return LassoConfig(0.0, cfg["max_iters"], cfg["tol"])


def _default_lambda(data: Dataset) -> float:
    return float(0.1 * np.sqrt(data.n * np.log(max(data.p, 2))))


def write_model(out: Path, model: CanonicalModel) -> None:
    """a.csv (d x K), b.csv (p x K), eigenvalues.csv and correlations.csv."""
    cols = [f"pair{k + 1}" for k in range(model.k_pairs)]
    write_matrix(out / "a.csv", model.a, cols)
    write_matrix(out / "b.csv", model.b, cols)
    write_csv(out / "eigenvalues.csv", ["pair", "eigenvalue"],
              [(k + 1, float(v)) for k, v in enumerate(model.eigenvalues)])
    write_csv(
        out / "correlations.csv",
        ["pair", "correlation", "train_correlation", "degenerate"],
        [
            (k + 1, float(model.correlations[k]), float(model.train_correlations[k]), k in model.degenerate_pairs)
            for k in range(model.k_pairs)
        ],
    )


def cmd_fit(cfg, out: Path) -> None:
    data = load_dataset(cfg["x"], cfg["y"])
    if cfg["lambda"] is None:
        cfg["lambda"] = _default_lambda(data)
    model = fit_ecca(data, _lasso(cfg).with_lambda(cfg["lambda"]), cfg["k_pairs"], cfg["threads"])
    write_model(out, model)


def _split_spec(cfg) -> SplitSpec:
    return SplitSpec.parse(cfg["split"], cfg["seed"], cfg["shuffle"])


def cmd_tune(cfg, out: Path) -> None:
    data = load_dataset(cfg["x"], cfg["y"])
    train, val = split(data, _split_spec(cfg))
    grid = cfg["grid"]
    if grid is None:
        grid = tuple(default_lambda_grid(train.n, train.p, cfg["grid_constants"]))
        cfg["grid"] = grid
    res = tune_lambda(
        train, val, grid, cfg["k_pairs"], base=_lasso(cfg), criterion=cfg["criterion"],
        warm_start=cfg["warm_start"], threads=cfg["threads"],
    )
    write_csv(
        out / "tune.csv",
        ["lambda", "val_correlation", "degenerate", "chosen"],
        [
            (float(lam), float(score), bool(deg), i == res.chosen_index)
            for i, (lam, score, deg) in enumerate(zip(res.lambda_grid, res.val_correlations, res.degenerate))
        ],
    )
    refit = fit_ecca(data, _lasso(cfg).with_lambda(res.chosen_lambda), cfg["k_pairs"], cfg["threads"])
    write_model(out, refit)


def cmd_simulate(cfg, out: Path) -> None:
    if cfg["case"] not in CASES:
        raise UsageError(f"unknown case {cfg['case']!r}; expected one of {', '.join(CASES)}")
    if cfg["reps"] < 1:
        raise UsageError("--reps must be >= 1")
    kind = CASES[cfg["case"]]
    if kind == "example1":
        report = run_example1(cfg["reps"], cfg["seed"], cfg["grid_constants"], _lasso(cfg), cfg["threads"])
        write_csv(
            out / "example1.csv",
            ["replicate", "test_correlation", "chosen_lambda"],
            [(j, float(c), float(lam)) for j, (c, lam) in enumerate(zip(report.test_correlations, report.chosen_lambdas))],
        )
        write_csv(out / "summary.csv", ["replicates", "positive", "population_correlation"],
                  [(cfg["reps"], report.positive, report.population_correlation)])
        return
    bad = [m for m in cfg["methods"] if m not in METHODS]
    if bad:
        raise UsageError(f"unknown method(s) {', '.join(bad)}; expected from {', '.join(METHODS)}")
    options = MethodOptions(cfg["grid_constants"], cfg["nugget_grid"], _lasso(cfg), cfg["sign_alignment"])
    summary, timing, detail = [], [], []
    for sigma2 in cfg["sigma2"]:
        config = ScenarioConfig(kind, cfg["n"], cfg["p"], cfg["d"], sigma2)
        report = run_replicates(config, cfg["methods"], cfg["reps"], cfg["seed"], options, cfg["threads"])
        for method in cfg["methods"]:
            ra, rb, total = report.rmse(method)
            summary.append((sigma2, method, ra, rb, total, report.failures(method)))
            timing.append((sigma2, method, report.mean_time(method)))
        for rec in report.records:
            detail.append(
                (sigma2, rec.method, rec.replicate, *rec.err_a, *rec.err_b, float(rec.param), rec.error or "")
            )
    k = len(report.records[0].err_a)
    write_csv(out / "rmse.csv", ["sigma2", "method", "rmse_a", "rmse_b", "total", "failures"], summary)
    write_csv(out / "timing.csv", ["sigma2", "method", "mean_wall_time"], timing)
    write_csv(
        out / "replicates.csv",
        ["sigma2", "method", "replicate"]
        + [f"err_a{i + 1}" for i in range(k)] + [f"err_b{i + 1}" for i in range(k)] + ["param", "error"],
        detail,
    )


def cmd_permtest(cfg, out: Path) -> None:
    data = load_dataset(cfg["x"], cfg["y"])
    if cfg["procedure"] == "ecca-fixed" and cfg["lambda"] is None:
        cfg["lambda"] = _default_lambda(data)
    procedure = Procedure(
        kind=cfg["procedure"],
        lambda1=cfg["lambda"] or 0.0,
        lambda_constants=cfg["grid_constants"],
        split_spec=_split_spec(cfg),
        nugget=NuggetConfig(cfg["mu_x"], cfg["mu_y"]),
        lasso=_lasso(cfg),
    )
    res = perm_test(data, procedure, cfg["permutations"], cfg["seed"], cfg["threads"])
    write_csv(
        out / "permtest.csv",
        ["observed", "p_value", "permutations", "seed", "degenerate_null"],
        [(res.observed, res.p_value, res.permutations, res.seed, res.degenerate_null)],
    )
    write_csv(out / "null.csv", ["permutation", "correlation"], [(i, float(v)) for i, v in enumerate(res.null_sample)])


def cmd_baseline(cfg, out: Path) -> None:
    data = load_dataset(cfg["x"], cfg["y"])
    if cfg["method"] == "classical":
        model = classical_cca(data, cfg["k_pairs"])
    elif cfg["method"] == "nugget":
        model = nugget_cca(data, NuggetConfig(cfg["mu_x"], cfg["mu_y"]), cfg["k_pairs"])
    else:
        raise UsageError(f"unknown baseline {cfg['method']!r}; expected classical or nugget")
    write_model(out, model)


def cmd_pca_reduce(cfg, out: Path) -> None:
    header, y = read_csv_matrix(cfg["y"])
    u, reduced = pca_reduce(y.T, cfg["components"])
    cfg["components"] = u.shape[0]
    cols = [f"pc{i + 1}" for i in range(u.shape[0])]
    write_matrix(out / "reduced.csv", reduced.T, cols)
    write_csv(out / "loadings.csv", ["feature"] + cols, [(h, *map(float, row)) for h, row in zip(header, u.T)])


COMMANDS = {
    "fit": cmd_fit,
    "tune": cmd_tune,
    "simulate": cmd_simulate,
    "permtest": cmd_permtest,
    "baseline": cmd_baseline,
    "pca-reduce": cmd_pca_reduce,
}


def run(argv=None) -> int:
    """Parse, execute and write outputs; exceptions propagate."""
    args = build_parser().parse_args(argv)
    cfg = resolve(args)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    COMMANDS[args.command](cfg, out)
    write_config(out, args.command, cfg)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except SparseCCAError as err:
        # tuning exhaustion and similar: the inputs cannot support the request
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
