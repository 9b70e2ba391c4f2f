"""Command-line front-end: ``copulainfo {mi,fit,scan,simulate,excess-curve}``.

Input formats
-------------
pair file
    Two numeric columns separated by a comma or whitespace.  An optional
    non-numeric header line is skipped, as are blank lines and lines
    starting with ``#``.
price panel
    CSV with header ``date,<T>_open,<T>_close,...``.  Dates are ISO
    ``YYYY-MM-DD`` and strictly increasing.  Empty cells and ``NA``,
    ``NaN``, ``null`` mark missing prices.

Output
------
CSV (default) starts with ``# key=value`` metadata lines followed by a
header row.  JSON is a flat object for ``mi``/``fit`` and a list of flat
objects for tabular commands.  Information quantities are in nats.

Exit codes: 0 success, 2 usage, 3 data or parse error, 4 numerical domain
error.  Failures print a JSON error object on standard error.
"""
import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
import datetime as dt
import io
import itertools
import json
import math
import sys

import numpy as np

from .copula import (
    GaussianCopula,
    StudentTCopula,
    apply_marginals,
    excess_information,
    mi_gaussian,
    mi_t,
    parse_marginal,
    sample_copula,
)
from .identify import MIN_OBSERVATIONS, InsufficientDataError, fit_t_copula
from .ksg import DegeneracyError, KsgConfig, bootstrap_mi, ksg_mi
from .rank import DegenerateInputError, kendall_tau, tau_to_rho
from .special import DomainError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DOMAIN = 4

MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none"})

SCAN_COLUMNS = ("ticker_a", "ticker_b", "n", "tau", "rho_hat", "mi", "ci_low", "ci_high",
                "excess", "excess_ci_low", "excess_ci_high", "excess_lower",
                "nu_hat_or_gaussian", "skip_reason")
SIMULATE_COLUMNS = ("run", "n", "rho", "nu", "mi", "tau", "rho_hat", "mi_analytic",
                    "excess", "excess_analytic")


class ParseError(ValueError):
    """Malformed input file."""


class DataError(ValueError):
    """Well-formed input holding invalid values."""


class UsageError(ValueError):
    """Invalid combination of command-line arguments."""


# ---------------------------------------------------------------------------
# ingestion


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def _split(line):
    return [t.strip() for t in line.split(",")] if "," in line else line.split()


def read_pairs(path):
    """Read a two-column numeric pair file into ``(x, y)`` float arrays."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    xs, ys = [], []
    seen_data = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = _split(line)
        if len(fields) != 2:
            raise ParseError(f"{path}:{lineno}: expected 2 columns, found {len(fields)}")
        if not all(_is_number(f) for f in fields):
            if not seen_data and not xs:
                seen_data = True  # header line
                continue
            raise ParseError(f"{path}:{lineno}: non-numeric value in {line!r}")
        seen_data = True
        xs.append(float(fields[0]))
        ys.append(float(fields[1]))
    if not xs:
        raise ParseError(f"{path}: no numeric rows")
    x, y = np.array(xs), np.array(ys)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DataError(f"{path}: non-finite values")
    return x, y


def _price(token, path, lineno, ticker, date):
    if token.strip().lower() in MISSING_TOKENS:
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: bad price {token!r} for {ticker}") from None
    if not (math.isfinite(value) and value > 0):
        raise DataError(f"non-positive price {token} for {ticker} on {date}")
    return value


def read_panel(path):
    """Parse a price panel.

    Returns
    -------
    dates : list of datetime.date
    prices : dict
        ``ticker -> (open, close)`` float arrays with NaN for missing values.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0].lower() != "date" or len(header) < 3 or len(header) % 2 == 0:
        raise ParseError(f"{path}:1: header must be date,<T>_open,<T>_close,...")
    tickers = []
    for a, b in zip(header[1::2], header[2::2]):
        ta, _, fa = a.rpartition("_")
        tb, _, fb = b.rpartition("_")
        if not ta or ta != tb or fa.lower() != "open" or fb.lower() != "close":
            raise ParseError(f"{path}:1: expected <T>_open,<T>_close, got {a},{b}")
        tickers.append(ta)
    if len(set(tickers)) != len(tickers):
        raise ParseError(f"{path}:1: duplicate ticker")
    dates = []
    opens = {t: [] for t in tickers}
    closes = {t: [] for t in tickers}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
        try:
            date = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise ParseError(f"{path}:{lineno}: bad date {row[0]!r}") from None
        if dates and date <= dates[-1]:
            raise DataError(f"{path}:{lineno}: dates must be strictly increasing ({date})")
        dates.append(date)
        for j, t in enumerate(tickers):
            opens[t].append(_price(row[1 + 2 * j], path, lineno, t, date))
            closes[t].append(_price(row[2 + 2 * j], path, lineno, t, date))
    prices = {t: (np.array(opens[t]), np.array(closes[t])) for t in tickers}
    return dates, prices


def panel_returns(prices, mode="close-open"):
    """Daily log-returns per ticker; NaN marks a missing value.

    ``close-open`` gives ``ln(close / open)`` on each date, ``close-close``
    gives ``ln(close_t / close_{t-1})`` (missing on the first date).
    """
    out = {}
    for t, (o, c) in prices.items():
        if mode == "close-open":
            out[t] = np.log(c / o)
        elif mode == "close-close":
            r = np.full(c.size, math.nan)
            r[1:] = np.log(c[1:] / c[:-1])
            out[t] = r
        else:
            raise UsageError(f"unknown return mode {mode!r}")
    return out


def pairwise_complete(a, b):
    """Observations where both series are present."""
    keep = ~(np.isnan(a) | np.isnan(b))
    return a[keep], b[keep]


# ---------------------------------------------------------------------------
# computations


def _config(args):
    return KsgConfig(k=args.k, transform=args.transform)


def _metadata(args, **extra):
    meta = {"k": args.k, "transform": args.transform, "replicates": args.replicates,
            "level": args.level, "seed": args.seed, "method": args.method,
            "units": "nats"}
    meta.update(extra)
    return meta


def scan_pair(task):
    """One ScanRow for ``(ticker_a, ticker_b, x, y, settings)``."""
    ta, tb, x, y, cfg, replicates, level, seed, method = task
    x, y = pairwise_complete(x, y)
    row = dict.fromkeys(SCAN_COLUMNS)
    row.update(ticker_a=ta, ticker_b=tb, n=int(x.size), skip_reason="")
    if x.size < MIN_OBSERVATIONS:
        row["skip_reason"] = f"fewer than {MIN_OBSERVATIONS} common observations"
        return row
    try:
        rep = fit_t_copula(x, y, cfg, replicates=replicates, level=level, seed=seed,
                           method=method)
    except (DomainError, DegeneracyError, DegenerateInputError) as exc:
        row["skip_reason"] = str(exc)
        return row
    d = rep.to_dict()
    for key in SCAN_COLUMNS[3:-2]:
        row[key] = d[key]
    row["nu_hat_or_gaussian"] = "gaussian" if d["nu_hat"] is None else d["nu_hat"]
    return row


def scan_returns(returns, cfg, replicates=200, level=0.90, seed=1, jobs=1,
                 method="split"):
    """Fit every unordered ticker pair; rows sorted by ``(ticker_a, ticker_b)``.

    Every pair uses the master seed, so a row matches ``fit`` on the same
    pair with the same seed.
    """
    tickers = sorted(returns)
    tasks = [(a, b, returns[a], returns[b], cfg, replicates, level, seed, method)
             for a, b in itertools.combinations(tickers, 2)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(scan_pair, tasks))
    else:
        rows = [scan_pair(t) for t in tasks]
    return sorted(rows, key=lambda r: (r["ticker_a"], r["ticker_b"]))


def _model(rho, nu):
    if nu is None or math.isinf(nu):
        return GaussianCopula(rho)
    return StudentTCopula(rho, nu)


def simulate_runs(rho, nu, n, runs, seed=1, marginals=("uniform", "uniform"), cfg=None):
    """Per-run KSG and tau estimates on simulated copula samples.

    Run ``r`` draws from a generator seeded by ``(seed, r)``.  ``nu=None``
    or ``inf`` selects the Gaussian copula.

    Returns
    -------
    rows : list of dict
    samples : list of (x, y)
    """
    cfg = cfg or KsgConfig()
    model = _model(rho, nu)
    mx, my = (parse_marginal(m) for m in marginals)
    truth = mi_gaussian(rho) if isinstance(model, GaussianCopula) else mi_t(rho, nu)
    rows, samples = [], []
    for r in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), r]))
        u, v = sample_copula(model, n, seed=rng)
        x, y = apply_marginals(u, v, mx, my)
        mi = ksg_mi(x, y, cfg)
        tau = kendall_tau(x, y)
        rows.append({
            "run": r, "n": n, "rho": rho,
            "nu": "inf" if isinstance(model, GaussianCopula) else nu,
            "mi": mi, "tau": tau, "rho_hat": tau_to_rho(tau), "mi_analytic": truth,
            "excess": mi - mi_gaussian(rho), "excess_analytic": truth - mi_gaussian(rho),
        })
        samples.append((x, y))
    return rows, samples


def excess_curve(nu_min, nu_max, steps):
    """``(nu, excess)`` rows on a log-spaced grid."""
    if not (0 < nu_min < nu_max) or steps < 2:
        raise UsageError("need 0 < nu_min < nu_max and steps >= 2")
    grid = np.geomspace(nu_min, nu_max, steps)
    grid[0], grid[-1] = nu_min, nu_max
    return [{"nu": float(nu), "excess": excess_information(nu)} for nu in grid]


# ---------------------------------------------------------------------------
# output


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def emit(rows, fmt, meta, columns=None, single=False, out=None):
    out = out or sys.stdout
    if fmt == "json":
        if single:
            payload = {**{k: _json_value(v) for k, v in rows[0].items()}, **meta}
        else:
            payload = [{**{k: _json_value(v) for k, v in r.items()}, **meta} for r in rows]
        out.write(json.dumps(payload, indent=2) + "\n")
        return
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    for key, val in meta.items():
        buf.write(f"# {key}={_fmt(val)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    out.write(buf.getvalue())


# ---------------------------------------------------------------------------
# commands


def cmd_mi(args):
    x, y = read_pairs(args.pairs)
    est = bootstrap_mi(x, y, _config(args), replicates=args.replicates, level=args.level,
                       seed=args.seed, method=args.method, workers=args.jobs)
    d = est.to_dict()
    d = {"mi": d.pop("value"), **d}
    emit([d], args.format, _metadata(args), single=True)


def cmd_fit(args):
    x, y = read_pairs(args.pairs)
    rep = fit_t_copula(x, y, _config(args), replicates=args.replicates, level=args.level,
                       seed=args.seed, force_nu=args.force_nu, method=args.method,
                       workers=args.jobs)
    emit([rep.to_dict()], args.format, _metadata(args), single=True)


def cmd_scan(args):
    _, prices = read_panel(args.panel)
    if len(prices) < 2:
        raise DataError("a scan needs at least two tickers")
    rows = scan_returns(panel_returns(prices, args.mode), _config(args),
                        replicates=args.replicates, level=args.level, seed=args.seed,
                        jobs=args.jobs, method=args.method)
    emit(rows, args.format, _metadata(args, mode=args.mode), columns=SCAN_COLUMNS)


def _parse_nu(text):
    if text.strip().lower() in ("gaussian", "inf", "infinity"):
        return math.inf
    try:
        nu = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid nu {text!r}") from None
    if not nu > 0:
        raise argparse.ArgumentTypeError("nu must be positive")
    return nu


def _parse_marginals(text):
    parts = text.split("/")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("use SPEC or SPEC_X/SPEC_Y")
    try:
        for p in parts:
            parse_marginal(p)
    except Exception as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return tuple(parts)


def _write_pairs(path, x, y):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y\n")
        for a, b in zip(x, y):
            fh.write(f"{float(a)!r},{float(b)!r}\n")


def cmd_simulate(args):
    if not -1 < args.rho < 1:
        raise UsageError("--rho must lie in (-1, 1)")
    if args.n < args.k + 1 or args.runs < 1:
        raise UsageError("--n must exceed --k and --runs must be positive")
    rows, samples = simulate_runs(args.rho, args.nu, args.n, args.runs, seed=args.seed,
                                  marginals=args.marginals, cfg=_config(args))
    if args.save_pairs:
        for r, (x, y) in enumerate(samples):
            _write_pairs(args.save_pairs.format(run=r), x, y)
    meta = {"k": args.k, "transform": args.transform, "seed": args.seed,
            "marginals": "/".join(args.marginals), "units": "nats"}
    emit(rows, args.format, meta, columns=SIMULATE_COLUMNS)


def cmd_excess_curve(args):
    if args.nu:
        rows = [{"nu": nu, "excess": excess_information(nu)} for nu in args.nu]
    else:
        rows = excess_curve(args.nu_min, args.nu_max, args.steps)
    emit(rows, args.format, {"units": "nats"}, columns=("nu", "excess"))


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _level(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return value


def _estimator_flags(p, bootstrap=True):
    p.add_argument("--k", type=_positive_int, default=3, help="neighbour order (default 3)")
    p.add_argument("--transform", choices=("pseudo", "raw"), default="pseudo",
                   help="estimator input transform (default pseudo)")
    p.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    if bootstrap:
        p.add_argument("--replicates", type=_positive_int, default=200,
                       help="bootstrap replicates (default 200)")
        p.add_argument("--level", type=_level, default=0.90,
                       help="confidence level (default 0.90)")
        p.add_argument("--method", choices=("split", "terms"), default="split",
                       help="bootstrap scheme (default split)")
        p.add_argument("--jobs", type=_positive_int, default=1,
                       help="parallel workers (results do not depend on it)")


def build_parser():
    parser = _Parser(prog="copulainfo", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mi", help="KSG mutual information with bootstrap CI")
    p.add_argument("pairs", help="two-column pair file")
    _estimator_flags(p)
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("fit", help="identify the best-matching T-copula")
    p.add_argument("pairs", help="two-column pair file")
    _estimator_flags(p)
    p.add_argument("--force-nu", action="store_true",
                   help="invert the excess even when Gaussianity is not rejected")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("scan", help="fit every ticker pair of a price panel")
    p.add_argument("panel", help="CSV with date,<T>_open,<T>_close,... columns")
    p.add_argument("--mode", choices=("close-open", "close-close"), default="close-open")
    _estimator_flags(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("simulate", help="KSG and tau on simulated copula samples")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--nu", type=_parse_nu, default=math.inf,
                   help="degrees of freedom, or 'gaussian' (default)")
    p.add_argument("--marginals", type=_parse_marginals, default=("uniform", "uniform"),
                   help="SPEC or SPEC_X/SPEC_Y; SPEC is uniform, gaussian[:mu,sigma], "
                        "t:nu or lognormal[:mu,sigma]")
    p.add_argument("--n", type=_positive_int, default=4700)
    p.add_argument("--runs", type=_positive_int, default=20)
    p.add_argument("--save-pairs", metavar="PATTERN",
                   help="write each run's sample to PATTERN.format(run=r)")
    _estimator_flags(p, bootstrap=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("excess-curve", help="information excess versus nu")
    p.add_argument("--nu-min", type=float, default=0.5)
    p.add_argument("--nu-max", type=float, default=1e6)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--nu", type=_parse_nu, action="append",
                   help="evaluate at this nu instead of a grid (repeatable)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_excess_curve)
    return parser


def _error(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except DomainError as exc:
        return _error("domain", str(exc), EXIT_DOMAIN)
    except (ParseError, DataError, InsufficientDataError, DegenerateInputError,
            DegeneracyError, OSError) as exc:
        kind = "parse" if isinstance(exc, ParseError) else "data"
        return _error(kind, str(exc), EXIT_DATA)
    except ValueError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
