import csv
import io
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from copulainfo.cli import (
    EXIT_DATA,
    EXIT_DOMAIN,
    EXIT_OK,
    EXIT_USAGE,
    DataError,
    ParseError,
    main,
    pairwise_complete,
    panel_returns,
    read_pairs,
    read_panel,
    scan_returns,
)
from copulainfo.copula import (
    GaussianCopula,
    StudentTCopula,
    excess_information,
    mi_gaussian,
    sample_copula,
)
from copulainfo.ksg import KsgConfig

LN8PI_MINUS_3 = 0.22417142752923610


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def write_pairs(path, x, y, header=True):
    with open(path, "w") as fh:
        if header:
            fh.write("x,y\n")
        for a, b in zip(x, y):
            fh.write(f"{float(a)!r},{float(b)!r}\n")
    return path


def write_panel(path, series, missing=()):
    """Panel whose close-open log-return for ticker t on row i is series[t][i]."""
    tickers = sorted(series)
    n = len(next(iter(series.values())))
    with open(path, "w") as fh:
        fh.write("date," + ",".join(f"{t}_open,{t}_close" for t in tickers) + "\n")
        for i in range(n):
            date = np.datetime64("2020-01-01") + i
            cells = []
            for t in tickers:
                close = "NA" if (t, i) in missing else repr(100 * math.exp(series[t][i]))
                cells += ["100", close]
            fh.write(f"{date}," + ",".join(cells) + "\n")
    return path


# --- ingestion ----------------------------------------------------------------

def test_read_pairs_formats(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("# comment\nx y\n1 2\n\n3.5   -4\n")
    x, y = read_pairs(p)
    assert_allclose(x, [1, 3.5])
    assert_allclose(y, [2, -4])


@pytest.mark.parametrize("content, match", [
    ("1\n2\n3\n", ":1: expected 2 columns"),
    ("1,2\n3,abc\n", ":2: non-numeric"),
    ("x,y\n", "no numeric rows"),
])
def test_read_pairs_errors_name_line(tmp_path, content, match):
    p = tmp_path / "bad.csv"
    p.write_text(content)
    with pytest.raises(ParseError, match=match):
        read_pairs(p)


def test_panel_log_returns(tmp_path):
    p = tmp_path / "panel.csv"
    p.write_text("date,A_open,A_close,B_open,B_close\n"
                 "2021-01-04,100,110,50,50\n"
                 "2021-01-05,110,NA,50,55\n")
    dates, prices = read_panel(p)
    r = panel_returns(prices)
    assert_allclose(r["A"][0], 0.0953101798, atol=1e-10)
    assert r["B"][0] == 0.0
    assert math.isnan(r["A"][1])
    a, b = pairwise_complete(r["A"], r["B"])
    assert a.size == b.size == 1
    cc = panel_returns(prices, "close-close")
    assert math.isnan(cc["A"][0])
    assert_allclose(cc["B"][1], math.log(1.1))


@pytest.mark.parametrize("body, exc, match", [
    ("date,A_open,A_close\n2021-01-04,100,-1\n", DataError, "A on 2021-01-04"),
    ("date,A_open,A_close\n2021-01-04,0,1\n", DataError, "A on 2021-01-04"),
    ("date,A_open,A_close\n2021-01-04,1\n", ParseError, ":2:"),
    ("date,A_open,A_close\n04/01/2021,1,2\n", ParseError, ":2: bad date"),
    ("date,A_open,A_shut\n", ParseError, ":1:"),
    ("date,A_open,A_close\n2021-01-05,1,2\n2021-01-04,1,2\n", DataError, "increasing"),
])
def test_panel_errors(tmp_path, body, exc, match):
    p = tmp_path / "panel.csv"
    p.write_text(body)
    with pytest.raises(exc, match=match):
        read_panel(p)


# --- commands -------------------------------------------------------------------

def test_one_column_file_is_parse_error(tmp_path, capsys):
    p = tmp_path / "one.csv"
    p.write_text("1\n2\n3\n")
    code, out, err = run(capsys, "mi", p)
    assert code == EXIT_DATA != EXIT_OK
    obj = json.loads(err)
    assert obj["error"] == "parse" and obj["exit_code"] == EXIT_DATA
    assert out == ""


def test_missing_file_is_data_error(tmp_path, capsys):
    code, _, err = run(capsys, "fit", tmp_path / "nope.csv")
    assert code == EXIT_DATA
    assert json.loads(err)["error"] == "data"


def test_usage_errors(capsys):
    assert run(capsys, "simulate", "--rho", 1.5, "--runs", 1)[0] == EXIT_USAGE
    assert run(capsys, "mi")[0] == EXIT_USAGE
    code, _, err = run(capsys, "bogus")
    assert code == EXIT_USAGE
    assert json.loads(err)["error"] == "usage"


def test_below_floor_is_data_error(tmp_path, capsys):
    u, v = sample_copula(GaussianCopula(0.2), 50, seed=1)
    p = write_pairs(tmp_path / "small.csv", u, v)
    code, _, err = run(capsys, "fit", p, "--replicates", 5)
    assert code == EXIT_DATA
    assert "100" in json.loads(err)["message"]


def test_mi_independent_pair_file(tmp_path, capsys):
    rng = np.random.default_rng(3)
    p = write_pairs(tmp_path / "ind.csv", rng.normal(size=2000), rng.lognormal(size=2000))
    code, out, _ = run(capsys, "mi", p, "--replicates", 100, "--format", "json")
    assert code == EXIT_OK
    d = json.loads(out)
    assert d["ci_low"] <= 0.0 <= d["ci_high"]
    assert d["units"] == "nats" and d["k"] == 3


def test_fit_t_pair_file(tmp_path, capsys):
    u, v = sample_copula(StudentTCopula(0.5, 2.0), 3000, seed=5)
    p = write_pairs(tmp_path / "t.csv", u, v, header=False)
    code, out, _ = run(capsys, "fit", p, "--replicates", 80, "--format", "json")
    assert code == EXIT_OK
    d = json.loads(out)
    assert d["nu_hat"] is not None and math.isfinite(d["nu_hat"])
    assert d["verdict"] == "student-t"


def test_csv_output_has_metadata_and_header(tmp_path, capsys):
    u, v = sample_copula(GaussianCopula(0.3), 400, seed=6)
    p = write_pairs(tmp_path / "g.csv", u, v)
    code, out, _ = run(capsys, "mi", p, "--replicates", 10, "--seed", 4)
    assert code == EXIT_OK
    meta = [l for l in out.splitlines() if l.startswith("#")]
    assert "# seed=4" in meta and "# units=nats" in meta
    (row,) = csv_rows(out)
    assert float(row["ci_low"]) <= float(row["mi"]) <= float(row["ci_high"])


def test_jobs_do_not_change_output(tmp_path, capsys):
    u, v = sample_copula(StudentTCopula(0.4, 5.0), 600, seed=7)
    p = write_pairs(tmp_path / "j.csv", u, v)
    one = run(capsys, "fit", p, "--replicates", 20)[1]
    two = run(capsys, "fit", p, "--replicates", 20, "--jobs", 2)[1]
    assert one == two


@pytest.fixture(scope="module")
def panel(tmp_path_factory):
    n = 4000
    a, b = sample_copula(StudentTCopula(0.5, 4.0), n, seed=17)
    rng = np.random.default_rng(18)
    # logit returns: a strictly increasing map keeps the copula
    series = {"AAA": 0.02 * np.log(a / (1 - a)), "BBB": 0.01 * np.log(b / (1 - b)),
              "CCC": 0.015 * rng.normal(size=n)}
    path = write_panel(tmp_path_factory.mktemp("p") / "panel.csv", series,
                       missing={("CCC", 3), ("AAA", 10)})
    return path, series


def test_scan_three_tickers(panel, capsys):
    path, _ = panel
    code, out, _ = run(capsys, "scan", path, "--replicates", 60)
    assert code == EXIT_OK
    rows = csv_rows(out)
    assert [(r["ticker_a"], r["ticker_b"]) for r in rows] == [("AAA", "BBB"), ("AAA", "CCC"),
                                                               ("BBB", "CCC")]
    ab, ac, bc = rows
    assert int(ab["n"]) == 3999 and int(ac["n"]) == 3998 and int(bc["n"]) == 3999
    assert float(ab["excess_ci_low"]) > 0
    assert ab["nu_hat_or_gaussian"] != "gaussian"


def test_scan_row_matches_fit(panel, tmp_path, capsys):
    path, _ = panel
    _, prices = read_panel(path)
    r = panel_returns(prices)
    x, y = pairwise_complete(r["AAA"], r["BBB"])
    p = write_pairs(tmp_path / "ab.csv", x, y)
    fit = json.loads(run(capsys, "fit", p, "--replicates", 30, "--format", "json")[1])
    scan = json.loads(run(capsys, "scan", path, "--replicates", 30, "--format", "json")[1])
    row = scan[0]
    for key in ("tau", "rho_hat", "mi", "ci_low", "ci_high", "excess", "excess_lower"):
        assert row[key] == fit[key]


def test_scan_parallel_matches_serial(panel):
    _, prices = read_panel(panel[0])
    r = panel_returns(prices)
    serial = scan_returns(r, KsgConfig(), replicates=10, jobs=1)
    parallel = scan_returns(r, KsgConfig(), replicates=10, jobs=2)
    assert serial == parallel


def test_scan_skips_pairs_below_floor(tmp_path, capsys):
    rng = np.random.default_rng(2)
    path = write_panel(tmp_path / "short.csv", {"X": rng.normal(size=60), "Y": rng.normal(size=60)})
    code, out, _ = run(capsys, "scan", path, "--replicates", 5, "--format", "json")
    assert code == EXIT_OK
    (row,) = json.loads(out)
    assert "100" in row["skip_reason"]
    assert row["mi"] is None


def test_simulate_is_deterministic(capsys):
    args = ("simulate", "--rho", 0.5, "--nu", 4, "--n", 500, "--runs", 3, "--seed", 11)
    a = run(capsys, *args)
    b = run(capsys, *args)
    assert a[0] == EXIT_OK and a[1] == b[1]
    rows = csv_rows(a[1])
    assert [int(r["run"]) for r in rows] == [0, 1, 2]
    assert_allclose(float(rows[0]["excess_analytic"]), excess_information(4.0), rtol=1e-12)


def test_simulate_independent_mean_near_zero(capsys):
    code, out, _ = run(capsys, "simulate", "--rho", 0, "--nu", "gaussian", "--n", 2000,
                       "--runs", 20, "--marginals", "lognormal:0,1/t:3", "--format", "json")
    assert code == EXIT_OK
    assert abs(np.mean([r["mi"] for r in json.loads(out)])) <= 0.02


def test_simulate_excess_matches_closed_form(capsys):
    code, out, _ = run(capsys, "simulate", "--rho", 0.5, "--nu", 4, "--n", 4700, "--runs", 20,
                       "--marginals", "lognormal", "--format", "json")
    gaps = np.array([r["mi"] for r in json.loads(out)]) - mi_gaussian(0.5)
    se = gaps.std(ddof=1) / math.sqrt(gaps.size)
    assert abs(gaps.mean() - excess_information(4.0)) <= 3 * se


def test_simulate_save_pairs_round_trip(tmp_path, capsys):
    pattern = str(tmp_path / "run{run}.csv")
    run(capsys, "simulate", "--rho", 0.3, "--n", 200, "--runs", 2, "--save-pairs", pattern)
    x, y = read_pairs(tmp_path / "run1.csv")
    assert x.size == 200


def test_excess_curve(capsys):
    code, out, _ = run(capsys, "excess-curve", "--nu", 1, "--format", "json")
    assert code == EXIT_OK
    assert_allclose(json.loads(out)[0]["excess"], LN8PI_MINUS_3, rtol=1e-12)
    rows = json.loads(run(capsys, "excess-curve", "--steps", 40, "--format", "json")[1])
    nus = [r["nu"] for r in rows]
    vals = [r["excess"] for r in rows]
    assert_allclose([nus[0], nus[-1]], [0.5, 1e6])
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-5


def test_excess_curve_bad_range(capsys):
    assert run(capsys, "excess-curve", "--nu-min", 5, "--nu-max", 2)[0] == EXIT_USAGE
