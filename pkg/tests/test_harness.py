import io
import math

import numpy as np
import pytest

from megflood import harness
from megflood.harness import (
    CSV_COLUMNS,
    ConfigError,
    emit_plot_data,
    evaluate,
    fit_power_law,
    fit_scaling,
    parse_config,
    read_csv,
    run_sweep,
    split_list,
    write_csv,
)

GEO = """[experiment]
model = geometric
seeds = {seeds}
master_seed = 5
wall_clock = false

[grid]
n = {n}
R = auto
r = 0.5 * R
"""


def csv_text(rows):
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def test_expressions():
    assert evaluate("3*sqrt(log(n))", {"n": math.e ** 4}) == pytest.approx(6)
    assert evaluate("-2**2 + max(1, 3) // 2", {}) == -3
    for bad in ("__import__('os')", "n.real", "[1]", "x"):
        with pytest.raises(ValueError):
            evaluate(bad, {"n": 1})
    assert split_list("1, max(2, 3), 4") == ["1", "max(2, 3)", "4"]


def test_config_points_and_ini_roundtrip():
    cfg = parse_config(GEO.format(seeds=2, n="100, 400"))
    pts = cfg.points()
    assert [p.n for p in pts] == [100, 400]
    assert pts[0].R == pytest.approx(3 * math.sqrt(math.log(100)))
    assert pts[1].r == pytest.approx(pts[1].R / 2)
    again = parse_config(cfg.to_ini())
    assert again.points() == pts and again.seeds == 2 and again.master_seed == 5


def test_edge_config_with_p_hat():
    cfg = parse_config("[experiment]\nmodel = edge\n[grid]\nn = 1024\np_hat = 8*log(n)/n\nq = 0.5, 0.25\n")
    pts = cfg.points()
    assert len(pts) == 2
    assert pts[0].p_hat == pytest.approx(8 * math.log(1024) / 1024)


@pytest.mark.parametrize(
    "text,where",
    [
        ("[experiment]\nmodel = ring\n[grid]\nn = 10\n", "<config>:2: [experiment] model"),
        ("[experiment]\nmodel = edge\nseeds = 0\n[grid]\nn = 10\nq=0.1\np=0.1\n", "seeds"),
        ("[experiment]\nmodel = edge\n[grid]\nn = 10\nq = 0.1\n", "[grid] p"),
        ("[experiment]\nmodel = geometric\n[grid]\nn = 10\nR = 2\nr = 1\nq = 3\n", "<config>:7: [grid] q"),
        ("[experiment]\nmodel = geometric\nbogus = 1\n[grid]\nn = 10\nR = 2\nr = 1\n", "<config>:3: [experiment] bogus"),
        ("[experiment]\nmodel = geometric\n[grid]\nn = 10\nR = 2*Z\nr = 1\n", "<config>:5: [grid] R"),
        ("[experiment]\nmodel = geometric\n[extra]\n", "unknown section"),
        ("[grid]\nn = 3\n", "missing [experiment]"),
        ("[experiment]\nmodel = geometric\nseeds = two\n[grid]\nn=1\nR=1\nr=1\n", "<config>:3: [experiment] seeds"),
    ],
)
def test_config_errors_name_their_location(text, where):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert where in str(exc.value)


def test_single_point_is_deterministic():
    cfg = parse_config(GEO.format(seeds=1, n=400))
    a, b = run_sweep(cfg), run_sweep(cfg)
    assert len(a.rows) == 1 and csv_text(a.rows) == csv_text(b.rows)
    assert a.exit_code == 0


def test_invalid_point_is_skipped():
    text = "[experiment]\nmodel = geometric\nseeds = 3\n[grid]\nn = 400\nR = 4, 30\nr = 1\n"
    res = run_sweep(parse_config(text))
    assert len(res.skipped) == 1 and "exceeds" in res.skipped[0][1]
    assert len(res.rows) == 3 and res.exit_code == 0


def test_adding_grid_points_keeps_existing_seeds():
    small = run_sweep(parse_config(GEO.format(seeds=2, n="256")))
    big = run_sweep(parse_config(GEO.format(seeds=2, n="100, 256")))
    assert csv_text(small.rows).splitlines()[1:] == csv_text(big.rows).splitlines()[3:]


def test_threads_do_not_change_output():
    cfg = parse_config(GEO.format(seeds=3, n="100, 256"))
    assert csv_text(run_sweep(cfg, threads=1).rows) == csv_text(run_sweep(cfg, threads=3).rows)


def test_per_run_failure_gives_partial_exit():
    text = "[experiment]\nmodel = edge\nsource = 0, 50\n[grid]\nn = 20\np = 0.1\nq = 0.1\n"
    res = run_sweep(parse_config(text))
    assert res.exit_code == 2 and len(res.failures) == 1


def test_csv_roundtrip_and_format():
    text = "[experiment]\nmodel = edge\nseeds = 2\nlazy = true\n[grid]\nn = 60\np_hat = 0.1\nq = 0.5\n"
    res = run_sweep(parse_config(text))
    out = csv_text(res.rows)
    lines = out.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    fields = lines[1].split(",")
    assert fields[0] == "edge" and fields[2:6] == ["", "", "", ""] and fields[12:14] == ["NA", "NA"]
    back = read_csv(io.StringIO(out))
    assert csv_text(back) == out
    with pytest.raises(ValueError):
        read_csv(io.StringIO("a,b\n1,2\n"))


def test_incomplete_run_written_as_inf():
    row = dict.fromkeys(CSV_COLUMNS)
    row.update(model="edge", n=3, p=0.1, q=0.1, seed=1, source=0, T=None, completed=False, steps=10)
    line = csv_text([row]).splitlines()[1].split(",")
    assert line[10] == "inf" and line[11] == "0"
    assert read_csv(io.StringIO(csv_text([row])))[0]["T"] is None


def test_fit_exact_power_law():
    x = np.array([2.0, 5.0, 11.0, 30.0])
    fit = fit_power_law(x, 2.0 * x)
    assert abs(fit.exponent - 1) < 1e-9 and abs(fit.coefficient - 2) < 1e-9 and fit.r2 == pytest.approx(1)
    fit = fit_power_law(x, 0.7 * x ** 1.6)
    assert abs(fit.exponent - 1.6) < 1e-9 and abs(fit.coefficient - 0.7) < 1e-9
    flat = fit_power_law(x, np.full(4, 5.0))
    assert abs(flat.exponent) < 1e-9 and 0 <= flat.r2 <= 1
    with pytest.raises(ValueError):
        fit_power_law([1.0, 1.0, 2.0], [1.0, 2.0, 3.0])


def test_fit_scaling_on_rows():
    rows = []
    for n, R in [(1024, 8.0), (4096, 8.0), (16384, 8.0)]:
        for k in range(3):
            rows.append({"n": n, "R": R, "T": int(2 * math.sqrt(n) / R) + k - 1, "completed": True})
    rows.append({"n": 99, "R": 1.0, "T": None, "completed": False})
    fit = fit_scaling(rows, "sqrt(n)/R")
    assert fit.exponent == pytest.approx(1.0) and fit.coefficient == pytest.approx(2.0)
    assert fit_scaling(rows, "sqrt(n)/R", aggregate=None).x.size == 9


def test_plot_data():
    rows = [
        {"model": "geometric", "n": 100, "R": 2.0, "T": 3, "completed": True},
        {"model": "geometric", "n": 100, "R": 2.0, "T": 5, "completed": True},
        {"model": "geometric", "n": 400, "R": 2.0, "T": 7, "completed": True},
        {"model": "geometric", "n": 100, "R": 3.0, "T": 2, "completed": True},
    ]
    text = emit_plot_data(rows, "n", "median(T)", ["R"])
    lines = [l.split("\t") for l in text.splitlines()]
    assert lines[0] == ["R", "n", "median(T)"]
    assert lines[1:] == [["2.0", "100", "4.0"], ["2.0", "400", "7.0"], ["3.0", "100", "2.0"]]
    assert all(len(l) == 3 for l in lines)
    assert emit_plot_data([], "n", "T") == "n\tT\n"
    with pytest.raises(ValueError):
        emit_plot_data(rows, "nodes", "T")
    with pytest.raises(ValueError):
        emit_plot_data(rows, "n", "mode(T)")


def test_auto_max_steps_floor():
    pt = parse_config(GEO.format(seeds=1, n=1024)).points()[0]
    assert harness.auto_max_steps(pt) >= 1000
