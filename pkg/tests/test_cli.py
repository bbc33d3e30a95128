import json

import pytest

from megflood.cli import main
from megflood.core import Snapshot
from megflood.harness import load_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_flood_smallest_edge_instance(capsys):
    code, out, _ = run(capsys, "flood", "--model", "edge", "--n", "2", "--p", "0.5", "--q", "0.5", "--seed", "7")
    assert code == 0
    assert out.startswith("# model=edge n=2 p=0.5 q=0.5 p_hat=0.5 seed=7")
    T = int(out.split("T=")[1].split()[0])
    assert T >= 1
    traj = out.split("trajectory: ")[1].split()
    assert traj[0] == "1" and traj[-1] == "2" and len(traj) == T + 1


@pytest.mark.parametrize(
    "argv,flag",
    [
        (["flood", "--n", "2", "--p", "0.5", "--q", "0.5"], "--model"),
        (["flood", "--model", "edge", "--p", "0.5", "--q", "0.5"], "--n"),
        (["flood", "--model", "edge", "--n", "2", "--p", "0.5"], "--q"),
        (["flood", "--model", "geometric", "--n", "100", "--R", "3"], "--r"),
    ],
)
def test_missing_flag_is_named(capsys, argv, flag):
    code, _, err = run(capsys, *argv)
    assert code == 1 and flag in err


def test_invalid_params_exit_1(capsys):
    code, _, err = run(capsys, "flood", "--model", "edge", "--n", "5", "--p", "1.5", "--q", "0.5")
    assert code == 1 and "between 0 and 1" in err


def test_flood_geometric_auto(capsys):
    code, out, _ = run(capsys, "flood", "--model", "geometric", "--n", "4096", "--R", "auto", "--r", "0", "--seed", "1")
    assert code == 0
    banner = out.splitlines()[0]
    assert "R=8.65216" in banner and "max_steps=" in banner
    T = int(out.split("T=")[1].split()[0])
    assert 1 <= T <= int(banner.split("max_steps=")[1].split()[0])


def test_flood_not_completed_prints_infinity(capsys):
    code, out, _ = run(capsys, "flood", "--model", "geometric", "--n", "100", "--R", "1.01", "--r", "0")
    assert code == 0 and "T=∞ (not completed" in out


def test_flood_is_reproducible_and_matches_sweep_rows(capsys, tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\nmodel = geometric\nseeds = 2\nmaster_seed = 3\n[grid]\nn = 256\nR = auto\nr = 1\n")
    out_csv = tmp_path / "rows.csv"
    code, _, _ = run(capsys, "sweep", "--config", str(cfg), "--out", str(out_csv))
    assert code == 0
    for row in load_csv(out_csv):
        code, out, _ = run(capsys, "flood", "--config", str(cfg), "--seeds", "1",
                           "--seed", str(row["seed"]), "--source", str(row["source"]))
        assert f"T={row['T']} " in out
        again = run(capsys, "flood", "--config", str(cfg), "--seeds", "1",
                    "--seed", str(row["seed"]), "--source", str(row["source"]))[1]
        assert out == again


def test_flood_all_sources_reports_max(capsys):
    code, out, _ = run(capsys, "flood", "--model", "edge", "--n", "12", "--p-hat", "0.3", "--q", "0.5", "--source", "all")
    assert code == 0 and "max T=" in out and "runs=12" in out


def test_print_config_roundtrips(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", "--model", "edge", "--n", "64,128", "--p-hat", "8*log(n)/n", "--q", "0.5",
                       "--seeds", "2", "--seed", "9", "--print-config")
    assert code == 0 and "[grid]" in out and "p_hat = 8*log(n)/n" in out
    f = tmp_path / "c.ini"
    f.write_text(out)
    code, out2, _ = run(capsys, "sweep", "--config", str(f), "--print-config")
    assert out2 == out


def test_flags_override_config(capsys, tmp_path):
    f = tmp_path / "c.ini"
    f.write_text("[experiment]\nmodel = edge\nseeds = 4\n[grid]\nn = 30\np = 0.1\nq = 0.2\n")
    code, out, _ = run(capsys, "sweep", "--config", str(f), "--n", "40", "--p-hat", "0.5", "--print-config")
    assert "n = 40" in out and "p_hat = 0.5" in out and "\np = " not in out and "seeds = 4" in out


def test_sweep_is_byte_identical(capsys, tmp_path):
    f = tmp_path / "c.ini"
    f.write_text("[experiment]\nmodel = edge\nseeds = 3\nmaster_seed = 1\n[grid]\nn = 40, 80\np_hat = 0.2\nq = 0.3\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "sweep", "--config", str(f), "--out", str(a), "--no-wall-clock")[0] == 0
    assert run(capsys, "sweep", "--config", str(f), "--out", str(b), "--no-wall-clock")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 7


def test_sweep_config_error_exit_1(capsys, tmp_path):
    f = tmp_path / "bad.ini"
    f.write_text("[experiment]\nmodel = edge\nseeds = x\n[grid]\nn = 4\np = .1\nq = .1\n")
    code, _, err = run(capsys, "sweep", "--config", str(f))
    assert code == 1 and f"{f}:3" in err
    code, _, err = run(capsys, "sweep", "--config", str(tmp_path / "missing.ini"))
    assert code == 1


def test_sweep_partial_failure_exit_2(capsys, tmp_path):
    code, out, err = run(capsys, "sweep", "--model", "edge", "--n", "10", "--p", "0.3", "--q", "0.3", "--source", "3,99")
    assert code == 2 and "failed" in err


def test_audit_edge_lists(capsys, tmp_path):
    k8 = tmp_path / "k8.txt"
    k8.write_text(Snapshot.complete(8).to_edge_list())
    code, out, _ = run(capsys, "audit", "--edges", str(k8), "--h", "4", "--k", "1", "--exact")
    assert code == 0 and json.loads(out)["verdict"] == "pass"
    empty = tmp_path / "e8.txt"
    empty.write_text("# n=8\n")
    code, out, _ = run(capsys, "audit", "--edges", str(empty), "--h", "1", "--k", "0.5", "--exact")
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "fail" and len(rep["witness"]) == 1


def test_audit_budget_exceeded(capsys, tmp_path):
    k = tmp_path / "k40.txt"
    k.write_text(Snapshot.complete(40).to_edge_list())
    code, _, err = run(capsys, "audit", "--edges", str(k), "--h", "20", "--k", "1", "--exact")
    assert code == 1 and "--sampled" in err
    code, out, _ = run(capsys, "audit", "--edges", str(k), "--h", "20", "--k", "1", "--sampled", "200")
    assert code == 0 and json.loads(out)["minRatio"] == 1.0


def test_audit_paper_schedule_sampled(capsys, tmp_path):
    dest = tmp_path / "audit.json"
    code, out, _ = run(capsys, "audit", "--model", "edge", "--n", "500", "--p-hat", "0.05", "--q", "0.5",
                       "--seed", "1", "--schedule", "paper", "--sampled", "10000", "--out", str(dest))
    rep = json.loads(out)
    assert code == 0 and rep["mode"] == "sampled" and rep["samples"] == 10000
    assert [r["regime"] for r in rep["regimes"]] == [1, 2]
    assert all("minRatio" in r for r in rep["regimes"])
    assert json.loads(dest.read_text()) == rep
    code, out, _ = run(capsys, "audit", "--model", "geometric", "--n", "900", "--R", "auto", "--r", "1",
                       "--seed", "2", "--schedule", "paper", "--sampled", "500")
    assert code == 0 and json.loads(out)["schedule"].startswith("geometric")


def test_fit_and_plot_data(capsys, tmp_path):
    f = tmp_path / "c.ini"
    f.write_text("[experiment]\nmodel = geometric\nseeds = 3\n[grid]\nn = 256, 1024, 4096\nR = auto\nr = R/2\n")
    csvp = tmp_path / "r.csv"
    assert run(capsys, "sweep", "--config", str(f), "--out", str(csvp))[0] == 0
    code, out, _ = run(capsys, "fit", "--csv", str(csvp), "--predictor", "sqrt(n)/R")
    fit = json.loads(out)
    assert code == 0 and fit["points"] == 3 and 0 <= fit["r2"] <= 1
    code, out, _ = run(capsys, "plot-data", "--csv", str(csvp), "--x", "n", "--y", "median(T)", "--group-by", "R")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "R\tn\tmedian(T)" and len(lines) == 4
    assert all(len(l.split("\t")) == 3 for l in lines)
