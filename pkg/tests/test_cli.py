import csv
import io
import shutil
import subprocess
import time

import pytest

from tduno.cli import build_parser, main


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def _toy(tmp_path, censored=False):
    c = tmp_path / "c.csv"
    flags = ["1", "0", "1", "1"] if censored else ["1"] * 4
    c.write_text("id,time,event\n" + "".join(f"s{i},{i + 1},{e}\n" for i, e in enumerate(flags)))
    p = tmp_path / "p.csv"
    p.write_text("id,1,2,3,4\ns0,0.5,0.3,0.2,0.1\ns1,0.9,0.6,0.5,0.4\n"
                 "s2,0.7,0.4,0.3,0.2\ns3,0.95,0.9,0.8,0.7\n")
    return str(c), str(p)


def test_td_uno_equals_antolini_without_censoring(tmp_path, capsys):
    c, p = _toy(tmp_path)
    code, out, _ = _run(["evaluate", "--cohort", c, "--predictions", p, "--metric", "td-uno",
                         "--metric", "antolini"], capsys)
    assert code == 0
    rows = _rows(out)
    assert rows[0]["value"] == rows[1]["value"]


def test_epsilon_one_removes_weights(tmp_path, capsys):
    c, p = _toy(tmp_path, censored=True)
    _, out, _ = _run(["evaluate", "--cohort", c, "--predictions", p, "--epsilon", "1"], capsys)
    rows = _rows(out)
    assert rows[0]["metric"] == "antolini" and rows[1]["metric"] == "td_uno"
    assert rows[0]["value"] == rows[1]["value"]


def test_uno_t_constant_on_ph_export(tmp_path, capsys):
    c, p = str(tmp_path / "c.csv"), str(tmp_path / "p.csv")
    assert main(["datagen", "--spec", "sim1", "--n", "300", "--seed", "3", "--out", c,
                 "--emit-oracle", p]) == 0
    code, out, _ = _run(["evaluate", "--cohort", c, "--predictions", p, "--tmax", "11",
                         "--metric", "uno-t", "--t", "1", "--t", "2"], capsys)
    rows = _rows(out)
    assert code == 0 and rows[0]["value"] == rows[1]["value"]


def test_undefined_metric_exits_zero(tmp_path, capsys):
    c = tmp_path / "c.csv"
    c.write_text("id,time,event\na,1,0\nb,2,0\n")
    p = tmp_path / "p.csv"
    p.write_text("id,1\na,0.5\nb,0.4\n")
    code, out, _ = _run(["evaluate", "--cohort", str(c), "--predictions", str(p)], capsys)
    assert code == 0
    assert all(r["undefined"] == "1" for r in _rows(out))


def test_data_error_exit_two(tmp_path, capsys):
    c = tmp_path / "c.csv"
    c.write_text("id,time,event\na,1,2\n")
    code, _, err = _run(["evaluate", "--cohort", str(c), "--predictions", str(c)], capsys)
    assert code == 2 and "line 2" in err


def test_usage_errors_exit_one(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["evaluate", "--unknown-flag"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1
    code, _, _ = _run(["datagen", "--spec", "sim1", "--n", "0", "--seed", "1",
                       "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 1


def test_bad_config_reports_field_path(tmp_path, capsys):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("generator: sim1\ncensoring:\n  kind: weibull\n  levels: ['45%']\n"
                   "  shape: -1\nn_test: 100\nreplications: 2\n")
    code, _, err = _run(["simulate", "--scenario", "custom", "--config", str(cfg)], capsys)
    assert code == 1 and "censoring.shape" in err


def test_simulate_smoke(tmp_path):
    out, summ = tmp_path / "r.csv", tmp_path / "s.csv"
    t0 = time.time()
    assert main(["simulate", "--scenario", "sim1", "--replications", "5", "--n", "200",
                 "--reference-n", "5000", "--out", str(out), "--summary", str(summ)]) == 0
    assert time.time() - t0 < 60
    rows = _rows(out.read_text())
    assert len(rows) == 6 * 5 * 3
    assert {r["level"] for r in rows} == {"0%", "4%", "25%", "45%", "62%", "75%"}
    assert len(_rows(summ.read_text())) == 6 * 3


def test_simulate_sim3_has_period_profile(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["simulate", "--scenario", "sim3", "--replications", "2", "--n", "150",
                 "--reference-n", "0", "--out", str(out)]) == 0
    ts = {r["t"] for r in _rows(out.read_text()) if r["metric"] == "uno_t"}
    assert ts == {repr(float(k)) for k in range(1, 16)}


def test_simulate_byte_identical(tmp_path):
    outs = []
    for k, threads in enumerate(("1", "1", "4")):
        out = tmp_path / f"r{k}.csv"
        main(["simulate", "--scenario", "sim2", "--replications", "3", "--n", "200",
              "--reference-n", "3000", "--seed", "5", "--threads", threads, "--out", str(out),
              "--summary", str(tmp_path / f"s{k}.csv")])
        outs.append((out.read_bytes(), (tmp_path / f"s{k}.csv").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_summarize_command(tmp_path, capsys):
    r = tmp_path / "r.csv"
    r.write_text("scenario,level,replication,metric,t,value,usable_pairs,undefined\n"
                 + "".join(f"s,0%,{i},antolini,,{v},10,0\n" for i, v in enumerate([1, 2, 3, 4, 5])))
    code, out, _ = _run(["summarize", "--in", str(r)], capsys)
    row = _rows(out)[0]
    assert code == 0
    assert (row["median"], row["q1"], row["q3"]) == ("3.0", "2.0", "4.0")


def test_every_flag_has_help():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.choices and "evaluate" in a.choices)
    for name, p in sub.choices.items():
        for action in p._actions:
            assert action.help, (name, action.dest)


@pytest.mark.skipif(shutil.which("tduno") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["tduno", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "evaluate" in res.stdout
