import json
import subprocess
import sys

import numpy as np
import pytest

from partret import load_csv
from partret.cli import main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def body(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


@pytest.fixture
def ex1(tmp_path, capsys):
    p = tmp_path / "ex1.csv"
    assert run(["simulate", "--example", 1, "--n", 200, "--seed", 3, "--out", p], capsys)[0] == 0
    return p


def test_simulate_round_trip(ex1, capsys):
    d = load_csv(ex1, "Y")
    assert (d.n, d.S) == (200, 6)
    code, out, _ = run(["simulate", "--example", 1, "--n", 200, "--seed", 3], capsys)
    assert code == 0 and out == ex1.read_text()


def test_marginal(ex1, capsys):
    code, out, _ = run(["marginal", "--in", ex1, "--methods", "t,i1"], capsys)
    assert code == 0
    rows = body(out)
    assert rows[0].split("\t") == ["variable", "t_score", "t_rank", "i1_score", "i1_rank"]
    assert len(rows) == 7
    assert out.startswith("# partret marginal\n# config: {")


def test_marginal_chi2_on_continuous_is_usage_error(ex1, capsys):
    assert run(["marginal", "--in", ex1, "--methods", "chi2"], capsys)[0] == 2


def test_marginal_chi2_on_labels(tmp_path, capsys):
    p = tmp_path / "cc.csv"
    p.write_text("Y,A,B\n" + "".join(f"{i % 2},{(i // 2) % 2},{i % 3}\n" for i in range(40)))
    code, out, _ = run(["marginal", "--in", p, "--methods", "chi2", "--no-normalize"], capsys)
    assert code == 0 and len(body(out)) == 3


def test_pairs(ex1, capsys):
    code, out, _ = run(["pairs", "--in", ex1, "--top", 4], capsys)
    assert code == 0
    assert "var_a\tvar_b\tI" in out
    assert "variable\ti2_rank\ti2f_count\ti2f_rank" in out


def test_pairs_needs_two_variables(tmp_path, capsys):
    p = tmp_path / "one.csv"
    p.write_text("Y,A\n1,0\n2,1\n3,1\n")
    assert run(["pairs", "--in", p], capsys)[0] == 2


def test_screen_deterministic_across_workers(ex1, capsys):
    outs = []
    for w in (1, 2, 4):
        code, out, _ = run(["screen", "--in", ex1, "--seed", 7, "--m", 4, "--ns", 5000,
                            "--workers", w], capsys)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1] == outs[2]
    assert body(outs[0])[0].split("\t") == ["variable", "sampled", "retained", "rate", "rank"]


def test_screen_trace(ex1, tmp_path, capsys):
    out = tmp_path / "s.tsv"
    assert run(["screen", "--in", ex1, "--seed", 1, "--m", 3, "--ns", 50, "--trace", 3,
                "--out", out], capsys)[0] == 0
    traces = json.loads((tmp_path / "s.tsv.trace.json").read_text())
    assert len(traces) == 3 and all("stopping_i" in t for t in traces)


def test_usage_errors(ex1, capsys):
    assert run(["screen", "--in", ex1, "--m", 3], capsys)[0] == 2
    assert run(["screen", "--seed", 1], capsys)[0] == 2
    assert run(["screen", "--in", ex1, "--example", 1, "--seed", 1], capsys)[0] == 2
    assert run(["bogus"], capsys)[0] == 2
    assert run(["resuscitate", "--in", ex1, "--seed", 1, "--stages", "3:x"], capsys)[0] == 2


def test_data_and_infeasible_errors(tmp_path, ex1, capsys):
    code, _, err = run(["marginal", "--in", tmp_path / "missing.csv", "--json-errors"], capsys)
    assert code == 3
    assert json.loads(err)["exit_code"] == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("Y,A\n1,0\n2,x\n")
    assert run(["marginal", "--in", bad], capsys)[0] == 3
    code, _, err = run(["screen", "--in", ex1, "--seed", 1, "--m", 9, "--json-errors"], capsys)
    assert code == 4 and json.loads(err)["error"] == "InfeasibleConfig"


def test_config_file_and_flag_precedence(ex1, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"in={ex1}\nseed=5\nm=3\nns=400\n")
    code, a, _ = run(["screen", "--config", cfg], capsys)
    assert code == 0
    _, b, _ = run(["screen", "--in", ex1, "--seed", 5, "--m", 3, "--ns", 400], capsys)
    assert body(a) == body(b)
    _, c, _ = run(["screen", "--config", cfg, "--ns", 300], capsys)
    assert '"ns": 300' in c
    cfg.write_text("bogus=1\n")
    assert run(["screen", "--config", cfg], capsys)[0] == 2


def test_resuscitate(ex1, capsys):
    code, out, _ = run(["resuscitate", "--in", ex1, "--seed", 2, "--m", 3,
                        "--stages", "3:2:400,4:2:400"], capsys)
    assert code == 0
    assert "variable\tinitial_rank\tud1_rank\tud2_rank" in out
    assert "# table: ud2" in out


def test_resuscitate_from_ranking_file(ex1, tmp_path, capsys):
    rk = tmp_path / "rk.tsv"
    rk.write_text("variable\tscore\trank\n" + "".join(
        f"X{i}\t{7 - i}\t{i}\n" for i in range(1, 7)))
    code, out, _ = run(["resuscitate", "--in", ex1, "--seed", 2, "--m", 3,
                        "--initial-ranking", rk, "--stages", "3:1:200"], capsys)
    assert code == 0
    assert run(["resuscitate", "--in", ex1, "--seed", 2, "--m", 3,
                "--stages", "9:1:200"], capsys)[0] == 4


def test_fdr(ex1, tmp_path, capsys):
    out = tmp_path / "f.tsv"
    code, _, _ = run(["fdr", "--in", ex1, "--seed", 2, "--m", 3, "--ns", 400,
                      "--permutations", 3, "--alpha", 0.3, "--out", out], capsys)
    assert code == 0
    assert body(out.read_text())[0] == "threshold\tM1\tp0_median\tfdr\tfdr_capped"
    sel = json.loads((tmp_path / "f.tsv.selection.json").read_text())
    assert set(sel) == {"alpha", "threshold", "selected"}
    assert run(["fdr", "--in", ex1, "--seed", 2, "--alpha", 1.5], capsys)[0] == 2


def test_report(tmp_path, capsys):
    rk = tmp_path / "rk.tsv"
    rk.write_text("# comment\nvariable\tscore\trank\nA\t3\t1\nB\t2\t2\nC\t1\t3\n")
    q = tmp_path / "q.txt"
    q.write_text("B\nC\n")
    code, out, _ = run(["report", "--ranking", rk, "--qualified", q], capsys)
    assert code == 0
    assert body(out) == ["retained\tqualified_fraction", "1\t0.0", "2\t0.5", "3\t1.0"]
    q.write_text("")
    assert run(["report", "--ranking", rk, "--qualified", q], capsys)[0] == 3


def test_json_format(ex1, capsys):
    code, out, _ = run(["screen", "--in", ex1, "--seed", 1, "--m", 3, "--ns", 100,
                        "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["command"] == "screen" and len(doc["ranking"]) == 6


def test_help_documents_columns():
    r = subprocess.run([sys.executable, "-m", "partret", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "variable, sampled, retained, rate, rank" in r.stdout
    assert "upper bin" in r.stdout
