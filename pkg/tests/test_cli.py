import csv
import io
import json

import pytest

from omnitest.cli import main
from omnitest.persistence import load_null_table
from omnitest.stats_math import chi_square_sf


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO("".join(l for l in text.splitlines(True) if not l.startswith("#")))))


@pytest.fixture
def pfile(tmp_path):
    def make(text):
        path = tmp_path / "p.txt"
        path.write_text(text)
        return path

    return make


def test_bonferroni_simes(capsys, pfile):
    code, out, err = run(capsys, "test", pfile("0.04\n0.06\n"), "--method", "bonferroni", "--method", "simes")
    assert code == 0
    rows = {r["method"]: r for r in rows_of(out)}
    assert float(rows["bonferroni"]["p_value"]) == pytest.approx(0.08)
    assert float(rows["simes"]["p_value"]) == pytest.approx(0.06)
    assert "seed=" in err and "rng_id=" in err and "replicates=" in err


def test_fisher_nine_halves(capsys, pfile):
    code, out, _ = run(capsys, "test", pfile("0.5\n" * 9), "--method", "fisher")
    (row,) = rows_of(out)
    assert float(row["statistic"]) == pytest.approx(12.477, abs=1e-3)
    # incomplete-gamma oracle: 0.8216785266812335
    assert float(row["p_value"]) == pytest.approx(0.8216785266812335, abs=1e-10)
    assert float(row["p_value"]) == pytest.approx(chi_square_sf(12.476649250079015, 18), abs=1e-14)


def test_omnibus_output_is_deterministic(capsys, pfile):
    path = pfile("0.01\n0.2\n0.5\n0.03\n")
    args = ("test", path, "--method", "omnibus-logp", "-B", 5000, "--seed", 7)
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args, "--threads", 3)
    assert a == b
    (row,) = rows_of(a)
    assert row["seed"] == "7" and row["replicates"] == "5000" and row["rng_id"]


def test_csv_and_json_agree(capsys, pfile):
    path = pfile("0.01,0.2,0.5,0.03,0.8")
    _, c, _ = run(capsys, "test", path, "-B", 2000)
    _, j, _ = run(capsys, "test", path, "-B", 2000, "--format", "json")
    csv_rows = rows_of(c)
    json_rows = json.loads(j)
    assert [r["method"] for r in csv_rows] == [r["method"] for r in json_rows]
    assert len(json_rows) == 11
    for a, b in zip(csv_rows, json_rows):
        assert float(a["statistic"]) == b["statistic"]
        assert float(a["p_value"]) == b["p_value"]


def test_exit_codes(capsys, pfile, tmp_path):
    code, _, err = run(capsys, "test", pfile("0.5\n1.5\n"))
    assert code == 2 and ":2:" in err
    code, _, _ = run(capsys, "test", tmp_path / "missing.txt")
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        main(["test", str(pfile("0.5")), "--bogus"])
    assert exc.value.code == 2


def test_nulltable_round_trip_and_mismatch(capsys, pfile, tmp_path):
    out = tmp_path / "t.omni"
    code, _, err = run(capsys, "nulltable", "--m", 3, "--transform", "logp", "-B", 1000, "--seed", 4, "--out", out)
    assert code == 0 and "seed=4" in err
    table = load_null_table(out)
    assert table.m == 3 and table.replicates == 1000 and table.seed == 4

    code, text, _ = run(capsys, "test", pfile("0.01\n0.3\n0.9\n"), "--method", "omnibus-logp", "--table", out)
    assert code == 0
    (row,) = rows_of(text)
    assert row["replicates"] == "1000" and row["seed"] == "4"

    code, _, err = run(capsys, "test", pfile("0.01\n0.3\n"), "--method", "omnibus-logp", "--table", out)
    assert code == 3 and "m=3" in err

    out.write_bytes(out.read_bytes()[:100])
    code, _, _ = run(capsys, "test", pfile("0.01\n0.3\n0.9\n"), "--table", out)
    assert code == 3


def test_nulltable_capacity_error(capsys, tmp_path):
    code, _, err = run(capsys, "nulltable", "--m", 1000, "-B", 1_000_000, "--memory-budget", 1, "--out", tmp_path / "x")
    assert code == 3 and "replicates" in err
    assert not (tmp_path / "x").exists()


def write_config(tmp_path, text):
    path = tmp_path / "study.ini"
    path.write_text(text)
    return path


def test_power_all_null(capsys, tmp_path):
    cfg = write_config(tmp_path, """
[null]
family = ZTestEqual
m = 10
m1 = 0
n = 100
nsim = 10000
replicates = 10000
methods = fisher, simes, omnibus-logp
seed = 3
""")
    out = tmp_path / "power.csv"
    code, _, err = run(capsys, "power", "--config", cfg, "--out", out)
    assert code == 0 and "seed=3" in err
    text = out.read_text()
    assert text.startswith("# omnitest")
    header = [l for l in text.splitlines() if not l.startswith("#")][0]
    assert header == "family,m,m1,n,gamma,method,nsim,rejections,power,seed,rng_id"
    for row in rows_of(text):
        assert 0.043 <= float(row["power"]) <= 0.057, row


def test_power_saturation_and_lists(capsys, tmp_path):
    cfg = write_config(tmp_path, """
[big]
family = ZTestEqual
m = 5
m1 = 5
n = 50, 100
gamma = 10
nsim = 500
replicates = 1000
methods = fisher, omnibus-z
""")
    code, text, _ = run(capsys, "power", "--config", cfg)
    rows = rows_of(text)
    assert code == 0 and len(rows) == 4
    assert all(float(r["power"]) == 1.0 for r in rows)


def test_power_minimax_cell(capsys, tmp_path):
    cfg = write_config(tmp_path, """
[minimax_m10]
family = ZTestEqual
m = 10
m1 = all
n = 100
gamma = 0.3
nsim = 10000
methods = fisher
seed = 1
minimax = true
""")
    code, text, _ = run(capsys, "power", "--config", cfg)
    (row,) = rows_of(text)
    assert code == 0
    assert abs(float(row["power"]) - 0.49) <= 0.02


@pytest.mark.parametrize("body, word", [
    ("family = ZTestEqual\nm = 10\nm1 = 1\nn = 10\nbogus = 1\n", "bogus"),
    ("family = ZTestEqual\nm = 10\nm1 = 1\n", "n"),
    ("family = Normal\nm = 10\nm1 = 1\nn = 10\n", "family"),
    ("family = ZTestEqual\nm = ten\nm1 = 1\nn = 10\n", "m"),
    ("family = ZTestEqual\nm = 10\nm1 = 11\nn = 10\n", "m1"),
    ("family = ZTestEqual\nm = 10\nm1 = 1\nn = 10\nmethods = fisher, magic\n", "methods"),
])
def test_power_schema_errors(capsys, tmp_path, body, word):
    cfg = write_config(tmp_path, "[s]\n" + body)
    code, _, err = run(capsys, "power", "--config", cfg)
    assert code == 3 and word in err


def test_minimax_command(capsys, tmp_path):
    out = tmp_path / "mm.csv"
    code, _, _ = run(capsys, "minimax", "--m", 10, "--n", "100", "--methods", "simes,stouffer",
                     "--nsim", 10000, "--seed", 5, "--out", out)
    assert code == 0
    rows = {r["method"]: r for r in rows_of(out.read_text())}
    assert abs(float(rows["simes"]["power"]) - 0.44) <= 0.02
    assert rows["stouffer"]["m1"] == "1"
    assert "replicates=10000" in out.read_text().splitlines()[1]
