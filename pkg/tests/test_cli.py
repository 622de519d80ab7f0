import csv
import shutil
import subprocess
import sys

import pytest

from deltacrdt import cli


def run_cli(*argv):
    return cli.main(list(argv))


def test_run_bundled_scenario_by_name(capsys):
    assert run_cli("run", "--scenario", "gcounter-3node") == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "converged yes" in out
    assert "node,digest,converged" in out


def test_run_writes_csv(tmp_path, capsys):
    out_file = tmp_path / "rows.csv"
    assert run_cli("run", "--scenario", "gcounter-3node", "--out", str(out_file)) == cli.EXIT_OK
    rows = list(csv.DictReader(out_file.open()))
    assert [r["node"] for r in rows] == ["r0", "r1", "r2"]
    assert {r["value"] for r in rows} == {"30"}
    assert "node,digest" not in capsys.readouterr().out


def test_run_seed_override_changes_report(capsys):
    run_cli("run", "--scenario", "awset-chaos")
    first = capsys.readouterr().out
    run_cli("run", "--scenario", "awset-chaos", "--seed", "99")
    second = capsys.readouterr().out
    assert "seed 99" in second and first != second


def test_run_not_converged_exits_one(capsys):
    assert run_cli("run", "--scenario", "partition-no-delivery") == cli.EXIT_FAILED
    assert "converged no" in capsys.readouterr().out


def test_twin(capsys):
    assert run_cli("twin", "--scenario", "crash-recovery") == cli.EXIT_OK
    assert capsys.readouterr().out.startswith("equivalent yes")


def test_twin_rejects_basic_engine(capsys):
    assert run_cli("twin", "--scenario", "gcounter-3node") == cli.EXIT_USAGE
    assert "causal" in capsys.readouterr().err


def test_scenario_dir_from_environment(tmp_path, monkeypatch, capsys):
    (tmp_path / "mine.toml").write_text('name = "mine"\ndatatype = "gset(int)"\n[topology]\nreplicas = 2\n')
    monkeypatch.setenv(cli.SCENARIO_ENV, str(tmp_path))
    assert run_cli("run", "--scenario", "mine") == cli.EXIT_OK
    assert "scenario mine" in capsys.readouterr().out


def test_missing_and_malformed_scenarios(tmp_path, capsys):
    assert run_cli("run", "--scenario", "does-not-exist") == cli.EXIT_USAGE
    assert "not found" in capsys.readouterr().err
    bad = tmp_path / "bad.toml"
    bad.write_text('datatype = "gcounter"\n[faults]\ndrop = "lots"\n')
    assert run_cli("run", "--scenario", str(bad)) == cli.EXIT_USAGE
    bad.write_text('datatype = "gcounter"\nseed = [\n')
    assert run_cli("run", "--scenario", str(bad)) == cli.EXIT_USAGE
    assert f"{bad}:2:" in capsys.readouterr().err


def test_stuck_run_exits_three(tmp_path, capsys):
    sc = tmp_path / "tiny.toml"
    sc.write_text('datatype = "gcounter"\n[topology]\nreplicas = 3\n[workload]\nops_per_replica = 20\n'
                  '[faults]\nbudget = 10\n')
    assert run_cli("run", "--scenario", str(sc)) == cli.EXIT_STUCK
    assert "no quiescence" in capsys.readouterr().err


def test_sizebench_gset(tmp_path, capsys):
    out = tmp_path / "size.csv"
    assert run_cli("sizebench", "--type", "gset(int)", "--ops", "200", "--out", str(out)) == cli.EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 200
    assert {r["delta_bytes"] for r in rows} == {"14"}
    assert int(rows[-1]["state_bytes"]) > int(rows[0]["state_bytes"])
    assert "final delta_bytes 14" in capsys.readouterr().out


def test_sizebench_samples_state_sizes():
    rows = cli.sizebench("gset(int)", 1000, samples=10)
    measured = [r for r in rows if r[2] != ""]
    assert measured[0][0] == 1 and measured[-1][0] == 1000
    assert len(measured) <= 11


def test_sizebench_gcounter_replicas():
    rows = cli.sizebench("gcounter", 10, replicas=5)
    assert rows[0][1] == rows[0][2]
    assert rows[-1][2] > rows[-1][1]


def test_sizebench_bad_type(tmp_path, capsys):
    assert run_cli("sizebench", "--type", "nosuch", "--ops", "3", "--out", str(tmp_path / "x.csv")) == cli.EXIT_USAGE


def test_list(capsys):
    assert run_cli("list") == cli.EXIT_OK
    names = capsys.readouterr().out.split()
    assert "gcounter-3node" in names and "crash-recovery" in names


def test_usage_errors():
    with pytest.raises(SystemExit) as err:
        run_cli()
    assert err.value.code == 2
    with pytest.raises(SystemExit):
        run_cli("run")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "deltacrdt.cli", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "empty" in res.stdout.split()


@pytest.mark.skipif(shutil.which("deltacrdt") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["deltacrdt", "run", "--scenario", "gcounter-3node"], capture_output=True, text=True)
    assert res.returncode == 0 and "converged yes" in res.stdout
