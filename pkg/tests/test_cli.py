import json
import subprocess
import sys

import pytest

import ustlab as u
from ustlab.cli import main


def write_config(tmp_path, **kw):
    cfg = dict(family="hypercube", sizes=[4], replicas=5, seed=3)
    cfg.update(kw)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_experiment_to_file_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["diameter", "--config", cfg, "--out", str(a)]) == 0
    assert main(["diameter", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0].startswith("experiment,family,n,size")
    c = tmp_path / "c.csv"
    assert main(["diameter", "--config", cfg, "--out", str(c), "--seed", "4"]) == 0
    assert c.read_bytes() != a.read_bytes()


def test_experiment_to_stdout(tmp_path, capsys):
    cfg = write_config(tmp_path, family="path", sizes=[9], replicas=2)
    assert main(["diameter", "--config", cfg]) == 0
    out, err = capsys.readouterr()
    assert "diam" in out and "PASS" in err


def test_failed_check_exits_2(tmp_path):
    cfg = write_config(tmp_path, params={"window": [50, 60]})
    assert main(["diameter", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2


def test_usage_errors_exit_1(tmp_path):
    assert main([]) == 1
    assert main(["diameter"]) == 1
    assert main(["diameter", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["diameter", "--config", str(bad)]) == 1
    assert main(["diameter", "--config", write_config(tmp_path, family="ladder")]) == 1
    assert main(["sunny", "--config", write_config(tmp_path, experiment="diameter")]) == 1
    assert main(["audit", "--graph", str(tmp_path / "none.txt")]) == 1


def test_audit_exit_codes(tmp_path, capsys):
    g = tmp_path / "k.txt"
    u.write_edgelist(u.make_complete(400), g)
    assert main(["audit", "--graph", str(g), "--alpha", "0.1"]) == 0
    err = capsys.readouterr().err
    assert err.count("PASS") == 3
    h = tmp_path / "h.txt"
    u.write_edgelist(u.make_hypercube(8), h)
    assert main(["audit", "--graph", str(h), "--out", str(tmp_path / "a.csv")]) == 2
    err = capsys.readouterr().err
    assert "mixing    FAIL  t_mix=22" in err
    assert "check:mixing,0" in (tmp_path / "a.csv").read_text()


def test_console_script_runs(tmp_path):
    cfg = write_config(tmp_path, replicas=2)
    run = subprocess.run([sys.executable, "-m", "ustlab.cli", "diameter", "--config", cfg],
                         capture_output=True, text=True)
    assert run.returncode == 0 and run.stdout.startswith("experiment,")


@pytest.mark.parametrize("name", ["path-law", "sunny", "two-walk", "height"])
def test_each_subcommand(tmp_path, name):
    fam = {"height": "cycle"}.get(name, "complete")
    cfg = write_config(tmp_path, family=fam, sizes=[12], replicas=4)
    code = main([name, "--config", cfg, "--out", str(tmp_path / "o.csv")])
    assert code in (0, 2)
    assert (tmp_path / "o.csv").read_text().startswith("experiment,")
