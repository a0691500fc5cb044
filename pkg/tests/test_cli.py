import json

import numpy as np
import pytest

from onoff_ising.cli import main
from onoff_ising.io import read_best_series, read_run_record, save_gset
from onoff_ising.problems import ten_node_instance

SMALL = "random:14:0.4:3:signed"


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_solve_replicas(tmp_path, capsys):
    assert run_cli("solve", SMALL, "--replicas", 5, "--iterations", 5000, "--out", tmp_path) == 0
    recs = sorted(tmp_path.glob("*.json"))
    assert len(recs) == 5
    assert len({read_run_record(p).seed for p in recs}) == 5
    assert len(capsys.readouterr().out.splitlines()) == 5


def test_solve_writes_series_and_spikes(tmp_path):
    run_cli("solve", SMALL, "--iterations", 5000, "--spikes", "--out", tmp_path)
    rec = read_run_record(next(tmp_path.glob("*-r0.json")))
    assert read_best_series(next(tmp_path.glob("*-best.csv"))) == rec.checkpoints
    assert next(tmp_path.glob("*-spikes.csv")).read_text().startswith("iteration,neuron,direction\n")


def test_quant_64_matches_unquantized(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli("solve", SMALL, "--iterations", 20000, "--C", 800, "--out", a)
    run_cli("solve", SMALL, "--iterations", 20000, "--C", 800, "--quant-bits", 64, "--out", b)
    ra, rb = (read_run_record(next(d.glob("*.json"))) for d in (a, b))
    assert (ra.best_state, ra.checkpoints) == (rb.best_state, rb.checkpoints)


def test_repeat_runs_byte_identical(tmp_path):
    for d in ("a", "b"):
        run_cli("solve", SMALL, "--iterations", 5000, "--out", tmp_path / d)
    name = next((tmp_path / "a").glob("*.json")).name
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"iterations": 1234, "seed": 9}))
    run_cli("--config", cfg, "solve", SMALL, "--seed", 2, "--out", tmp_path / "o")
    rec = read_run_record(next((tmp_path / "o").glob("*.json")))
    assert rec.iterations == 1234 and rec.seed == 2


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(SystemExit):
        run_cli("--config", cfg, "solve", SMALL)


def test_oracle_on_gset_file(tmp_path, capsys):
    path = tmp_path / "ten"
    save_gset(ten_node_instance(0), path)
    assert run_cli("oracle", path) == 0
    out = capsys.readouterr().out
    assert "ground energy -13, optima 2" in out


def test_oracle_mis(capsys):
    assert run_cli("oracle", "random:16:0.25:100", "--kind", "mis") == 0
    assert "size 10" in capsys.readouterr().out


def test_bench_tables(tmp_path):
    assert run_cli("bench", SMALL, "torus:3:4:0", "--runs", 3, "--iterations", 3000,
                   "--sota", 10, "--out", tmp_path) == 0
    stats = (tmp_path / "bench_stats.csv").read_text().splitlines()
    assert stats[0].startswith("graph,runs,mean,sd") and len(stats) == 3
    assert (tmp_path / "bench_kde.csv").exists() and (tmp_path / "bench_hist.csv").exists()


def test_ablate_tables(tmp_path):
    assert run_cli("ablate", SMALL, "--seeds", 2, "--iterations", 2000, "--out", tmp_path) == 0
    assert len((tmp_path / "ablation_runs.csv").read_text().splitlines()) == 1 + 18
    assert len((tmp_path / "ablation_summary.csv").read_text().splitlines()) == 1 + 9


def test_analyze(tmp_path, capsys):
    run_cli("solve", SMALL, "--iterations", 50000, "--T0", 5, "--C", 1e9, "--spikes", "--out", tmp_path)
    spikes = next(tmp_path.glob("*-spikes.csv"))
    out = tmp_path / "traj.csv"
    assert run_cli("analyze", spikes, "--dim", 14, "--iterations", 50000, "--window", 5000,
                   "--overlap", 2500, "--out", out) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "window_start,pc1,pc2,pc3" and len(rows) == 1 + 19
    assert "explained variance" in capsys.readouterr().out


def test_missing_file_exit_code(capsys):
    assert run_cli("solve", "/nonexistent/G1") == 1
    assert "error" in capsys.readouterr().err
