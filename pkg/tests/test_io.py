import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from onoff_ising.annealer import AnnealSchedule, NoiseConfig, QuantFormat
from onoff_ising.harness import MAXCUT, solve_graph
from onoff_ising.io import (
    GsetIntegrityError, GsetParseError, RunRecord, config_from_dict, config_to_dict, pack_state,
    parse_gset, read_best_series, read_gset, read_run_record, read_spikes, save_gset,
    unpack_state, write_best_series, write_gset, write_run_record, write_spikes, write_table,
)
from onoff_ising.network import SolverConfig, run
from onoff_ising.problems import WeightedGraph, maxcut_encode, random_graph


class TestGset:
    def test_triangle(self):
        g = parse_gset("3 3\n1 2 1\n2 3 1\n1 3 1\n")
        np.testing.assert_array_equal(g.edges, [[0, 1, 1], [1, 2, 1], [0, 2, 1]])

    def test_signed_weights_and_blank_lines(self):
        g = parse_gset("\n4 2\n\n1 4 -1\n2 3 1\n")
        assert g.n == 4 and g.edges[:, 2].tolist() == [-1, 1]

    def test_edge_count_mismatch(self):
        with pytest.raises(GsetIntegrityError, match="declares 3 edges but 2"):
            parse_gset("3 3\n1 2 1\n2 3 1\n")

    def test_bad_line_reports_number(self):
        with pytest.raises(GsetParseError, match="line 3"):
            parse_gset("3 2\n1 2 1\n2 x 1\n")

    def test_duplicate_reports_both_lines(self):
        with pytest.raises(GsetIntegrityError, match="line 3: duplicate edge .* line 2"):
            parse_gset("3 2\n1 2 1\n2 1 1\n")

    def test_self_loop(self):
        with pytest.raises(GsetIntegrityError, match="self-loop"):
            parse_gset("3 1\n2 2 1\n")

    def test_out_of_range(self):
        with pytest.raises(GsetIntegrityError, match="outside"):
            parse_gset("3 1\n1 4 1\n")

    def test_empty(self):
        with pytest.raises(GsetParseError):
            parse_gset("")

    def test_file_name_is_stem(self, tmp_path):
        g = random_graph(10, 0.4, 1, signed=True)
        save_gset(g, tmp_path / "G99")
        back = read_gset(tmp_path / "G99")
        assert back.name == "G99"
        np.testing.assert_array_equal(back.edges, g.edges)

    @given(st.integers(2, 30), st.floats(0.0, 1.0), st.integers(0, 10_000), st.booleans())
    def test_round_trip(self, n, p, seed, signed):
        g = random_graph(n, p, seed, signed)
        back = parse_gset(write_gset(g))
        assert back.n == g.n
        np.testing.assert_array_equal(back.edges, g.edges)
        assert write_gset(back) == write_gset(g)


class TestState:
    @given(st.integers(1, 70), st.integers(0, 10_000), st.booleans())
    def test_pack_round_trip(self, n, seed, binary):
        rng = np.random.default_rng(seed)
        x = rng.integers(0, 2, n).astype(np.int8)
        s = x if binary else (2 * x - 1).astype(np.int8)
        np.testing.assert_array_equal(unpack_state(pack_state(s), n, "binary" if binary else "spin"), s)

    def test_too_short(self):
        with pytest.raises(ValueError):
            unpack_state("ff", 9)


def _records(tmp_path=None, **kw):
    g = random_graph(20, 0.3, 2, signed=True)
    cfg = SolverConfig(max_iter=20_000, seed=5, schedule=AnnealSchedule(C=800), **kw)
    return solve_graph(g, MAXCUT, cfg, replicas=2, sota=40.0, source="random:20:0.3:2:signed")


class TestRunRecord:
    def test_round_trip(self, tmp_path):
        records, traces = _records(noise=NoiseConfig(quant=QuantFormat(16)))
        for rec, tr in zip(records, traces):
            write_run_record(rec, tmp_path / "r.json")
            back = read_run_record(tmp_path / "r.json")
            assert back == rec
            np.testing.assert_array_equal(back.state(), tr.best_state)
            assert back.wall_time is None
            cfg = config_from_dict(back.config)
            assert cfg.seed == tr.seed and cfg.noise.quant == QuantFormat(16)

    def test_quality(self):
        rec = _records()[0][0]
        assert rec.quality == rec.best_value / 40.0

    def test_byte_identical_reruns(self, tmp_path):
        a = [r.to_json() for r in _records()[0]]
        b = [r.to_json() for r in _records()[0]]
        assert a == b

    def test_rejects_unknown_version(self):
        text = _records()[0][0].to_json().replace('"schema_version": 1', '"schema_version": 9')
        with pytest.raises(ValueError, match="schema_version"):
            RunRecord.from_json(text)

    def test_rejects_unknown_field(self):
        text = _records()[0][0].to_json().replace("{", '{"extra": 1,', 1)
        with pytest.raises(ValueError, match="unknown"):
            RunRecord.from_json(text)

    def test_corrupt_file(self, tmp_path):
        (tmp_path / "bad.json").write_text("{not json")
        with pytest.raises(ValueError, match="invalid run record"):
            read_run_record(tmp_path / "bad.json")

    def test_config_dict_round_trip(self):
        cfg = SolverConfig(max_iter=7, seed=3, noise=NoiseConfig("gaussian", quant=QuantFormat(8)),
                           schedule=AnnealSchedule("cold-restart", restart_at=5, cold_T=0.1))
        assert config_from_dict(config_to_dict(cfg)) == cfg


class TestCsv:
    def test_empty_spike_table_is_header_only(self, tmp_path):
        g = WeightedGraph.from_edges(2, [(0, 1, 1)])
        tr = run(maxcut_encode(g), SolverConfig(max_iter=0))
        assert write_spikes(tr, tmp_path / "s.csv") == "iteration,neuron,direction\n"
        it, nrn, d = read_spikes(tmp_path / "s.csv")
        assert it.size == nrn.size == d.size == 0

    def test_spike_round_trip_large(self, tmp_path):
        p = maxcut_encode(random_graph(60, 0.1, 3, signed=True))
        tr = run(p, SolverConfig(max_iter=200_000, seed=1, schedule=AnnealSchedule(T0=5.0, C=1e9)))
        assert tr.spike_count >= 10_000
        write_spikes(tr, tmp_path / "s.csv")
        it, nrn, d = read_spikes(tmp_path / "s.csv")
        np.testing.assert_array_equal(it, tr.spike_iteration)
        np.testing.assert_array_equal(nrn, tr.spike_neuron)
        np.testing.assert_array_equal(d, tr.spike_direction)

    def test_best_series_round_trip(self, tmp_path):
        pts = [[1, 0.1], [5, 2.0 / 3.0], [9, -1e-300]]
        write_best_series(pts, tmp_path / "b.csv")
        assert read_best_series(tmp_path / "b.csv") == pts

    def test_header_checked(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n")
        with pytest.raises(ValueError, match="expected header"):
            read_spikes(tmp_path / "x.csv")

    def test_table_formats(self):
        text = write_table(None, ["a", "b", "c"], [[np.int64(3), np.float32(0.5), None]])
        assert text == "a,b,c\n3,0.5,\n"
