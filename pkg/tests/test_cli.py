import json

import numpy as np
import pytest

import ssrefine as ss
from ssrefine import fileio
from ssrefine.cli import cli_main


def write_siso_files(tmp_path, seed=0, n_samples=400):
    truth = ss.random_stable_discrete(3, 1, 1, seed=seed)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n_samples, 1))
    y = ss.simulate(truth, u) + 0.3 * rng.standard_normal((n_samples, 1))
    data = ss.TimeSeriesData(u, y, ts=1.0)
    data_path = tmp_path / "d.csv"
    fileio.save_timeseries(data_path, data)
    model_path = tmp_path / "m.json"
    start = ss.StateSpaceModel(truth.A, rng.standard_normal((3, 1)),
                               rng.standard_normal((1, 3)),
                               np.zeros((1, 1)), ts=1.0)
    fileio.save_model(model_path, start)
    return truth, data, data_path, model_path


class TestFileFormats:
    def test_model_json_roundtrip(self, tmp_path):
        m = ss.random_stable_discrete(3, 2, 2, seed=1)
        path = tmp_path / "m.json"
        fileio.save_model(path, m)
        back = fileio.load_model(path)
        for name in "ABCD":
            assert np.array_equal(getattr(m, name), getattr(back, name))
        assert back.ts == m.ts

    def test_model_json_missing_field_named(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"n": 1, "nu": 1, "ny": 1, "ts": 1.0}')
        with pytest.raises(fileio.FileFormatError, match="'A'"):
            fileio.load_model(path)

    def test_timeseries_roundtrip_with_sidecar(self, tmp_path):
        rng = np.random.default_rng(2)
        data = ss.TimeSeriesData(rng.standard_normal((20, 2)),
                                 rng.standard_normal((20, 3)), ts=0.25)
        path = tmp_path / "d.csv"
        fileio.save_timeseries(path, data)
        back = fileio.load_timeseries(path)
        assert back.ts == 0.25
        assert np.allclose(back.u, data.u) and np.allclose(back.y, data.y)
        head = path.read_text().splitlines()[0]
        assert head == "t,u1,u2,y1,y2,y3"

    def test_timeseries_without_ts_anywhere_fails(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("t,u1,y1\n0,1,1\n")
        with pytest.raises(fileio.FileFormatError, match="sidecar"):
            fileio.load_timeseries(path)

    def test_frf_roundtrip(self, tmp_path):
        m = ss.random_stable_discrete(2, 2, 2, seed=3)
        omega = np.linspace(0.1, 3.0, 15)
        fd = ss.FrequencyData(omega, ss.frequency_response(m, omega), ts=1.0)
        path = tmp_path / "g.csv"
        fileio.save_frequency_data(path, fd)
        head = path.read_text().splitlines()[0].split(",")
        assert head[:3] == ["omega", "reG_1_1", "imG_1_1"]
        back = fileio.load_frequency_data(path)
        assert back.ts == 1.0
        assert np.allclose(back.G, fd.G)

    def test_frf_bad_column_named(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("omega,foo,bar\n0.1,1,2\n")
        with pytest.raises(fileio.FileFormatError, match="foo"):
            fileio.load_frequency_data(path, ts=0.0)

    def test_csv_line_errors_carry_the_line_number(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("t,u1,y1\n0,1,1\n1,x,2\n")
        with pytest.raises(fileio.FileFormatError, match="line 3"):
            fileio.load_timeseries(path, ts=1.0)


class TestBenchCommand:
    def test_results_csv_contract(self, tmp_path):
        out = tmp_path / "r.csv"
        rc = cli_main(["bench", "td", "--trials", "2", "--order", "2",
                       "--nu", "1", "--ny", "1", "--n-samples", "200",
                       "--seed", "1", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "trial,e_mn,e_mpBC,e_mp,status"
        assert len(lines) == 3

    def test_identical_flags_give_identical_bytes(self, tmp_path):
        args = ["bench", "td", "--trials", "2", "--order", "2", "--nu", "1",
                "--ny", "1", "--n-samples", "200", "--seed", "3"]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(args + ["--out", str(out1)]) == 0
        assert cli_main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_summary_and_figures(self, tmp_path):
        out = tmp_path / "r.csv"
        summ = tmp_path / "s.json"
        figs = tmp_path / "figs"
        rc = cli_main(["bench", "td", "--trials", "3", "--order", "2",
                       "--nu", "1", "--ny", "1", "--n-samples", "200",
                       "--seed", "2", "--out", str(out),
                       "--summary", str(summ), "--figdir", str(figs)])
        assert rc == 0
        doc = json.loads(summ.read_text())
        assert set(doc) == {"medians", "win_pct", "failures"}
        assert (figs / "errors_boxplot.svg").stat().st_size > 0
        assert (figs / "errors_scatter.svg").stat().st_size > 0

    def test_config_file_with_flag_overrides(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"trials": 2, "order": 2, "nu": 1, "ny": 1,
                                   "n_samples": 200, "seed": 9}))
        out = tmp_path / "r.csv"
        rc = cli_main(["bench", "td", "--config", str(cfg), "--trials", "1",
                       "--out", str(out)])
        assert rc == 0
        assert len(out.read_text().splitlines()) == 2


class TestVerifyCommand:
    def test_commutant_verdict_json(self, tmp_path, capsys):
        out = tmp_path / "v.json"
        rc = cli_main(["verify", "--property", "commutant", "--trials", "25",
                       "--seed", "3", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["property"] == "commutant"
        assert doc["pass"] is True
        printed = json.loads(capsys.readouterr().out)
        assert printed == doc

    def test_unknown_property_is_usage_error(self):
        assert cli_main(["verify", "--property", "nope"]) == 1


class TestRefineCommand:
    def test_siso_bcd_report_is_flat_after_first_step(self, tmp_path):
        _, _, data_path, model_path = write_siso_files(tmp_path)
        out = tmp_path / "refined.json"
        rep_path = tmp_path / "rep.json"
        rc = cli_main(["refine", "--model", str(model_path), "--data",
                       str(data_path), "--fix", "A", "--method", "bcd",
                       "--out", str(out), "--report", str(rep_path)])
        assert rc == 0
        rep = json.loads(rep_path.read_text())
        traj = rep["cost_trajectory"]
        assert rep["method"] == "BCD"
        first = traj[1]
        assert all(abs(c - first) <= 1e-9 * first for c in traj[1:])

    def test_dimension_mismatch_is_numerical_failure(self, tmp_path):
        truth, data, data_path, _ = write_siso_files(tmp_path, seed=5)
        wrong = ss.random_stable_discrete(2, 2, 2, seed=6)
        model_path = tmp_path / "wrong.json"
        fileio.save_model(model_path, wrong)
        out = tmp_path / "refined.json"
        rc = cli_main(["refine", "--model", str(model_path), "--data",
                       str(data_path), "--method", "bcd", "--out", str(out)])
        assert rc == 2

    def test_gn_full_refines_to_lower_cost(self, tmp_path):
        truth, data, data_path, model_path = write_siso_files(tmp_path, seed=7)
        out = tmp_path / "refined.json"
        rc = cli_main(["refine", "--model", str(model_path), "--data",
                       str(data_path), "--method", "gn-full",
                       "--out", str(out)])
        assert rc == 0
        refined = fileio.load_model(out)
        start = fileio.load_model(model_path)
        assert ss.prediction_cost(refined, data) <= ss.prediction_cost(start, data)


class TestFitCommand:
    def test_time_domain_fit_writes_a_model(self, tmp_path):
        truth = ss.random_stable_discrete(3, 2, 2, seed=8)
        u = np.random.default_rng(8).standard_normal((800, 2))
        data = ss.TimeSeriesData(u, ss.simulate(truth, u), ts=1.0)
        data_path = tmp_path / "d.csv"
        fileio.save_timeseries(data_path, data)
        out = tmp_path / "m.json"
        rc = cli_main(["fit", "--data", str(data_path), "--order", "3",
                       "--out", str(out)])
        assert rc == 0
        model = fileio.load_model(out)
        assert ss.io_equivalent(truth, model, L=6, tol=1e-4)

    def test_frequency_fit_continuous(self, tmp_path):
        truth = ss.random_stable_continuous(3, 2, 2, seed=9)
        omega = np.linspace(0.0, 5.0, 160)
        fd = ss.FrequencyData(omega, ss.frequency_response(truth, omega), ts=0.0)
        frf_path = tmp_path / "g.csv"
        fileio.save_frequency_data(frf_path, fd)
        out = tmp_path / "m.json"
        rc = cli_main(["fit", "--frf", str(frf_path), "--order", "3",
                       "--refine", "bcd", "--out", str(out)])
        assert rc == 0
        model = fileio.load_model(out)
        scale = float(np.sum(np.abs(fd.G) ** 2))
        assert ss.frequency_cost(model, fd) <= 1e-8 * scale

    def test_frequency_fit_discrete_target(self, tmp_path):
        truth = ss.random_stable_discrete(2, 1, 1, seed=30)
        omega = np.linspace(0.0, np.pi, 96)
        fd = ss.FrequencyData(omega, ss.frequency_response(truth, omega), ts=1.0)
        frf_path = tmp_path / "g.csv"
        fileio.save_frequency_data(frf_path, fd)
        out = tmp_path / "m.json"
        rc = cli_main(["fit", "--frf", str(frf_path), "--order", "2",
                       "--out", str(out)])
        assert rc == 0
        model = fileio.load_model(out)
        assert model.ts == 1.0
        assert ss.io_equivalent(truth, model, L=8, tol=1e-5)

    def test_requires_exactly_one_data_source(self, tmp_path):
        assert cli_main(["fit", "--order", "2", "--out",
                         str(tmp_path / "m.json")]) == 1


class TestCompareCommand:
    def test_trajectory_csv_contract(self, tmp_path):
        _, _, data_path, model_path = write_siso_files(tmp_path, seed=10)
        out = tmp_path / "traj.csv"
        rc = cli_main(["compare", "--model", str(model_path), "--data",
                       str(data_path), "--steps", "4", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "step,bcd,gn_bcd,gn_full"
        first = lines[1].split(",")
        assert first[0] == "0"
        assert all(float(v) == 1.0 for v in first[1:])


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self):
        assert cli_main(["bench", "td", "--nope", "1", "--out", "x.csv"]) == 1

    def test_missing_file_is_file_error(self, tmp_path):
        assert cli_main(["refine", "--model", str(tmp_path / "missing.json"),
                         "--data", str(tmp_path / "missing.csv"),
                         "--out", str(tmp_path / "o.json")]) in (1, 2)

    def test_unreadable_model_json_names_the_problem(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        rc = cli_main(["refine", "--model", str(bad), "--data", "d.csv",
                       "--out", str(tmp_path / "o.json")])
        assert rc == 1
        assert "JSON" in capsys.readouterr().err
