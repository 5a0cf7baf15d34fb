"""Command-line surface: flags, config files, CSV schemas, plot scripts."""

import os

import pytest

from qal.cli import emit_plot_script, parse_config, read_csv, run
from qal.errors import ConfigError, UnknownSchema


def run_in(tmp_path, argv):
    cwd = os.getcwd()
    os.chdir(tmp_path)
    try:
        return run(argv)
    finally:
        os.chdir(cwd)


def strip_timestamp(text: str) -> str:
    return "\n".join(
        line for line in text.splitlines() if not line.startswith("# timestamp")
    )


class TestParseConfig:
    def test_flags_only(self):
        config = parse_config(
            "identity-check",
            {"p": "0.5,0.5", "gamma": "0.2,0.2", "n": "1"},
            seed="7",
            env={},
        )
        assert config.params["p"] == [0.5, 0.5]
        assert config.params["n"] == 1
        assert config.seed == 7
        assert config.provenance["p"] == "flag"
        assert config.provenance["tol"] == "default"

    def test_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# channel setup\np = 0.5,0.5\ngamma = 0.1,0.1\nn = 2\nseed = 3\n")
        config = parse_config(
            "identity-check", {"gamma": "0.2,0.2"}, str(cfg), env={}
        )
        assert config.params["gamma"] == [0.2, 0.2]
        assert config.provenance["gamma"] == "flag"
        assert config.params["p"] == [0.5, 0.5]
        assert config.provenance["p"] == "file"
        assert config.seed == 3
        assert config.provenance["seed"] == "file"

    def test_env_seed_fallback(self):
        config = parse_config(
            "census", {"m": "2", "n": "1"}, env={"QAL_SEED": "99"}
        )
        assert config.seed == 99
        assert config.provenance["seed"] == "env"

    def test_empty_file_full_flags(self, tmp_path):
        cfg = tmp_path / "empty.cfg"
        cfg.write_text("# nothing but comments\n\n")
        config = parse_config("census", {"m": "3", "n": "2"}, str(cfg), env={})
        assert config.params["m"] == 3
        assert config.provenance["m"] == "flag"

    def test_trailing_separator_names_the_key(self):
        with pytest.raises(ConfigError, match="p"):
            parse_config("histogram", {"p": "0.5,0.5,"}, env={})

    def test_unknown_file_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("banana = 1\n")
        with pytest.raises(ConfigError, match="banana"):
            parse_config("census", {"m": "2", "n": "1"}, str(cfg), env={})

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="--n"):
            parse_config("census", {"m": "2"}, env={})

    def test_wrong_type_names_key_and_type(self):
        with pytest.raises(ConfigError, match="n.*int"):
            parse_config("census", {"m": "2", "n": "two"}, env={})


class TestCommands:
    def test_histogram_identity_channel(self, tmp_path):
        rc = run_in(tmp_path, ["histogram", "--p", "0.5,0.5", "--gamma", "0,0", "--out", "h.csv"])
        assert rc == 0
        metadata, header, rows = read_csv(tmp_path / "h.csv")
        assert header == ["outcome", "label", "bare", "effective"]
        assert metadata["schema"] == "histogram"
        assert float(metadata["defect"]) == 0.0
        for row in rows:
            assert float(row[2]) == float(row[3])

    def test_histogram_with_losses(self, tmp_path):
        rc = run_in(tmp_path, ["histogram", "--p", "0.5,0.5", "--gamma", "0.2,0.2", "--out", "h.csv"])
        assert rc == 0
        metadata, _, rows = read_csv(tmp_path / "h.csv")
        assert float(metadata["defect"]) == pytest.approx(0.2, abs=1e-12)
        assert [float(r[3]) for r in rows] == pytest.approx([0.4, 0.4], abs=1e-12)

    def test_census_rows(self, tmp_path):
        rc = run_in(tmp_path, ["census", "--m", "2", "--n", "2", "--out", "c.csv"])
        assert rc == 0
        _, header, rows = read_csv(tmp_path / "c.csv")
        assert header == ["l", "raw", "reduced"]
        assert [[int(v) for v in row] for row in rows] == [[0, 4, 4], [1, 8, 4], [2, 4, 1]]

    def test_identity_check_example(self, tmp_path):
        rc = run_in(
            tmp_path,
            ["identity-check", "--m", "2", "--n", "1", "--p", "0.5,0.5",
             "--gamma", "0.2,0.2", "--seed", "7", "--out", "id.csv"],
        )
        assert rc == 0
        _, header, rows = read_csv(tmp_path / "id.csv")
        record = dict(zip(header, rows[0]))
        assert float(record["xi"]) == pytest.approx(0.8, abs=1e-12)
        assert float(record["amp_sq"]) == pytest.approx(0.8, abs=1e-10)
        assert float(record["gap"]) <= 1e-10
        assert record["feasible"] == "true"

    def test_identity_check_uniform_default(self, tmp_path):
        # --m alone implies a uniform bare distribution
        rc = run_in(
            tmp_path,
            ["identity-check", "--m", "2", "--n", "1", "--gamma", "0.2,0.2", "--out", "id.csv"],
        )
        assert rc == 0
        _, header, rows = read_csv(tmp_path / "id.csv")
        record = dict(zip(header, rows[0]))
        assert float(record["xi"]) == pytest.approx(0.8, abs=1e-12)

    def test_identity_check_infeasible_exit_2(self, tmp_path):
        rc = run_in(
            tmp_path,
            ["identity-check", "--n", "1", "--p", "0.99,0.01", "--gamma", "1,1", "--out", "id.csv"],
        )
        assert rc == 2
        _, header, rows = read_csv(tmp_path / "id.csv")
        record = dict(zip(header, rows[0]))
        assert record["feasible"] == "false"

    def test_phase_solve(self, tmp_path):
        rc = run_in(
            tmp_path,
            ["phase-solve", "--p", "0.5,0.5", "--gamma", "0.2,0.2", "--n", "1", "--out", "ph.csv"],
        )
        assert rc == 0
        metadata, header, rows = read_csv(tmp_path / "ph.csv")
        assert header == ["path", "phase"]
        assert len(rows) == 2
        assert float(metadata["max-residual"]) <= 1e-10
        phases = {row[0]: float(row[1]) for row in rows}
        assert phases["1"] == 0.0
        assert abs(phases["2"]) == pytest.approx(1.7721542475852274, abs=1e-9)

    def test_simulate_game(self, tmp_path):
        rc = run_in(
            tmp_path,
            ["simulate-game", "--p", "0.5,0.5", "--gamma", "0.2,0.2",
             "--labels=-1,1", "--rounds", "1", "--trials", "20000",
             "--seed", "4", "--out", "g.csv"],
        )
        assert rc == 0
        metadata, header, rows = read_csv(tmp_path / "g.csv")
        assert header == ["final_state", "count", "frequency"]
        freqs = {float(r[0]): float(r[2]) for r in rows}
        assert freqs[-1.0] == pytest.approx(0.4, abs=0.02)
        assert freqs[0.0] == pytest.approx(0.2, abs=0.02)
        assert float(metadata["frozen-expected"]) == pytest.approx(0.2, abs=1e-12)

    def test_propagate_game(self, tmp_path):
        rc = run_in(
            tmp_path,
            ["propagate-game", "--p", "0.5,0.5", "--gamma", "0.2,0.2",
             "--labels=-1,1", "--steps", "2", "--boundary", "wrap",
             "--grid-min=-5", "--grid-max=5", "--grid-nodes", "11", "--out", "pg.csv"],
        )
        assert rc == 0
        metadata, _, rows = read_csv(tmp_path / "pg.csv")
        assert float(metadata["mass"]) == pytest.approx(1.0, abs=1e-10)
        probs = {float(r[0]): float(r[1]) for r in rows}
        assert probs[0.0] == pytest.approx(0.36, abs=1e-12)
        assert probs[2.0] == pytest.approx(0.16, abs=1e-12)

    def test_quantum_propagate(self, tmp_path):
        rc = run_in(
            tmp_path,
            ["quantum-propagate", "--eps", "2e-3", "--steps", "100",
             "--grid-min=-10", "--grid-max", "10", "--grid-nodes", "200", "--out", "q.csv"],
        )
        assert rc == 0
        metadata, header, rows = read_csv(tmp_path / "q.csv")
        assert header == ["x", "re", "im", "density"]
        assert len(rows) == 200
        assert float(metadata["norm-factor"]) == pytest.approx(1.0, abs=1e-8)

    def test_quantum_compare(self, tmp_path):
        rc = run_in(
            tmp_path,
            ["quantum-compare", "--potential", "harmonic:1", "--time", "0.2",
             "--eps-ladder", "4e-3,2e-3", "--grid-min=-10", "--grid-max", "10",
             "--grid-nodes", "200", "--out", "qc.csv"],
        )
        assert rc == 0
        metadata, header, rows = read_csv(tmp_path / "qc.csv")
        assert header == ["eps", "l2_error"]
        assert len(rows) == 2
        assert "fitted-order" in metadata

    def test_uncertainty(self, tmp_path):
        rc = run_in(
            tmp_path,
            ["uncertainty", "--n-states", "5", "--grid-min=-14", "--grid-max", "14",
             "--grid-nodes", "560", "--seed", "2", "--out", "u.csv"],
        )
        assert rc == 0
        metadata, _, rows = read_csv(tmp_path / "u.csv")
        assert float(metadata["min-product"]) >= 0.5 - 1e-6
        gaussian = [r for r in rows if r[0] == "gaussian"][0]
        assert float(gaussian[1]) == pytest.approx(0.5, abs=1e-6)

    def test_roughness(self, tmp_path):
        rc = run_in(
            tmp_path,
            ["roughness", "--eps-ladder", "4e-3,2e-3", "--samples", "20000",
             "--steps", "16", "--seed", "3", "--out", "r.csv"],
        )
        assert rc == 0
        metadata, _, rows = read_csv(tmp_path / "r.csv")
        ratios = [float(v) for v in metadata["ratios"].split(";")]
        assert 0.4 <= ratios[0] <= 0.6

    def test_usage_error_exit_1(self, tmp_path, capsys):
        assert run_in(tmp_path, ["census", "--bogus", "1"]) == 1

    def test_validation_error_exit_1(self, tmp_path, capsys):
        rc = run_in(tmp_path, ["histogram", "--p", "0.5,0.5,", "--out", "x.csv"])
        assert rc == 1
        assert "p" in capsys.readouterr().err

    def test_no_command_exit_1(self, tmp_path):
        assert run_in(tmp_path, []) == 1


class TestReproducibility:
    def test_byte_identical_given_seed(self, tmp_path):
        argv = ["simulate-game", "--p", "0.5,0.5", "--gamma", "0.2,0.2",
                "--labels=-1,1", "--rounds", "3", "--trials", "5000",
                "--seed", "11"]
        assert run_in(tmp_path, argv + ["--out", "a.csv"]) == 0
        assert run_in(tmp_path, argv + ["--out", "b.csv"]) == 0
        a = strip_timestamp((tmp_path / "a.csv").read_text())
        b = strip_timestamp((tmp_path / "b.csv").read_text())
        # metadata echoes the out path implicitly via none; rows must agree
        assert a == b

    def test_seed_changes_output(self, tmp_path):
        argv = ["simulate-game", "--p", "0.5,0.5", "--gamma", "0.2,0.2",
                "--labels=-1,1", "--rounds", "3", "--trials", "5000"]
        assert run_in(tmp_path, argv + ["--seed", "1", "--out", "a.csv"]) == 0
        assert run_in(tmp_path, argv + ["--seed", "2", "--out", "b.csv"]) == 0
        a = strip_timestamp((tmp_path / "a.csv").read_text())
        b = strip_timestamp((tmp_path / "b.csv").read_text())
        assert a != b


class TestPlotScripts:
    def test_histogram_script(self, tmp_path):
        run_in(tmp_path, ["histogram", "--p", "0.5,0.5", "--gamma", "0.1,0.3", "--out", "h.csv"])
        target = emit_plot_script(str(tmp_path / "h.csv"), "histogram")
        text = open(target).read()
        assert "matplotlib" in text and "bar" in text

    def test_convergence_script_accepts_roughness(self, tmp_path):
        run_in(tmp_path, ["roughness", "--eps-ladder", "4e-3,2e-3",
                          "--samples", "2000", "--steps", "8", "--out", "r.csv"])
        target = emit_plot_script(str(tmp_path / "r.csv"), "convergence")
        assert "loglog" in open(target).read()

    def test_wavepacket_script(self, tmp_path):
        run_in(tmp_path, ["quantum-propagate", "--steps", "10", "--grid-nodes", "100",
                          "--grid-min=-10", "--grid-max", "10", "--out", "q.csv"])
        target = emit_plot_script(str(tmp_path / "q.csv"), "wavepacket")
        assert "density" in open(target).read()

    def test_unknown_schema_rejected(self, tmp_path):
        run_in(tmp_path, ["census", "--m", "2", "--n", "1", "--out", "c.csv"])
        with pytest.raises(UnknownSchema):
            emit_plot_script(str(tmp_path / "c.csv"), "histogram")

    def test_untagged_csv_rejected(self, tmp_path):
        rogue = tmp_path / "rogue.csv"
        rogue.write_text("a,b\n1,2\n")
        with pytest.raises(UnknownSchema):
            emit_plot_script(str(rogue), "histogram")

    def test_plot_script_subcommand(self, tmp_path):
        run_in(tmp_path, ["histogram", "--p", "0.5,0.5", "--out", "h.csv"])
        rc = run_in(tmp_path, ["plot-script", "h.csv", "--kind", "histogram"])
        assert rc == 0
        assert (tmp_path / "h.histogram.py").exists()
