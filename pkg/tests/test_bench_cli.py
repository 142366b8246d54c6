"""Tests for the weno-ds command-line front end."""

import json

import numpy as np
import pytest

from weno_ds import bench_cli
from weno_ds.bench_cli import (
    EXIT_BAD_MODEL,
    EXIT_BAD_SPEC,
    EXIT_INTERRUPTED,
    EXIT_NO_REFERENCE,
    EXIT_OK,
    EXIT_SOLVER_ABORT,
    get_cache_dir,
    main,
)
from weno_ds.mesh import read_snapshot
from weno_ds.reference_oracles import CACHE_ENV_VAR


class TestArguments:
    def test_missing_subcommand(self):
        assert main([]) == 2

    def test_missing_problem(self):
        assert main(["solve"]) == 2

    def test_nt_and_cfl_are_exclusive(self, tmp_path):
        assert main(["solve", "euler:preset=sod", "--nt", "10", "--cfl", "0.5"]) == 2

    @pytest.mark.parametrize("argv", [
        ["solve", "transport", "--nx", "4"],
        ["compare", "transport", "--nx", "5"],
        ["riemann", "--nx", "0"],
        ["train", "bl", "--reference-nx", "3"],
        ["solve", "transport", "--nx", "many"],
    ])
    def test_grid_too_small_is_usage_error(self, argv, tmp_path):
        assert main(argv + ["--out", str(tmp_path / "out")]) == EXIT_BAD_SPEC

    def test_convergence_grid_too_small(self):
        assert main(["convergence", "--ns", "4,8,16"]) == EXIT_BAD_SPEC

    def test_cache_dir_precedence(self, monkeypatch, tmp_path):
        monkeypatch.delenv(CACHE_ENV_VAR, raising=False)
        assert get_cache_dir() is None
        monkeypatch.setenv(CACHE_ENV_VAR, str(tmp_path / "env"))
        assert get_cache_dir() == tmp_path / "env"
        assert get_cache_dir(str(tmp_path / "flag")) == tmp_path / "flag"


class TestExitCodes:
    def test_malformed_problem(self, tmp_path):
        assert main(["solve", "heat", "--out", str(tmp_path / "u.csv")]) == EXIT_BAD_SPEC

    def test_malformed_snapshot_list(self, tmp_path):
        code = main(["solve", "transport", "--nx", "16", "--snapshots", "0.1,abc",
                     "--out", str(tmp_path / "u.csv")])
        assert code == EXIT_BAD_SPEC

    def test_ds_without_model(self, tmp_path):
        assert main(["solve", "transport", "--scheme", "ds", "--out", str(tmp_path / "u.csv")]) == EXIT_BAD_MODEL
        assert main(["compare", "transport", "--scheme", "ds"]) == EXIT_BAD_MODEL

    def test_missing_model_file(self, tmp_path):
        code = main(["solve", "transport", "--scheme", "ds", "--model", str(tmp_path / "none.json"),
                     "--out", str(tmp_path / "u.csv")])
        assert code == EXIT_BAD_MODEL

    def test_corrupt_model_file(self, tmp_path):
        model = tmp_path / "model.json"
        model.write_text("{\"format_version\": 1}")
        code = main(["solve", "transport", "--scheme", "ds", "--model", str(model),
                     "--out", str(tmp_path / "u.csv")])
        assert code == EXIT_BAD_MODEL

    def test_cached_only_without_reference(self, tmp_path):
        code = main(["compare", "burgers:ic=step,z=1.5", "--scheme", "z", "--nx", "32",
                     "--cached-only", "--cache-dir", str(tmp_path)])
        assert code == EXIT_NO_REFERENCE

    def test_vacuum_riemann_problem(self, tmp_path):
        code = main(["riemann", "euler:rhol=1,ul=-10,pl=1,rhor=1,ur=10,pr=1",
                     "--out", str(tmp_path / "r.csv")])
        assert code == EXIT_SOLVER_ABORT

    def test_riemann_needs_euler(self, tmp_path):
        assert main(["riemann", "transport", "--out", str(tmp_path / "r.csv")]) == EXIT_BAD_SPEC

    def test_decreasing_grid_sizes(self):
        assert main(["convergence", "--ns", "40,20"]) == EXIT_BAD_SPEC

    def test_keyboard_interrupt(self, monkeypatch):
        def interrupted(args):
            raise KeyboardInterrupt

        monkeypatch.setattr(bench_cli, "cmd_gen_dataset", interrupted)
        assert main(["gen-dataset", "bl"]) == EXIT_INTERRUPTED


class TestCommands:
    def test_riemann_writes_exact_solution(self, tmp_path, capsys):
        out = tmp_path / "sod.csv"
        assert main(["riemann", "--nx", "16", "--out", str(out)]) == EXIT_OK
        assert "p* = 0.30313" in capsys.readouterr().out
        x, columns = read_snapshot(out)
        assert x.shape == (17,)
        assert list(columns) == ["rho", "u", "p"]
        assert columns["rho"][0] == 1.0 and columns["rho"][-1] == 0.125

    def test_solve_scalar_with_snapshot(self, tmp_path):
        out = tmp_path / "transport.csv"
        code = main(["solve", "transport", "--nx", "16", "--nt", "20", "--snapshots", "0.25",
                     "--out", str(out)])
        assert code == EXIT_OK
        x, columns = read_snapshot(out)
        assert x.shape == (16,)
        np.testing.assert_allclose(columns["u"], np.sin(np.pi * (x - 0.5)), atol=1e-2)
        _, early = read_snapshot(tmp_path / "transport_t0.25.csv")
        np.testing.assert_allclose(early["u"], np.sin(np.pi * (x - 0.25)), atol=1e-2)

    def test_solve_euler(self, tmp_path):
        out = tmp_path / "sod.csv"
        assert main(["solve", "euler:preset=sod", "--nx", "16", "--out", str(out)]) == EXIT_OK
        x, columns = read_snapshot(out)
        assert x.shape == (17,)
        assert np.all(columns["rho"] > 0) and np.all(columns["p"] > 0)

    def test_unit_delta_matches_weno_z(self, tmp_path):
        z_out, ds_out = tmp_path / "z.csv", tmp_path / "ds.csv"
        base = ["solve", "burgers:ic=sine,z=1.5", "--nx", "32", "--nt", "25"]
        assert main(base + ["--out", str(z_out)]) == EXIT_OK
        assert main(base + ["--scheme", "ds", "--delta", "0.9", "--out", str(ds_out)]) == EXIT_OK
        assert z_out.read_text() == ds_out.read_text()

    def test_compare_writes_table_and_json(self, tmp_path, capsys):
        table, report = tmp_path / "table.csv", tmp_path / "report.json"
        code = main(["compare", "transport", "--nx", "16", "--out", str(table),
                     "--json", str(report)])
        assert code == EXIT_OK
        assert "linf_js" in capsys.readouterr().out
        header = table.read_text().splitlines()[0].split(",")
        assert header == ["problem", "linf_js", "linf_z", "l2_js", "l2_z"]
        document = json.loads(report.read_text())
        assert document["schemes"] == ["js", "z"]
        assert document["provenance"]["n_intervals"] == 16

    def test_compare_adds_ds_with_delta(self, tmp_path):
        report = tmp_path / "report.json"
        code = main(["compare", "transport", "--nx", "16", "--delta", "0.9", "--json", str(report)])
        assert code == EXIT_OK
        row = json.loads(report.read_text())["rows"][0]
        assert row["linf"]["ds"] == row["linf"]["z"]

    def test_convergence(self, tmp_path):
        report = tmp_path / "conv.json"
        code = main(["convergence", "--ns", "10,20", "--tfinal", "0.1", "--json", str(report)])
        assert code == EXIT_OK
        document = json.loads(report.read_text())
        assert [row["n"] for row in document["rows"]] == [10, 20]
        assert document["rows"][0]["order"] is None
        assert document["rows"][1]["order"] > 1.0
        assert document["final_time"] == 0.1

    def test_gen_dataset_to_stdout(self, capsys):
        assert main(["gen-dataset", "burgers", "--count", "3", "--seed", "4"]) == EXIT_OK
        document = json.loads(capsys.readouterr().out)
        assert document["count"] == 3
        assert len(document["samples"]) == 3
        assert all(s["family"] == "burgers" for s in document["samples"])

    def test_gen_dataset_to_file_is_reproducible(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["gen-dataset", "euler", "--count", "4", "--out", str(first)]) == EXIT_OK
        assert main(["gen-dataset", "euler", "--count", "4", "--out", str(second)]) == EXIT_OK
        assert first.read_text() == second.read_text()
