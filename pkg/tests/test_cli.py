"""Tests for the eqlab command-line runner."""

import argparse
import json
from unittest.mock import patch

import pytest

from eqlab import cli
from eqlab.cli import build_parser, config_from_args, direction, main, positive_int, unit_offset, vector
from eqlab.flows import CoEvolutionSeries

CUBE_OFF = """\
OFF
8 6 12
0 0 0
1 0 0
1 1 0
0 1 0
0 0 1
1 0 1
1 1 1
0 1 1
4 0 3 2 1
4 4 5 6 7
4 0 1 5 4
4 1 2 6 5
4 2 3 7 6
4 3 0 4 7
"""


def read_json(path):
    """Load a JSON artifact."""
    return json.loads(path.read_text(encoding="utf-8"))


def test_vector_and_direction():
    """Test vector parsing and the umbilic keyword."""
    assert vector("1,0,0.5") == (1.0, 0.0, 0.5)
    assert direction("umbilic") == "umbilic"
    assert direction("0,0,1") == (0.0, 0.0, 1.0)
    with pytest.raises(argparse.ArgumentTypeError):
        vector("1,a")
    with pytest.raises(argparse.ArgumentTypeError, match="3 components"):
        direction("1,0")


def test_unit_offset_and_positive_int():
    """Test bounded argument types."""
    assert unit_offset("0.25") == 0.25
    assert positive_int("7") == 7
    with pytest.raises(argparse.ArgumentTypeError):
        unit_offset("1.0")
    with pytest.raises(argparse.ArgumentTypeError):
        positive_int("0")


def test_config_from_args_ignores_unset_flags():
    """Test that only given flags reach the config."""
    args = build_parser().parse_args(["equilibria", "--shape", "sevenfold", "--n", "64"])
    config = config_from_args(args)
    assert config.experiment == "equilibria"
    assert config.n == 64
    assert config.offset == 0.0


def test_flags_override_config_file(tmp_path):
    """Test that command-line flags win over the JSON config."""
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"shape": "ellipse:2,1.5", "n": 100}), encoding="utf-8")
    args = build_parser().parse_args(["equilibria", "--config", str(path), "--n", "300"])
    config = config_from_args(args)
    assert config.shape == "ellipse:2,1.5"
    assert config.n == 300


def test_no_command_prints_help(capsys):
    """Test that a bare invocation shows usage."""
    main([])
    assert "usage: eqlab" in capsys.readouterr().out


def test_equilibria_ellipse(tmp_path):
    """Test the planar equilibria run and its artifacts."""
    out = tmp_path / "run"
    main(["equilibria", "--shape", "ellipse:2,1.5", "--n", "400", "--offset", "0.13", "--out", str(out)])
    summary = read_json(out / "summary.json")
    assert (summary["S"], summary["U"], summary["N"]) == (2, 2, 4)
    assert summary["flocks"] == 4
    manifest = read_json(out / "manifest.json")
    assert manifest["files"] == ["equilibria.csv", "smooth.csv", "summary.json"]
    assert manifest["config"]["offset"] == 0.13
    header = (out / "equilibria.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "feature_type,index,x,y,stability"


def test_equilibria_mesh_file(tmp_path):
    """Test the polyhedral equilibria run on a cube file."""
    mesh = tmp_path / "cube.off"
    mesh.write_text(CUBE_OFF, encoding="utf-8")
    out = tmp_path / "run"
    main(["equilibria", "--mesh", str(mesh), "--out", str(out)])
    summary = read_json(out / "summary.json")
    assert (summary["S_delta"], summary["H_delta"], summary["U_delta"]) == (6, 12, 8)
    assert summary["index"] == 2
    assert summary["o"] == pytest.approx([0.5, 0.5, 0.5])
    assert read_json(out / "equilibria.json")["unstable_vertices"] == list(range(8))


def test_events_run(tmp_path):
    """Test one annihilation when o leaves the astroid of the ellipse."""
    out = tmp_path / "run"
    main(
        [
            "events", "--shape", "ellipse:2,1.5", "--from", "0.2,0", "--to", "0.2,1.2",
            "--n", "64", "--offset", "0.3", "--out", str(out),
        ]
    )
    summary = read_json(out / "summary.json")
    assert summary["N_start"] == 4
    assert summary["N_end"] == 2
    assert summary["N_reconstructed"] == 2
    assert (summary["creations"], summary["annihilations"]) == (0, 1)
    (event,) = [json.loads(line) for line in (out / "events.jsonl").read_text(encoding="utf-8").splitlines()]
    assert event["t"] == pytest.approx(0.4817, abs=2e-3)


def test_flow_run(tmp_path):
    """Test a short curve-shortening run."""
    out = tmp_path / "run"
    main(["flow", "--shape", "sevenfold", "--steps", "5", "--seed", "1", "--out", str(out)])
    summary = read_json(out / "summary.json")
    assert summary["kind"] == "csf"
    assert summary["records"] == 6
    assert (out / "series.csv").exists()
    assert (out / "events.jsonl").exists()


def test_flow_out_csv_with_alias(tmp_path):
    """Test a flow run on an alias shape whose --out names the series table."""
    target = tmp_path / "run" / "fig4.csv"
    main(
        ["flow", "--shape", "fig4", "--n", "128", "--steps", "3", "--seed", "1", "--out", str(target)]
    )
    run_dir = tmp_path / "run"
    summary = read_json(run_dir / "summary.json")
    assert summary["records"] == 4
    assert summary["forecast"] == []
    manifest = read_json(run_dir / "manifest.json")
    assert manifest["files"] == ["events.jsonl", "fig4.csv", "summary.json"]
    assert manifest["config"]["n"] == 128
    header = target.read_text(encoding="utf-8").splitlines()[0]
    assert header == ",".join(CoEvolutionSeries.COLUMNS)


def test_flow_polygon_size_flag(tmp_path):
    """Test that --n sets the number of flow polygon vertices."""
    with patch.object(cli, "FlowState", wraps=cli.FlowState) as state:
        main(
            [
                "flow", "--shape", "sevenfold", "--n", "96", "--steps", "1",
                "--seed", "1", "--out", str(tmp_path),
            ]
        )
    assert state.from_curve.call_args.args[1] == 96


def test_caustic_sweep_on_file_mesh(tmp_path):
    """Test a sweep through a cube without a smooth model."""
    mesh = tmp_path / "cube.off"
    mesh.write_text(CUBE_OFF, encoding="utf-8")
    out = tmp_path / "run"
    main(["caustic-sweep", "--mesh", str(mesh), "--dir", "1,0,0", "--tmax", "0.3", "--steps", "3", "--out", str(out)])
    summary = read_json(out / "summary.json")
    assert summary["steps"] == 4
    assert summary["index_ok"] is True
    assert summary["N_change"] is None


def test_umbilic_needs_ellipsoid(tmp_path):
    """Test that the umbilic direction is refused for file meshes."""
    mesh = tmp_path / "cube.off"
    mesh.write_text(CUBE_OFF, encoding="utf-8")
    with pytest.raises(SystemExit) as info:
        main(["caustic-sweep", "--mesh", str(mesh), "--dir", "umbilic", "--out", str(tmp_path / "run")])
    assert info.value.code == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["equilibria", "--shape", "spiral"],
        ["random-mesh", "--kappa-rho", "-0.5"],
        ["events", "--shape", "sevenfold", "--from", "0,0"],
    ],
)
def test_errors_exit_with_code_one(tmp_path, argv):
    """Test that eqlab errors end the process with status 1."""
    with pytest.raises(SystemExit) as info:
        main(argv + ["--out", str(tmp_path / "run")])
    assert info.value.code == 1


def test_error_names_flag(tmp_path, capsys):
    """Test that a configuration error points at the flag to change."""
    with pytest.raises(SystemExit):
        main(["events", "--shape", "sevenfold", "--to", "0,1", "--out", str(tmp_path / "run")])
    out = capsys.readouterr().out
    assert "ConfigError" in out
    assert "set --from or the config key 'o_start'" in out


def test_threads_from_environment(tmp_path, monkeypatch):
    """Test that EQLAB_THREADS reaches the Monte Carlo workers."""
    monkeypatch.setenv("EQLAB_THREADS", "2")
    with patch.object(cli, "monte_carlo_random_mesh", wraps=cli.monte_carlo_random_mesh) as mc:
        main(["random-mesh", "--seed", "3", "--trials", "200", "--n", "20", "--out", str(tmp_path / "run")])
    assert mc.call_args.kwargs["workers"] == 2
    summary = read_json(tmp_path / "run" / "summary.json")
    assert summary["primary"] == "n-1"
