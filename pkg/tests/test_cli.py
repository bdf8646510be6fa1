import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from flexmatrix.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, EXIT_VERIFY, cmd_verify, main
from flexmatrix.io import ConfigError, RunConfig, config_from_dict, load_config, read_sessions_csv
from flexmatrix.matrix import Normalization, read_matrix_csv
from flexmatrix.solvers import min_load_flow

FIXTURES = Path(__file__).parent / "fixtures"
HEADER = "vehicle_id,arrival_slot,departure_slot,energy_kwh,max_rate_kw\n"


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_inflexible_fixture_gives_all_zero_csv(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert main(["matrix", "--config", str(FIXTURES / "inflexible.json"), "--out-csv", str(out)]) == EXIT_OK
    m = read_matrix_csv(out)
    assert m.values.shape == (12, 48)
    assert np.all(m.values[m.valid_mask] == 0.0)
    assert "peak reduction potential: 0.000000 kW" in capsys.readouterr().out


def test_bad_ordering_row_is_named(tmp_path, capsys):
    sessions = write(tmp_path / "s.csv", HEADER + "a,0,3,10,10\nb,5,4,1,10\n")
    code = main(["matrix", "--sessions", str(sessions), "--out-csv", str(tmp_path / "m.csv")])
    assert code == EXIT_CONFIG
    assert "row 3" in capsys.readouterr().err


def test_unparseable_row_is_config_error(tmp_path, capsys):
    sessions = write(tmp_path / "s.csv", HEADER + "a,zero,3,10,10\n")
    assert main(["matrix", "--sessions", str(sessions), "--out-csv", str(tmp_path / "m.csv")]) == EXIT_CONFIG
    assert "row 2" in capsys.readouterr().err


def test_energy_beyond_dwell_is_infeasible(tmp_path):
    sessions = write(tmp_path / "s.csv", HEADER + "a,0,1,30,10\n")
    assert main(["matrix", "--sessions", str(sessions), "--out-csv", str(tmp_path / "m.csv")]) == EXIT_INFEASIBLE


def test_jointly_infeasible_group_exits_2(tmp_path, capsys):
    write(tmp_path / "s.csv", HEADER + "a,0,1,10,10\nb,0,1,10,10\n")
    cfg = write(tmp_path / "c.json", json.dumps({
        "num_slots": 2, "max_delay": 1, "sessions": "s.csv",
        "capacity_groups": [{"members": ["a", "b"], "capacity_kw": 5}],
    }))
    assert main(["matrix", "--config", str(cfg), "--out-csv", str(tmp_path / "m.csv")]) == EXIT_INFEASIBLE
    assert "infeasible" in capsys.readouterr().err


def test_capacity_group_run_and_negative_warning(tmp_path, capsys):
    write(tmp_path / "s.csv", HEADER + "a,0,1,10,10\nb,0,1,10,10\n")
    cfg = write(tmp_path / "c.json", json.dumps({
        "num_slots": 2, "max_delay": 1, "sessions": "s.csv", "horizon_start_hour": 0,
        "capacity_groups": [{"members": ["a", "b"], "capacity_kw": 10}],
    }))
    out = tmp_path / "m.csv"
    assert main(["matrix", "--config", str(cfg), "--out-csv", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[1] == "1,10.000000,-10.000000"
    assert "negative cells" in capsys.readouterr().out


def test_missing_sessions_file_exits_3(tmp_path):
    assert main(["matrix", "--sessions", str(tmp_path / "nope.csv"), "--out-csv", str(tmp_path / "m.csv")]) == EXIT_IO


def test_missing_config_file_exits_3(tmp_path):
    assert main(["matrix", "--config", str(tmp_path / "nope.json")]) == EXIT_IO


def test_unwritable_output_exits_3(tmp_path):
    blocker = write(tmp_path / "file", "x")
    code = main(["matrix", "--config", str(FIXTURES / "inflexible.json"), "--out-csv", str(blocker / "m.csv")])
    assert code == EXIT_IO


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({"colour": "blue"})
    with pytest.raises(ConfigError, match="exactly one"):
        RunConfig().validate()
    with pytest.raises(ConfigError, match="max_delay"):
        config_from_dict({"archetype": "freight", "max_delay": 49}).validate()
    assert main(["matrix", "--archetype", "freight", "--max-delay", "0"]) == EXIT_CONFIG


def test_config_paths_resolve_against_config_dir(tmp_path):
    cfg = write(tmp_path / "c.json", json.dumps({"sessions": "s.csv", "out_csv": "out/m.csv"}))
    config = load_config(cfg)
    assert config.sessions_path == tmp_path / "s.csv"
    assert config.out_csv == tmp_path / "out" / "m.csv"
    assert config.horizon.start_hour == 12.0
    assert config.effective_normalization() is Normalization.AGGREGATE
    assert config_from_dict({"archetype": "transit"}).effective_normalization() is Normalization.PER_VEHICLE


def test_archetype_run_writes_csv_and_svg(tmp_path, capsys):
    csv_path, svg_path = tmp_path / "m.csv", tmp_path / "m.svg"
    code = main(["matrix", "--archetype", "transit", "--fleet-size", "10", "--samples", "3",
                 "--max-delay", "4", "--out-csv", str(csv_path), "--out-svg", str(svg_path)])
    assert code == EXIT_OK
    assert svg_path.read_text().startswith("<?xml")
    assert "kW per vehicle" in capsys.readouterr().out


def test_verify_passes():
    assert cmd_verify(RunConfig(), 100, 0) == EXIT_OK


def test_verify_with_no_trials_is_vacuous(capsys):
    assert main(["verify", "--trials", "0"]) == EXIT_OK
    assert "trials: 0" in capsys.readouterr().out


def test_verify_catches_a_corrupted_solver(capsys):
    def corrupted(constraints, horizon, window, resolution_kwh):
        sol = min_load_flow(constraints, horizon, window, resolution_kwh)
        return type(sol)(sol.window, sol.schedule, sol.in_window_energy_kwh + 1.0)

    assert cmd_verify(RunConfig(), 5, 0, flow_solver=corrupted) == EXIT_VERIFY
    assert "FAIL trial 0" in capsys.readouterr().out


def test_sample_round_trips_through_matrix(tmp_path, capsys):
    fleet = tmp_path / "fleet.csv"
    assert main(["sample", "--archetype", "freight", "--fleet-size", "20", "--seed", "4",
                 "--out-csv", str(fleet)]) == EXIT_OK
    assert len(read_sessions_csv(fleet)) == 20
    assert main(["sample", "--archetype", "freight", "--fleet-size", "20", "--seed", "4"]) == EXIT_OK
    assert capsys.readouterr().out == fleet.read_text()
    assert main(["matrix", "--sessions", str(fleet), "--out-csv", str(tmp_path / "m.csv")]) == EXIT_OK


def test_sample_requires_archetype():
    assert main(["sample"]) == EXIT_CONFIG


def test_heatmap_subcommand(tmp_path):
    csv_path = tmp_path / "m.csv"
    shutil.copy(FIXTURES / "inflexible_sessions.csv", tmp_path / "s.csv")
    assert main(["matrix", "--sessions", str(tmp_path / "s.csv"), "--out-csv", str(csv_path)]) == EXIT_OK
    svg = tmp_path / "h.svg"
    assert main(["heatmap", str(csv_path), "--out-svg", str(svg)]) == EXIT_OK
    assert "12:00" in svg.read_text()
    assert main(["heatmap", str(tmp_path / "missing.csv"), "--out-svg", str(svg)]) == EXIT_IO


def test_heatmap_of_fully_masked_csv(tmp_path):
    csv_path = write(tmp_path / "m.csv", "k\\t,0\n1,\n")
    assert main(["heatmap", str(csv_path), "--out-svg", str(tmp_path / "h.svg")]) == EXIT_CONFIG
