import numpy as np

from nfclab.cli import (EXIT_ANALYSIS_FAILURE, EXIT_PARSE_FAILURE,
                        EXIT_UNKNOWN_PRESET, RUN_FILES, main)


def run(args):
    return main(args)


def test_run_los_lab(tmp_path, capsys):
    assert run(["run", "los_lab", "--out", str(tmp_path)]) == 0
    for name in RUN_FILES:
        assert (tmp_path / name).exists(), name
    report = (tmp_path / "report.txt").read_text()
    assert "thresholds and defaults used:" in report
    assert "cmd_threshold_tau" in report
    assert "received power spread" in report
    out = capsys.readouterr().out
    assert "PASS" in out


def test_run_olos_notes_boundary_near_26(tmp_path):
    assert run(["run", "olos_baffle", "--out", str(tmp_path), "--criterion", "cmd"]) == 0
    report = (tmp_path / "report.txt").read_text()
    assert "cmd partition" in report
    boundary_line = next(line for line in report.splitlines() if "cmd partition" in line)
    boundaries = [int(tok) for tok in boundary_line.split("boundaries at")[-1].replace(",", " ").split()
                  if tok.isdigit()]
    assert any(24 <= b <= 28 for b in boundaries)
    # power drop visible in stats.csv
    rows = (tmp_path / "stats.csv").read_text().strip().splitlines()[1:]
    power = np.array([float(r.split(",")[1]) for r in rows])
    assert power.max() - power.min() > 10.0


def test_run_missing_file_exit_3(tmp_path):
    assert run(["run", "missing.toml", "--out", str(tmp_path)]) == EXIT_PARSE_FAILURE


def test_run_unknown_preset_exit_2(tmp_path):
    assert run(["run", "not_a_preset", "--out", str(tmp_path)]) == EXIT_UNKNOWN_PRESET


def test_run_malformed_file_exit_3(tmp_path):
    bad = tmp_path / "bad.scene"
    bad.write_text("[array]\nn_elements = -3\n[rx]\nposition = 0,5,2.5\n")
    assert run(["run", str(bad), "--out", str(tmp_path / "out")]) == EXIT_PARSE_FAILURE


def test_run_analysis_failure_exit_4(tmp_path):
    # two elements cannot support the slope criterion's centered differences
    tiny = tmp_path / "tiny.scene"
    tiny.write_text("[array]\nn_elements = 2\n[rx]\nposition = 1.0, 6.0, 2.5\n")
    assert run(["run", str(tiny), "--out", str(tmp_path / "out"),
                "--criterion", "slope"]) == EXIT_ANALYSIS_FAILURE


def test_run_scenario_file_roundtrip(tmp_path):
    scenario = tmp_path / "small.scene"
    scenario.write_text("[array]\nn_elements = 8\n[sweep]\nn_points = 101\n"
                        "[rx]\nposition = 1.0, 6.0, 2.5\n")
    out = tmp_path / "out"
    assert run(["run", str(scenario), "--out", str(out)]) == 0
    rows = (out / "cfr.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 8 * 101


def test_run_deterministic_outputs(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(["run", "olos_baffle", "--seed", "7", "--out", str(out1)]) == 0
    assert run(["run", "olos_baffle", "--seed", "7", "--out", str(out2)]) == 0
    for name in RUN_FILES:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_noise_floor_flag_changes_cfr(tmp_path):
    quiet, noisy = tmp_path / "q", tmp_path / "n"
    assert run(["run", "los_lab", "--out", str(quiet)]) == 0
    assert run(["run", "los_lab", "--out", str(noisy), "--noise-floor", "-90",
                "--seed", "3"]) == 0
    assert (quiet / "cfr.csv").read_bytes() != (noisy / "cfr.csv").read_bytes()


def test_freq_points_override(tmp_path):
    out = tmp_path / "out"
    assert run(["run", "los_lab", "--out", str(out), "--freq-points", "201"]) == 0
    rows = (out / "cfr.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 64 * 201


def test_phase_check_close_range(tmp_path, capsys):
    assert run(["phase-check", "los_lab", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    corr = float(out.split("corr(measured, near-field model) = ")[1].splitlines()[0])
    assert corr > 0.99
    assert (tmp_path / "phase_check.csv").exists()


def test_phase_check_far_field_limit(tmp_path, capsys):
    assert run(["phase-check", "los_lab", "--out", str(tmp_path),
                "--distance-mult", "1000"]) == 0
    out = capsys.readouterr().out
    gap = float(out.split("signed far-field| = ")[1].split(" rad")[0])
    assert gap < 1e-3


def test_phase_check_single_element(tmp_path):
    scenario = tmp_path / "single.scene"
    scenario.write_text("[array]\nn_elements = 1\n[rx]\nposition = 0.5, 6.0, 2.5\n")
    out = tmp_path / "out"
    assert run(["phase-check", str(scenario), "--out", str(out)]) == 0
    rows = (out / "phase_check.csv").read_text().strip().splitlines()
    assert len(rows) == 2
    _, measured, model, far = rows[1].split(",")
    assert float(measured) == 0.0 and float(model) == 0.0 and float(far) == 0.0
