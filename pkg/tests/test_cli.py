import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from heavyhex_qec.cli import EXIT_VALIDATION, main


def run(tmp_path, *args):
    return main(["--out", str(tmp_path), *args])


def _files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.is_file()}


def test_layout_json_and_svg(tmp_path):
    assert run(tmp_path, "layout", "3", "--json", "--svg") == 0
    doc = json.loads((tmp_path / "layout_d3.json").read_text())
    assert len(doc["qubits"]) == 25
    ET.fromstring((tmp_path / "layout_d3.svg").read_text())


@pytest.mark.parametrize("d", ["4", "2"])
def test_layout_invalid_distance(tmp_path, d):
    assert run(tmp_path, "layout", d) == EXIT_VALIDATION


def test_usage_error_exit_code(tmp_path):
    with pytest.raises(SystemExit) as info:
        run(tmp_path, "threshold", "--d", "3,x", "--seed", "1")
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        run(tmp_path, "inject", "--shots", "10")  # seed is mandatory
    assert info.value.code == 2


def test_console_script_entry(tmp_path):
    out = subprocess.run([sys.executable, "-m", "heavyhex_qec", "--out", str(tmp_path), "layout", "4"],
                         capture_output=True, text=True)
    assert out.returncode == EXIT_VALIDATION and "error" in out.stderr


def test_threshold_zero_row_and_outputs(tmp_path, capsys):
    assert run(tmp_path, "threshold", "--d", "3,5", "--p-grid", "0,0.004", "--shots", "300", "--seed", "5",
               "--basis", "Z", "--quiet") == 0
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert all(float(r["p_L"]) == 0 for r in rows if float(r["p"]) == 0)
    assert {"sweep.csv", "crossing.json", "threshold.svg"} <= set(_files(tmp_path))
    assert "p_th^X" in capsys.readouterr().out


def test_threshold_synthetic_mode(tmp_path, capsys):
    assert run(tmp_path, "threshold", "--seed", "1", "--synthetic", "0.0042", "--synthetic-a", "0.7") == 0
    doc = json.loads((tmp_path / "crossing.json").read_text())
    for b in "ZX":
        assert abs(doc["crossings"][b]["p_th"] - 0.0042) / 0.0042 < 0.02
    assert "0.4200%" in capsys.readouterr().out


def test_inject_single_basis_outcomes(tmp_path):
    assert run(tmp_path, "inject", "--theta", "0", "--basis", "Z", "--shots", "500", "--seed", "2",
               "--noise-preset", "zero") == 0
    rows = list(csv.DictReader(open(tmp_path / "shots.csv")))
    assert len(rows) == 500 and {r["outcome"] for r in rows} == {"1"}


def test_inject_magic_noiseless(tmp_path):
    assert run(tmp_path, "--paper-reference", "inject", "--magic", "H", "--shots", "2000", "--seed", "2",
               "--noise-preset", "zero", "--resamples", "50") == 0
    rep = json.loads((tmp_path / "magic_H.json").read_text())
    h = rep["states"]["H"]
    assert abs(h["fidelity"] - 1.0) <= 6 / 2000 ** 0.5
    assert h["above_threshold"] and h["distillation_threshold"] == 0.854
    assert "reference" in rep["paper_reference"]["label"]
    ET.fromstring((tmp_path / "magic_H.svg").read_text())


def test_inject_grid_rows(tmp_path):
    assert run(tmp_path, "inject", "--grid", "--shots", "50", "--seed", "3", "--resamples", "10") == 0
    assert len((tmp_path / "injection_grid.csv").read_text().splitlines()) == 1 + 81 * 3
    assert len((tmp_path / "fidelity_surface.csv").read_text().splitlines()) == 1 + 81


def test_inject_angles_and_noise_flags(tmp_path):
    assert run(tmp_path, "inject", "--theta", "pi/2", "--phi", "0.5pi", "--shots", "300", "--seed", "1",
               "--noise-preset", "uniform", "--p", "0.002", "--p-spam", "0") == 0
    rep = json.loads((tmp_path / "injection_report.json").read_text())
    assert rep["noise"] == {"p1": 0.002, "p2": 0.002, "p_spam": 0.0, "p_idle": 0.002}


def test_decode_pipeline(tmp_path):
    assert run(tmp_path, "memory", "--d", "3", "--p", "0.004", "--shots", "500", "--seed", "1", "--csv") == 0
    assert run(tmp_path, "decode", "--dem", str(tmp_path / "dem.json"), "--shots", str(tmp_path / "shots.bin"),
               "--compare-exhaustive") == 0
    summary = json.loads((tmp_path / "decode_summary.json").read_text())
    assert summary["oracle_comparison"]["weight_mismatches"] == 0
    assert summary["failure_rate_err"] > 0
    first = (tmp_path / "corrections.csv").read_bytes()
    assert run(tmp_path, "decode", "--dem", str(tmp_path / "dem.json"), "--shots", str(tmp_path / "shots.csv")) == 0
    assert (tmp_path / "corrections.csv").read_bytes() == first


def test_decode_empty_syndromes(tmp_path):
    assert run(tmp_path, "memory", "--d", "3", "--shots", "200", "--seed", "1", "--noise-preset", "zero") == 0
    noisy_dir = tmp_path / "noisy"
    assert main(["--out", str(noisy_dir), "memory", "--p", "0.003", "--shots", "5", "--seed", "1"]) == 0
    # zero-noise shots decoded against a noisy model of the same circuit
    assert run(tmp_path, "decode", "--dem", str(noisy_dir / "dem.json"), "--shots", str(tmp_path / "shots.bin")) == 0
    assert json.loads((tmp_path / "decode_summary.json").read_text())["failures"] == 0


def test_decode_mismatched_dimensions(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--out", str(a), "memory", "--d", "3", "--p", "0.003", "--shots", "10", "--seed", "1"]) == 0
    assert main(["--out", str(b), "memory", "--d", "5", "--p", "0.003", "--shots", "10", "--seed", "1"]) == 0
    assert run(tmp_path, "decode", "--dem", str(a / "dem.json"), "--shots", str(b / "shots.bin")) == EXIT_VALIDATION


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HEAVYHEX_QEC_OUT", str(tmp_path / "env"))
    assert main(["layout", "3"]) == 0
    assert (tmp_path / "env" / "layout_d3.json").exists()


def test_every_subcommand_is_byte_deterministic(tmp_path):
    commands = [
        ["layout", "3", "--svg", "--json"],
        ["threshold", "--d", "3,5", "--p-grid", "0.003,0.005", "--shots", "200", "--seed", "9", "--quiet"],
        ["inject", "--theta", "1", "--phi", "2", "--shots", "400", "--seed", "9", "--resamples", "20"],
        ["inject", "--magic", "T", "--shots", "400", "--seed", "9", "--resamples", "20"],
        ["memory", "--d", "3", "--p", "0.003", "--shots", "300", "--seed", "9"],
    ]
    for k, cmd in enumerate(commands):
        outs = []
        for rep in range(2):
            d = tmp_path / f"{k}-{rep}"
            assert main(["--out", str(d), *cmd]) == 0
            outs.append(_files(d))
        assert outs[0] == outs[1] and outs[0]
