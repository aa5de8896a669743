import xml.etree.ElementTree as ET

from heavyhex_qec.experiments.injection import run_injection_grid, summarize
from heavyhex_qec.experiments.magic import magic_state_report
from heavyhex_qec.experiments.memory import SweepResult, estimate_crossing, synthetic_rows
from heavyhex_qec.noise import NoiseModel
from heavyhex_qec.plotting import density_matrix_figure, fidelity_heatmap, threshold_figure


def _twice(tmp_path, draw, name):
    a, b = tmp_path / f"a-{name}", tmp_path / f"b-{name}"
    draw(a)
    draw(b)
    ET.fromstring(a.read_text())
    assert a.read_bytes() == b.read_bytes()


def test_threshold_figure(tmp_path):
    rows = synthetic_rows([3, 5, 7], [0.002, 0.004, 0.006], 0.0035, 0.1, 0.8, "X")
    rows += synthetic_rows([3, 5, 7], [0.002, 0.004, 0.006], 0.004, 0.1, 1.0, "Z")
    res = SweepResult(rows, {b: estimate_crossing(rows, b) for b in "XZ"})
    _twice(tmp_path, lambda p: threshold_figure(res, p, {"X": 0.0031, "Z": 0.0037}), "thr")


def test_fidelity_heatmap(tmp_path):
    pts = summarize(run_injection_grid([0.0, 1.0], [0.0, 2.0], 200, NoiseModel.uniform(2e-3), seed=1), 20)
    _twice(tmp_path, lambda p: fidelity_heatmap(pts, p), "heat")


def test_density_matrix_figure(tmp_path):
    rep = magic_state_report(NoiseModel.uniform(1e-3), 500, seed=2, resamples=20)
    _twice(tmp_path, lambda p: density_matrix_figure(rep, p), "rho")
