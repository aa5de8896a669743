"""Command-line front end.

Every subcommand writes plain files (CSV, JSON, SVG, packed binary) into an
output directory given by ``--out``, by the ``HEAVYHEX_QEC_OUT`` environment
variable, or ``./heavyhex-out``.  Exit codes: 0 success, 2 usage error,
3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .builders import SCHEDULES, build_memory_circuit
from .circuit import serialize
from .decoding.dem import DetectorErrorModel, build_dem
from .decoding.matching import MatchingGraph, decode_exhaustive, MAX_EXHAUSTIVE_DEFECTS
from .experiments.fit import fit_scaling
from .experiments.injection import (acceptance_table, default_grid, fidelity_csv, grid_csv, run_injection_grid,
                                    run_injection_point, summarize, _injection_circuit)
from .experiments.magic import MAGIC_STATES, PAPER_REFERENCE, REFERENCE_LABEL, magic_state_report, report_text
from .experiments.memory import SweepResult, estimate_crossing, synthetic_rows, threshold_sweep
from .experiments.seeding import job_seed
from .lattice import build_layout, injection_layout, qubit_counts, render_svg
from .noise import NoiseModel, apply_noise, calibrated_preset
from .sim.sampling import ShotBatch, frame_sample, injected_frame_sample

OUT_ENV = "HEAVYHEX_QEC_OUT"
EXIT_OK, EXIT_USAGE, EXIT_VALIDATION = 0, 2, 3
PUBLISHED_THRESHOLDS = {"Z": 0.0031, "X": 0.0037}  # keyed by error type


class ValidationError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _angle(text: str) -> float:
    """Accepts plain numbers and multiples of pi such as ``pi/4`` or ``0.5pi``."""
    t = text.strip().lower().replace(" ", "")
    try:
        if "pi" not in t:
            return float(t)
        num, _, den = t.partition("/")
        coef = num.replace("*", "").replace("pi", "")
        value = (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
        return value / float(den) if den else value
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot read angle {text!r}") from None


def _out_dir(args) -> Path:
    path = Path(args.out or os.environ.get(OUT_ENV) or "heavyhex-out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _noise(args) -> NoiseModel:
    if getattr(args, "noise_json", None):
        model = NoiseModel.from_json(Path(args.noise_json).read_text())
    elif args.noise_preset == "calibrated":
        model = calibrated_preset()
    elif args.noise_preset == "zero":
        model = NoiseModel.uniform(0.0)
    else:
        model = NoiseModel.uniform(args.p)
    fields = {k: getattr(args, k) for k in ("p1", "p2", "p_spam", "p_idle") if getattr(args, k) is not None}
    if fields:
        model = NoiseModel(**{**json.loads(model.to_json()), **fields})
    if args.noise_scale != 1.0:
        model = model.scaled(args.noise_scale)
    return model


def _add_noise_flags(p: argparse.ArgumentParser, default_preset: str) -> None:
    g = p.add_argument_group("noise")
    g.add_argument("--noise-preset", choices=("uniform", "calibrated", "zero"), default=default_preset)
    g.add_argument("--p", type=float, default=1e-3, help="uniform error rate for --noise-preset uniform")
    g.add_argument("--noise-json", help="noise model file {p1, p2, p_spam, p_idle}")
    for name in ("p1", "p2", "p-spam", "p-idle"):
        g.add_argument(f"--{name}", type=float, default=None, help="override one noise field")
    g.add_argument("--noise-scale", type=float, default=1.0, help="multiply every noise probability")


# --- subcommands -------------------------------------------------------------

def cmd_layout(args) -> int:
    layout = build_layout(args.d)
    out = _out_dir(args)
    inj = injection_layout(layout) if args.injection else None
    written = []
    if args.json or not args.svg:
        path = Path(args.json) if isinstance(args.json, str) else out / f"layout_d{args.d}.json"
        _write(path, layout.to_json() + "\n")
        written.append(path)
    if args.svg:
        path = Path(args.svg) if isinstance(args.svg, str) else out / f"layout_d{args.d}.svg"
        _write(path, render_svg(layout, inj))
        written.append(path)
    data, total = qubit_counts(args.d)
    print(f"d={args.d}: {data} data qubits, {total} qubits in total")
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_threshold(args) -> int:
    out = _out_dir(args)
    bases = ("Z", "X") if args.basis == "both" else (args.basis,)
    if args.synthetic is not None:
        rows = []
        for b in bases:
            rows += synthetic_rows(args.d, args.p_grid, args.synthetic, args.synthetic_C, args.synthetic_a, b)
        result = SweepResult(rows, {b: estimate_crossing(rows, b) for b in bases})
    else:
        def progress(row):
            print(f"  {row.basis} d={row.d} p={row.p:g}: {row.failures}/{row.shots} failures, "
                  f"p_L/round={row.p_L:.4g} ± {row.err:.2g}", file=sys.stderr, flush=True)

        result = threshold_sweep(args.d, args.p_grid, args.shots, bases, args.seed, args.rounds,
                                 args.schedule, args.workers, progress=None if args.quiet else progress)
    _write(out / "sweep.csv", result.to_csv())
    doc = {"seed": args.seed, "shots": args.shots, "schedule": args.schedule,
           "note": "basis = memory basis; X-basis memory measures logical Z (phase-flip) errors",
           "crossings": {b: c.to_dict() for b, c in result.crossings.items()}}
    sub = [r for r in result.rows if r.p <= args.fit_max_p]
    fits = {}
    for b, c in result.crossings.items():
        if c.value is not None and any(r.basis == b and r.p < c.value for r in sub):
            try:
                fits[b] = fit_scaling([r for r in sub if r.p < c.value], c.value, b).to_dict()
            except ValueError as exc:
                fits[b] = {"error": str(exc)}
    doc["fits"] = fits
    if args.paper_reference:
        doc["paper_reference"] = {"label": REFERENCE_LABEL,
                                  "p_th_Z": PAPER_REFERENCE["p_th_Z"], "p_th_X": PAPER_REFERENCE["p_th_X"]}
    _write(out / "crossing.json", _dump(doc))
    ref = None
    if args.paper_reference:
        # memory basis X sees logical Z errors and vice versa
        ref = {"X": PUBLISHED_THRESHOLDS["Z"], "Z": PUBLISHED_THRESHOLDS["X"]}
    plotting.threshold_figure(result, out / "threshold.svg", ref)
    for b, c in result.crossings.items():
        err_type = "Z" if b == "X" else "X"
        if c.value is None:
            print(f"p_th^{err_type} ({b}-basis memory): {c.status}")
        else:
            print(f"p_th^{err_type} ({b}-basis memory): {100 * c.value:.4f}%")
    return EXIT_OK


def _bases(text: str) -> tuple[str, ...]:
    return ("X", "Y", "Z") if text == "all" else (text,)


def cmd_inject(args) -> int:
    out = _out_dir(args)
    noise = _noise(args)
    if args.magic:
        report = magic_state_report(noise, args.shots, args.seed, args.resamples, states=(args.magic,),
                                    paper_reference=args.paper_reference)
        _write(out / f"magic_{args.magic}.json", _dump(report))
        plotting.density_matrix_figure(report, out / f"magic_{args.magic}.svg")
        sys.stdout.write(report_text(report))
        return EXIT_OK
    bases = _bases(args.basis)
    if args.grid:
        grid = default_grid()
        points = run_injection_grid(grid, grid, args.shots, noise, args.seed, bases, args.workers)
    else:
        points = [run_injection_point(args.theta, args.phi, args.shots, noise, args.seed, bases)]
    _write(out / "injection_grid.csv", grid_csv(points))
    _write(out / "acceptance.csv", acceptance_table(points))
    report = {"noise": json.loads(noise.to_json()), "shots_per_basis": args.shots, "seed": args.seed,
              "points": len(points)}
    if set(bases) == {"X", "Y", "Z"}:
        summaries = summarize(points, args.resamples, args.seed)
        _write(out / "fidelity_surface.csv", fidelity_csv(summaries))
        vals = [s.fidelity.value for s in summaries if s.fidelity is not None]
        if vals:
            report.update({"fidelity_min": min(vals), "fidelity_mean": float(np.mean(vals)),
                           "fidelity_mean_std": float(np.std(vals))})
        if args.grid:
            plotting.fidelity_heatmap(summaries, out / "fidelity_surface.svg")
        for s in summaries:
            if s.fidelity is None:
                print(f"theta={s.counts.theta:.4f} phi={s.counts.phi:.4f}: no accepted shots in some basis")
            elif not args.grid:
                print(f"theta={s.counts.theta:.4f} phi={s.counts.phi:.4f}: F = {s.fidelity}, "
                      f"acceptance {100 * s.counts.acceptance:.2f}%")
    report["acceptance_mean"] = float(np.mean([c.acceptance for c in points]))
    if args.paper_reference:
        report["paper_reference"] = {"label": REFERENCE_LABEL, "values": PAPER_REFERENCE}
    _write(out / "injection_report.json", _dump(report))
    if not args.grid and len(bases) == 1:
        # per-shot records of the single run
        circuit, table = _injection_circuit(args.theta, args.phi, bases[0], noise)
        batch = injected_frame_sample(circuit, args.shots,
                                      job_seed(args.seed, "inject", bases[0], float(args.theta), float(args.phi)),
                                      table)
        _write(out / "shots.csv", batch.to_csv())
    print(f"mean acceptance {100 * report['acceptance_mean']:.2f}% over {len(points)} state(s)")
    return EXIT_OK


def cmd_memory(args) -> int:
    """Sample one noisy memory experiment and export circuit, DEM and shots."""
    out = _out_dir(args)
    noise = _noise(args)
    layout = build_layout(args.d)
    rounds = args.rounds or args.d
    circuit = apply_noise(build_memory_circuit(layout, args.basis, rounds, schedule=args.schedule), noise)
    dem = build_dem(circuit)
    batch = frame_sample(circuit, args.shots, args.seed, workers=args.workers)
    _write(out / "circuit.txt", serialize(circuit))
    _write(out / "dem.json", dem.to_json() + "\n")
    (out / "shots.bin").write_bytes(batch.to_bytes())
    if args.csv:
        _write(out / "shots.csv", batch.to_csv())
    print(f"{circuit.num_detectors} detectors, {len(dem.mechanisms)} DEM mechanisms, {args.shots} shots")
    return EXIT_OK


def _load_shots(path: Path) -> tuple[np.ndarray, np.ndarray | None]:
    data = path.read_bytes()
    if data[:4] == b"HHQS":
        batch = ShotBatch.from_bytes(data)
        return batch.detectors, batch.observables
    lines = data.decode().strip().splitlines()
    head = lines[0].split(",")
    dcols = [i for i, h in enumerate(head) if h.startswith("D")]
    lcols = [i for i, h in enumerate(head) if h.startswith("L")]
    rows = [line.split(",") for line in lines[1:]]
    dets = np.array([[int(r[i]) for i in dcols] for r in rows], dtype=np.uint8).reshape(len(rows), len(dcols))
    obs = np.array([[int(r[i]) for i in lcols] for r in rows], dtype=np.uint8).reshape(len(rows), len(lcols))
    return dets, (obs if lcols else None)


def cmd_decode(args) -> int:
    out = _out_dir(args)
    dem = DetectorErrorModel.from_json(Path(args.dem).read_text())
    dets, obs = _load_shots(Path(args.shots))
    if dets.shape[1] != dem.num_detectors:
        raise ValidationError(f"shots have {dets.shape[1]} detector columns but the DEM has {dem.num_detectors}")
    if obs is not None and obs.shape[1] != dem.num_observables:
        raise ValidationError(f"shots have {obs.shape[1]} observable columns but the DEM has {dem.num_observables}")
    graph = MatchingGraph.from_dem(dem)
    predicted = graph.decode_batch(dets)
    actual = None
    if obs is not None:
        actual = (obs.astype(np.int64) << np.arange(obs.shape[1], dtype=np.int64)).sum(axis=1)
    lines = ["shot,predicted" + (",actual" if actual is not None else "")]
    for s, pr in enumerate(predicted):
        lines.append(f"{s},{int(pr)}" + (f",{int(actual[s])}" if actual is not None else ""))
    _write(out / "corrections.csv", "\n".join(lines) + "\n")
    summary = {"shots": int(len(dets))}
    if actual is not None:
        fails = int(np.count_nonzero(predicted != actual))
        rate = fails / len(dets) if len(dets) else 0.0
        summary.update({"failures": fails, "failure_rate": rate,
                        "failure_rate_err": math.sqrt(rate * (1 - rate) / len(dets)) if len(dets) else 0.0})
    if args.compare_exhaustive:
        mismatches = checked = 0
        for row in dets:
            defects = np.flatnonzero(row)
            if len(defects) > MAX_EXHAUSTIVE_DEFECTS:
                continue
            checked += 1
            if graph.decode(defects).weight != decode_exhaustive(graph, defects).weight:
                mismatches += 1
        summary["oracle_comparison"] = {"checked": checked, "weight_mismatches": mismatches}
        print(f"exhaustive oracle: {mismatches} weight mismatches over {checked} shots")
        if mismatches:
            _write(out / "decode_summary.json", _dump(summary))
            return EXIT_VALIDATION
    _write(out / "decode_summary.json", _dump(summary))
    if "failures" in summary:
        print(f"failures {summary['failures']}/{summary['shots']} "
              f"(rate {summary['failure_rate']:.4g} ± {summary['failure_rate_err']:.2g})")
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heavyhex-qec", description=__doc__.splitlines()[0])
    parser.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./heavyhex-out)")
    parser.add_argument("--workers", type=int, default=1, help="parallel worker processes (results unchanged)")
    parser.add_argument("--paper-reference", action="store_true",
                        help="add the published numbers to reports as labeled reference rows")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("layout", help="qubit layout as JSON and/or SVG")
    p.add_argument("d", type=int)
    p.add_argument("--json", nargs="?", const=True, default=None, help="write JSON (optional path)")
    p.add_argument("--svg", nargs="?", const=True, default=None, help="write SVG (optional path)")
    p.add_argument("--injection", action="store_true", help="color the SVG by the injection layout (d=3)")
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("threshold", help="memory threshold sweep")
    p.add_argument("--d", type=_ints, default=[3, 5, 7])
    p.add_argument("--p-grid", type=_floats, default=[0.002, 0.003, 0.004, 0.005, 0.006])
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--basis", choices=("Z", "X", "both"), default="both", help="memory basis")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rounds", type=int, default=None, help="rounds per experiment (default d)")
    p.add_argument("--schedule", choices=SCHEDULES, default="sequential")
    p.add_argument("--fit-max-p", type=float, default=0.002, help="largest p used in the scaling fit")
    p.add_argument("--synthetic", type=float, default=None, metavar="P_TH",
                   help="skip simulation; analyse exact scaling-law curves crossing at P_TH")
    p.add_argument("--synthetic-C", type=float, default=0.1)
    p.add_argument("--synthetic-a", type=float, default=1.0)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("inject", help="state injection, tomography and fidelity")
    p.add_argument("--theta", type=_angle, default=0.0)
    p.add_argument("--phi", type=_angle, default=0.0)
    p.add_argument("--basis", choices=("X", "Y", "Z", "all"), default="all")
    p.add_argument("--shots", type=int, default=20_000, help="shots per basis")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--grid", action="store_true", help="run the 81-point (theta, phi) grid")
    p.add_argument("--magic", choices=tuple(MAGIC_STATES), help="magic-state report for |H> or |T>")
    p.add_argument("--resamples", type=int, default=1000, help="bootstrap resamples")
    _add_noise_flags(p, "calibrated")
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("memory", help="export one noisy memory experiment (circuit, DEM, shots)")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--basis", choices=("Z", "X"), default="Z")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--schedule", choices=SCHEDULES, default="sequential")
    p.add_argument("--csv", action="store_true", help="also write shots.csv")
    _add_noise_flags(p, "uniform")
    p.set_defaults(func=cmd_memory)

    p = sub.add_parser("decode", help="decode sampled shots with a DEM")
    p.add_argument("--dem", required=True)
    p.add_argument("--shots", required=True, help="shots.bin or shots.csv")
    p.add_argument("--compare-exhaustive", action="store_true",
                   help="check every matching weight against the exhaustive oracle")
    p.set_defaults(func=cmd_decode)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be at least 1")
    try:
        return args.func(args)
    except (ValidationError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
