"""Memory experiments, threshold sweeps and crossing estimates."""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from ..builders import build_memory_circuit
from ..decoding.dem import build_dem
from ..decoding.matching import MatchingGraph
from ..lattice import build_layout
from ..noise import NoiseModel, apply_noise
from ..sim.frame import propagation_table
from ..sim.sampling import frame_sample
from .seeding import job_seed

# the uniform-noise table is built once at this rate and rescaled
_REFERENCE_P = 1e-3
DECODE_CHUNK = 4096


@dataclass(frozen=True)
class SweepRow:
    basis: str
    d: int
    p: float
    rounds: int
    shots: int
    failures: int
    p_shot: float
    p_L: float  # per round
    err: float  # binomial error propagated through the per-round conversion


@dataclass(frozen=True)
class CrossingEstimate:
    basis: str
    value: float | None
    pairs: tuple  # (d1, d2, crossing or None)
    status: str

    def to_dict(self) -> dict:
        return {"basis": self.basis, "p_th": self.value, "status": self.status,
                "pairs": [{"d1": a, "d2": b, "crossing": c} for a, b, c in self.pairs]}


@dataclass
class SweepResult:
    rows: list[SweepRow]
    crossings: dict[str, CrossingEstimate] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("basis,d,p,shots,failures,p_L,err,rounds,p_shot\n")
        for r in self.rows:
            buf.write(f"{r.basis},{r.d},{r.p!r},{r.shots},{r.failures},{r.p_L:.10g},{r.err:.10g},"
                      f"{r.rounds},{r.p_shot:.10g}\n")
        return buf.getvalue()

    def select(self, basis: str) -> list[SweepRow]:
        return [r for r in self.rows if r.basis == basis]


def per_round_rate(p_shot: float, rounds: int) -> float:
    """Per-round flip probability of a two-state Markov chain with ``p_shot`` after ``rounds``."""
    if p_shot >= 0.5:
        return 0.5
    return (1.0 - (1.0 - 2.0 * p_shot) ** (1.0 / rounds)) / 2.0


def per_round_error(p_shot: float, shots: int, rounds: int) -> float:
    if p_shot >= 0.5:
        return 0.0
    sigma = math.sqrt(p_shot * (1 - p_shot) / shots)
    return sigma * (1.0 - 2.0 * p_shot) ** (1.0 / rounds - 1.0) / rounds


@lru_cache(maxsize=32)
def _memory_setup(d: int, basis: str, rounds: int, schedule: str, model: NoiseModel | None):
    """Noisy circuit, propagation table and detector bases (uniform reference model when ``model`` is None)."""
    noise = NoiseModel.uniform(_REFERENCE_P) if model is None else model
    circuit = apply_noise(build_memory_circuit(build_layout(d), basis, rounds, schedule=schedule), noise)
    return circuit, propagation_table(circuit), [det.basis for det in circuit.detectors]


def _decode_chunk(args):
    graph, dets = args
    return graph.decode_batch(dets)


def decode_batch(graph: MatchingGraph, dets: np.ndarray, workers: int = 1) -> np.ndarray:
    if workers <= 1 or len(dets) <= DECODE_CHUNK:
        return graph.decode_batch(dets)
    jobs = [(graph, dets[i:i + DECODE_CHUNK]) for i in range(0, len(dets), DECODE_CHUNK)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.concatenate(list(pool.map(_decode_chunk, jobs)))


def run_memory_experiment(d: int, basis: str, p: float, rounds: int | None = None, shots: int = 10_000,
                          seed: int = 0, noise: NoiseModel | None = None, schedule: str = "sequential",
                          workers: int = 1) -> SweepRow:
    """Sample, decode and count logical failures of one memory experiment.

    ``p`` sets a uniform noise model unless ``noise`` is given explicitly.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    rounds = d if rounds is None else rounds
    if noise is None and p == 0:
        return SweepRow(basis, d, 0.0, rounds, shots, 0, 0.0, 0.0, 0.0)
    if noise is None:
        circuit, table, det_basis = _memory_setup(d, basis, rounds, schedule, None)
        table = table.scaled(p / _REFERENCE_P)
    else:
        circuit, table, det_basis = _memory_setup(d, basis, rounds, schedule, noise)
    graph = MatchingGraph.from_dem(build_dem(table, det_basis))
    batch = frame_sample(circuit, shots, seed, table, workers=workers)
    predicted = decode_batch(graph, batch.detectors, workers)
    failures = int(np.count_nonzero(predicted != batch.observables[:, 0]))
    p_shot = failures / shots
    return SweepRow(basis, d, float(p), rounds, shots, failures, p_shot,
                    per_round_rate(p_shot, rounds), per_round_error(p_shot, shots, rounds))


def _log_crossing(ps, y1, y2):
    """First p where curve 1 stops lying above curve 2, by linear interpolation in log-log."""
    lp = np.log(ps)
    diff = np.log(y1) - np.log(y2)
    for i in range(len(ps) - 1):
        if diff[i] > 0 and diff[i + 1] <= 0:
            t = diff[i] / (diff[i] - diff[i + 1])
            return float(np.exp(lp[i] + t * (lp[i + 1] - lp[i])))
    return None


def estimate_crossing(rows: list[SweepRow], basis: str) -> CrossingEstimate:
    """Average of the pairwise crossings of per-round curves of different distances.

    The smaller distance must lie above the larger one at low ``p`` and below
    it at high ``p``.
    """
    curves: dict[int, dict[float, float]] = {}
    for r in rows:
        if r.basis == basis and r.p_L > 0:
            curves.setdefault(r.d, {})[r.p] = r.p_L
    ds = sorted(curves)
    if len(ds) < 2:
        return CrossingEstimate(basis, None, (), "fewer than two distances with nonzero failures")
    pairs = []
    for d1, d2 in combinations(ds, 2):
        common = sorted(set(curves[d1]) & set(curves[d2]))
        c = None
        if len(common) >= 2:
            c = _log_crossing(np.array(common), np.array([curves[d1][p] for p in common]),
                              np.array([curves[d2][p] for p in common]))
        pairs.append((d1, d2, c))
    found = [c for _, _, c in pairs if c is not None]
    if not found:
        return CrossingEstimate(basis, None, tuple(pairs), "no crossing within the grid")
    return CrossingEstimate(basis, float(np.mean(found)), tuple(pairs), "ok")


def threshold_sweep(ds, ps, shots: int, bases=("Z", "X"), seed: int = 0, rounds: int | None = None,
                    schedule: str = "sequential", workers: int = 1, progress=None) -> SweepResult:
    """Memory experiments over a (basis, d, p) grid plus crossing estimates per basis.

    Each cell gets its own seed derived from ``seed`` and the cell key, so the
    result of a cell does not depend on which other cells are run.
    """
    ds, ps = sorted(int(d) for d in ds), sorted(float(p) for p in ps)
    if len(ds) < 2:
        raise ValueError("a threshold sweep needs at least two distances")
    if len(ps) < 2:
        raise ValueError("a threshold sweep needs at least two physical error rates")
    rows = []
    for basis in bases:
        for d in ds:
            for p in ps:
                row = run_memory_experiment(d, basis, p, rounds, shots, job_seed(seed, "memory", basis, d, p),
                                            schedule=schedule, workers=workers)
                rows.append(row)
                if progress is not None:
                    progress(row)
    return SweepResult(rows, {b: estimate_crossing(rows, b) for b in bases})


def synthetic_rows(ds, ps, p_th: float, C: float, a: float, basis: str = "Z", shots: int = 10**9) -> list[SweepRow]:
    """Exact rows from ``p_L = C (p / p_th)^(a (d+1) / 2)`` (for checking the analysis code)."""
    rows = []
    for d in ds:
        for p in ps:
            pl = C * (p / p_th) ** (a * (d + 1) / 2)
            rows.append(SweepRow(basis, d, p, d, shots, int(round(pl * shots)), pl, pl,
                                 math.sqrt(pl * (1 - pl) / shots)))
    return rows
