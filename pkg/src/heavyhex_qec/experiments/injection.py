"""State-injection runs: post-selected logical Pauli counts over (theta, phi) grids."""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..builders import build_injection_circuit
from ..lattice import build_layout, injection_layout
from ..noise import NoiseModel, apply_noise
from ..sim.frame import propagation_table
from ..sim.sampling import injected_frame_sample
from .bootstrap import FidelityEstimate, fidelity_estimate
from .seeding import job_seed
from .tomography import BASES, BasisCounts, TomographyCounts, tomography

GRID_STEPS = 9  # 0, pi/4, ..., 2 pi


def default_grid() -> np.ndarray:
    return np.arange(GRID_STEPS) * (math.pi / 4)


_LAYOUT = None
_TABLES: dict = {}


def _injection_circuit(theta: float, phi: float, basis: str, noise: NoiseModel):
    global _LAYOUT
    if _LAYOUT is None:
        layout = build_layout(3)
        _LAYOUT = (layout, injection_layout(layout))
    layout, inj = _LAYOUT
    circuit = build_injection_circuit(layout, inj, theta, phi, basis)
    if not noise.is_zero:
        circuit = apply_noise(circuit, noise)
    # the frame table does not depend on the injected angles
    key = (basis, noise)
    if key not in _TABLES:
        _TABLES[key] = propagation_table(circuit)
    return circuit, _TABLES[key]


def run_injection_point(theta: float, phi: float, shots: int, noise: NoiseModel, seed: int,
                        bases=BASES) -> TomographyCounts:
    """Counts for one injected state; each basis is an independent run with its own derived seed."""
    if shots < 1:
        raise ValueError("shots must be positive")
    out = {}
    for b in bases:
        circuit, table = _injection_circuit(theta, phi, b, noise)
        batch = injected_frame_sample(circuit, shots, job_seed(seed, "inject", b, float(theta), float(phi)), table)
        accepted = int(batch.accepted.sum())
        up = int(np.count_nonzero(batch.accepted & (batch.outcomes == 0)))
        out[b] = BasisCounts(shots, accepted, up)
    return TomographyCounts(float(theta), float(phi), out)


def _point_job(args):
    return run_injection_point(*args)


def run_injection_grid(thetas, phis, shots: int, noise: NoiseModel, seed: int, bases=BASES,
                       workers: int = 1) -> list[TomographyCounts]:
    if len(thetas) == 0 or len(phis) == 0:
        raise ValueError("the angle grids must be non-empty")
    jobs = [(float(t), float(p), shots, noise, seed, tuple(bases)) for t in thetas for p in phis]
    if workers <= 1:
        return [_point_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_point_job, jobs))


@dataclass(frozen=True)
class PointSummary:
    counts: TomographyCounts
    fidelity: FidelityEstimate | None  # None when some basis had no accepted shot

    @property
    def bloch(self):
        return tomography(self.counts) if self.fidelity is not None else None


def summarize(points: list[TomographyCounts], resamples: int = 1000, seed: int = 0) -> list[PointSummary]:
    out = []
    for c in points:
        fe = None
        if not c.flagged:
            fe = fidelity_estimate(c, resamples, job_seed(seed, "bootstrap", c.theta, c.phi))
        out.append(PointSummary(c, fe))
    return out


def grid_csv(points: list[TomographyCounts]) -> str:
    buf = io.StringIO()
    buf.write("theta,phi,basis,N,accepted,n_up\n")
    for c in points:
        for b in sorted(c.bases):
            bc = c.bases[b]
            buf.write(f"{c.theta!r},{c.phi!r},{b},{bc.shots},{bc.accepted},{bc.up}\n")
    return buf.getvalue()


def fidelity_csv(summaries: list[PointSummary]) -> str:
    buf = io.StringIO()
    buf.write("theta,phi,F,err\n")
    for s in summaries:
        if s.fidelity is None:
            buf.write(f"{s.counts.theta!r},{s.counts.phi!r},,\n")
        else:
            buf.write(f"{s.counts.theta!r},{s.counts.phi!r},{s.fidelity.value:.10g},{s.fidelity.err:.10g}\n")
    return buf.getvalue()


def acceptance_table(points: list[TomographyCounts]) -> str:
    """Acceptance fractions per basis, one row per injected state."""
    buf = io.StringIO()
    buf.write("theta,phi,N,N_X/N,N_Y/N,N_Z/N\n")
    for c in points:
        n = max(bc.shots for bc in c.bases.values())
        cols = [f"{c.bases[b].acceptance:.4f}" if b in c.bases else "" for b in BASES]
        buf.write(f"{c.theta!r},{c.phi!r},{n}," + ",".join(cols) + "\n")
    return buf.getvalue()
