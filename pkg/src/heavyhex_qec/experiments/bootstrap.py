"""Parametric bootstrap over per-basis up/down counts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .tomography import BASES, BasisCounts, DensityMatrix2, TomographyCounts, fidelity, tomography


@dataclass(frozen=True)
class FidelityEstimate:
    value: float
    err: float
    resamples: int

    def __str__(self) -> str:
        return format_pm(self.value, self.err)


def format_pm(value: float, err: float) -> str:
    """``value ± err`` with both rounded at the first significant digit of ``err``."""
    if err > 0 and math.isfinite(err):
        digits = max(1, -math.floor(math.log10(err)))
        # rounding can carry into the next digit (0.00096 -> 0.0010)
        if round(err, digits) >= 10 ** (1 - digits) and digits > 1:
            digits -= 1
    else:
        digits = 4
    return f"{value:.{digits}f} ± {err:.{digits}f}"


def bootstrap(counts: TomographyCounts, statistic: Callable[[TomographyCounts], float], resamples: int = 1000,
              seed: int = 0) -> float:
    """Sample standard deviation of ``statistic`` over binomially resampled counts.

    Each basis keeps its accepted-shot total; the up count is redrawn from the
    empirical up fraction.
    """
    if resamples < 2:
        raise ValueError("bootstrap needs at least two resamples")
    if not counts.bases or all(c.accepted == 0 for c in counts.bases.values()):
        raise ValueError("bootstrap needs non-empty counts")
    rng = np.random.default_rng(seed)
    draws = {}
    for b in sorted(counts.bases):
        c = counts.bases[b]
        frac = c.up / c.accepted if c.accepted else 0.0
        draws[b] = rng.binomial(c.accepted, frac, size=resamples)
    values = np.empty(resamples)
    for k in range(resamples):
        resampled = {b: BasisCounts(c.shots, c.accepted, int(draws[b][k])) for b, c in counts.bases.items()}
        values[k] = statistic(TomographyCounts(counts.theta, counts.phi, resampled))
    return float(np.std(values, ddof=1))


def fidelity_of(counts: TomographyCounts) -> float:
    return fidelity(DensityMatrix2.pure(counts.theta, counts.phi), tomography(counts))


def fidelity_estimate(counts: TomographyCounts, resamples: int = 1000, seed: int = 0) -> FidelityEstimate:
    return FidelityEstimate(fidelity_of(counts), bootstrap(counts, fidelity_of, resamples, seed), resamples)


def expectation_errors(counts: TomographyCounts, resamples: int = 1000, seed: int = 0) -> dict[str, float]:
    return {b: bootstrap(counts, lambda c, b=b: c.bases[b].expectation, resamples, seed)
            for b in BASES if b in counts.bases}
