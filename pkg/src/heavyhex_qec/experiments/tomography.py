"""Single-qubit direct-inversion tomography and state fidelity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..sim.sampling import bloch_vector

BASES = ("X", "Y", "Z")
_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class EmptyBasisError(ValueError):
    pass


@dataclass(frozen=True)
class BasisCounts:
    shots: int
    accepted: int
    up: int

    def __post_init__(self):
        if not 0 <= self.up <= self.accepted <= self.shots:
            raise ValueError(f"inconsistent counts: {self}")

    @property
    def down(self) -> int:
        return self.accepted - self.up

    @property
    def acceptance(self) -> float:
        return self.accepted / self.shots if self.shots else 0.0

    @property
    def expectation(self) -> float:
        if self.accepted == 0:
            raise EmptyBasisError("no accepted shots")
        return (self.up - self.down) / self.accepted


@dataclass(frozen=True)
class TomographyCounts:
    theta: float
    phi: float
    bases: dict = field(hash=False)  # basis letter -> BasisCounts

    @property
    def flagged(self) -> bool:
        """True when some basis has no accepted shot (tomography is skipped)."""
        return any(self.bases[b].accepted == 0 for b in self.bases)

    @property
    def acceptance(self) -> float:
        shots = sum(c.shots for c in self.bases.values())
        return sum(c.accepted for c in self.bases.values()) / shots if shots else 0.0


@dataclass(frozen=True)
class DensityMatrix2:
    """``rho = (I + x X + y Y + z Z) / 2``; ``raw`` keeps the unprojected estimate."""

    r: tuple
    raw: tuple | None = None

    @classmethod
    def pure(cls, theta: float, phi: float) -> "DensityMatrix2":
        v = tuple(float(c) for c in bloch_vector(theta, phi))
        return cls(v, v)

    @property
    def matrix(self) -> np.ndarray:
        x, y, z = self.r
        return (_PAULI["I"] + x * _PAULI["X"] + y * _PAULI["Y"] + z * _PAULI["Z"]) / 2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.r))


def tomography(counts: TomographyCounts) -> DensityMatrix2:
    """Bloch vector from per-basis expectation values, clipped radially into the unit ball."""
    for b in BASES:
        if b not in counts.bases or counts.bases[b].accepted == 0:
            raise EmptyBasisError(f"basis {b} has no accepted shots")
    raw = np.array([counts.bases[b].expectation for b in BASES])
    n = float(np.linalg.norm(raw))
    r = raw / n if n > 1 else raw
    return DensityMatrix2(tuple(float(v) for v in r), tuple(float(v) for v in raw))


def fidelity(ideal: DensityMatrix2, rho: DensityMatrix2, tol: float = 1e-9) -> float:
    """Fidelity with a pure ideal state: ``<psi| rho |psi> = (1 + r_ideal . r) / 2``."""
    if abs(ideal.norm - 1.0) > tol:
        raise ValueError("the ideal state must be pure")
    if rho.norm > 1.0 + 1e-12:
        raise ValueError(f"non-physical state: Bloch vector length {rho.norm:.6g} > 1")
    return float(min(1.0, max(0.0, (1.0 + float(np.dot(ideal.r, rho.r))) / 2.0)))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    # eigenvalues at rounding level are zeroed: sqrt would blow them up to ~1e-8
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    vals = np.where(vals > 1e-13 * max(vals.max(), 1e-300), vals, 0.0)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity_general(a: np.ndarray, b: np.ndarray) -> float:
    """``(Tr sqrt(sqrt(a) b sqrt(a)))^2`` for arbitrary density matrices."""
    sa = _psd_sqrt(a)
    inner = _psd_sqrt(sa @ b @ sa)
    return float(np.real(np.trace(inner)) ** 2)


def expectations_ideal(theta: float, phi: float) -> dict[str, float]:
    v = bloch_vector(theta, phi)
    return {"X": float(v[0]), "Y": float(v[1]), "Z": float(v[2])}


def pure_state_amplitudes(theta: float, phi: float) -> np.ndarray:
    return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])
