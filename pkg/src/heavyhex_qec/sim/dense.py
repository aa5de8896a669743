"""Dense reference simulation for small circuits.

Two backends:

* density matrices (up to 10 qubits) with every noise channel applied
  exactly; measurement branches are merged whenever they agree on the
  running parities of all detectors and observables, which is all the
  final output depends on;
* state vectors (up to 14 qubits) for noiseless runs or runs with a fixed
  set of forced error mechanisms.

Both return the exact probability of every (detector bits, observable bits)
outcome.
"""

from __future__ import annotations

import math

import numpy as np

from ..circuit import MEASURES, Circuit
from ..noise import PAIRS_2Q, ErrorMechanism

MAX_DENSITY_QUBITS = 10
MAX_STATEVECTOR_QUBITS = 14

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S = np.diag([1, 1j]).astype(complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


class TooManyQubitsError(ValueError):
    pass


def u3(theta: float, phi: float, lam: float = 0.0) -> np.ndarray:
    return np.array(
        [
            [math.cos(theta / 2), -np.exp(1j * lam) * math.sin(theta / 2)],
            [np.exp(1j * phi) * math.sin(theta / 2), np.exp(1j * (phi + lam)) * math.cos(theta / 2)],
        ],
        dtype=complex,
    )


def _apply_1q(t: np.ndarray, u: np.ndarray, axis: int) -> np.ndarray:
    t = np.tensordot(u, t, axes=([1], [axis]))
    return np.moveaxis(t, 0, axis)


def _apply_cx(t: np.ndarray, c: int, tg: int) -> np.ndarray:
    t = t.copy()
    idx = [slice(None)] * t.ndim
    idx[c] = 1
    sub = t[tuple(idx)]
    ax = tg if tg < c else tg - 1
    t[tuple(idx)] = np.flip(sub, axis=ax)
    return t


def _project(t: np.ndarray, axis: int, m: int) -> np.ndarray:
    t = t.copy()
    idx = [slice(None)] * t.ndim
    idx[axis] = 1 - m
    t[tuple(idx)] = 0
    return t


class _DensityState:
    """Unnormalized density operator as a tensor with ket axes then bra axes."""

    def __init__(self, n):
        self.n = n
        rho = np.zeros((2,) * (2 * n), dtype=complex)
        rho[(0,) * (2 * n)] = 1.0
        self.t = rho

    def gate(self, u, q):
        self.t = _apply_1q(_apply_1q(self.t, u, q), u.conj(), self.n + q)

    def cx(self, c, tg):
        self.t = _apply_cx(_apply_cx(self.t, c, tg), self.n + c, self.n + tg)

    def split(self, q):
        """Return the two unnormalized post-measurement operators for a Z measurement."""
        out = []
        for m in (0, 1):
            t = _project(_project(self.t, q, m), self.n + q, m)
            out.append(t)
        return out

    def prob(self, t=None):
        t = self.t if t is None else t
        d = 2 ** self.n
        return float(np.real(np.trace(t.reshape(d, d))))

    def pauli_channel(self, alternatives):
        """``alternatives``: list of (probability, {qubit: 2x2 Pauli})."""
        total = sum(p for p, _ in alternatives)
        acc = (1 - total) * self.t
        for p, ops in alternatives:
            t = self.t
            for q, u in ops.items():
                t = _apply_1q(_apply_1q(t, u, q), u.conj(), self.n + q)
            acc = acc + p * t
        self.t = acc

    def copy_with(self, t):
        s = _DensityState.__new__(_DensityState)
        s.n, s.t = self.n, t
        return s


class _VectorState:
    def __init__(self, n):
        self.n = n
        psi = np.zeros((2,) * n, dtype=complex)
        psi[(0,) * n] = 1.0
        self.t = psi

    def gate(self, u, q):
        self.t = _apply_1q(self.t, u, q)

    def cx(self, c, tg):
        self.t = _apply_cx(self.t, c, tg)

    def split(self, q):
        return [_project(self.t, q, m) for m in (0, 1)]

    def prob(self, t=None):
        t = self.t if t is None else t
        return float(np.vdot(t, t).real)

    def copy_with(self, t):
        s = _VectorState.__new__(_VectorState)
        s.n, s.t = self.n, t
        return s


def _membership(circuit: Circuit):
    """For each measurement record, bitmask of detectors/observables containing it."""
    m = circuit.measurement_count
    masks = [0] * m
    nd = circuit.num_detectors
    for i, det in enumerate(circuit.detectors):
        for r in det.records:
            masks[r] ^= 1 << i
    for j, obs in enumerate(circuit.observables):
        for r in obs.records:
            masks[r] ^= 1 << (nd + j)
    return masks


def _basis_in(state, q, basis):
    if basis == "X":
        state.gate(H, q)
    elif basis == "Y":
        state.gate(S.conj().T, q)
        state.gate(H, q)


def _basis_out(state, q, basis):
    if basis == "X":
        state.gate(H, q)
    elif basis == "Y":
        state.gate(H, q)
        state.gate(S, q)


def _channel_alternatives(ins):
    p = ins.args[0]
    if ins.kind == "NOISE_1Q":
        return [[(p / 3, {q: PAULI[a]}) for a in "XYZ"] for q in ins.targets]
    if ins.kind == "NOISE_2Q":
        chans = []
        for a, b in ins.pairs():
            chans.append([(p / 15, {a: PAULI[pa], b: PAULI[pb]}) for pa, pb in PAIRS_2Q])
        return chans
    return [[(p, {q: PAULI[ins.args[1]]})] for q in ins.targets]


def dense_run(circuit: Circuit, forced: list[ErrorMechanism] | None = None, exact_noise: bool | None = None,
              tol: float = 1e-12) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
    """Exact distribution of (detector bits, observable bits).

    With ``forced`` the listed mechanisms are applied with certainty and all
    other noise is ignored.  Otherwise noise channels are applied exactly
    (density-matrix backend) unless ``exact_noise`` is False.
    """
    n = circuit.num_qubits
    if exact_noise is None:
        exact_noise = forced is None and circuit.is_noisy
    if exact_noise and forced is not None:
        raise ValueError("forced mechanisms and exact noise are exclusive")
    if exact_noise:
        if n > MAX_DENSITY_QUBITS:
            raise TooManyQubitsError(f"{n} qubits exceed the density-matrix limit of {MAX_DENSITY_QUBITS}")
        start = _DensityState(n)
    else:
        if n > MAX_STATEVECTOR_QUBITS:
            raise TooManyQubitsError(f"{n} qubits exceed the state-vector limit of {MAX_STATEVECTOR_QUBITS}")
        start = _VectorState(n)
    forced_at: dict[int, list[ErrorMechanism]] = {}
    for m in forced or []:
        forced_at.setdefault(m.instruction_index, []).append(m)

    membership = _membership(circuit)
    branches = [(0, start)]  # (parity key, state)
    rec = 0
    density = exact_noise

    def merge(items):
        if not density:
            return [(k, s) for k, s in items if s.prob() > tol]
        acc: dict[int, object] = {}
        for k, s in items:
            if k in acc:
                acc[k].t = acc[k].t + s.t
            else:
                acc[k] = s
        return [(k, acc[k]) for k in sorted(acc) if acc[k].prob() > tol]

    for idx, ins in enumerate(circuit.instructions):
        k = ins.kind
        if k == "TICK":
            continue
        if ins.is_noise:
            if exact_noise:
                for alts in _channel_alternatives(ins):
                    for _, s in branches:
                        s.pauli_channel(alts)
            for m in forced_at.get(idx, []):
                for _, s in branches:
                    for q, pa in zip(m.qubits, m.paulis):
                        s.gate(PAULI[pa], q)
            continue
        if k == "H":
            for _, s in branches:
                for q in ins.targets:
                    s.gate(H, q)
        elif k == "CX":
            for _, s in branches:
                for a, b in ins.pairs():
                    s.cx(a, b)
        elif k in ("RESET_Z", "RESET_X", "PREP_ARB"):
            for q in ins.targets:
                new = []
                for key, s in branches:
                    for m, t in enumerate(s.split(q)):
                        child = s.copy_with(t)
                        if m:
                            child.gate(X, q)
                        new.append((key, child))
                branches = merge(new)
                for _, s in branches:
                    if k == "RESET_X":
                        s.gate(H, q)
                    elif k == "PREP_ARB":
                        s.gate(u3(*ins.args), q)
        elif k in MEASURES:
            basis = k[-1]
            for q in ins.targets:
                new = []
                for key, s in branches:
                    _basis_in(s, q, basis)
                    for m, t in enumerate(s.split(q)):
                        child = s.copy_with(t)
                        _basis_out(child, q, basis)
                        new.append((key ^ (membership[rec] if m else 0), child))
                branches = merge(new)
                rec += 1
        else:
            raise ValueError(f"unsupported instruction {k}")

    nd, no = circuit.num_detectors, circuit.num_observables
    parity = sum(d.parity << i for i, d in enumerate(circuit.detectors))
    dist: dict = {}
    for key, s in branches:
        key ^= parity
        dets = tuple((key >> i) & 1 for i in range(nd))
        obs = tuple((key >> (nd + j)) & 1 for j in range(no))
        dist[(dets, obs)] = dist.get((dets, obs), 0.0) + s.prob()
    return dict(sorted(dist.items()))
