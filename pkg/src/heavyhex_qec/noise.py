"""Circuit-level Pauli noise: models, circuit annotation and mechanism enumeration."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

from .circuit import MEASURES, Circuit, CircuitError, Instruction

PAULIS = "IXYZ"
# two-qubit alternatives in the order (I,X,Y,Z) x (I,X,Y,Z) minus II
PAIRS_2Q = [(a, b) for a in PAULIS for b in PAULIS if (a, b) != ("I", "I")]


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    p_spam: float = 0.0
    p_idle: float = 0.0

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not 0.0 <= float(v) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def uniform(cls, p: float) -> "NoiseModel":
        return cls(p, p, p, p)

    def scaled(self, factor: float) -> "NoiseModel":
        return NoiseModel(*(min(1.0, factor * v) for v in (self.p1, self.p2, self.p_spam, self.p_idle)))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NoiseModel":
        doc = json.loads(text)
        unknown = set(doc) - {"p1", "p2", "p_spam", "p_idle"}
        if unknown:
            raise ValueError(f"unknown noise fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in doc.items()})

    @property
    def is_zero(self) -> bool:
        return not any((self.p1, self.p2, self.p_spam, self.p_idle))


# device averages: readout 1.6e-2, two-qubit gates 2.9e-3
CALIBRATED_P2 = 2.9e-3
CALIBRATED_SPAM = 1.6e-2


def calibrated_preset(**overrides) -> NoiseModel:
    """Hardware-like preset; the single-qubit and idle rates default to p2/10."""
    base = NoiseModel(CALIBRATED_P2 / 10, CALIBRATED_P2, CALIBRATED_SPAM, CALIBRATED_P2 / 10)
    return replace(base, **overrides)


def _flip_for(kind: str) -> str:
    # the Pauli that flips the outcome of a measurement or spoils a reset
    return "Z" if kind in ("MEASURE_X", "RESET_X") else "X"


def apply_noise(circuit: Circuit, model: NoiseModel) -> Circuit:
    """Insert noise instructions layer by layer.

    Idle noise is applied to a qubit in a layer where it is not acted upon,
    provided the layer lies between the qubit's first and last operation.
    """
    if circuit.is_noisy:
        raise CircuitError("circuit already contains noise instructions")
    layers = circuit.layers()
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    for li, layer in enumerate(layers):
        for ins in layer:
            for q in ins.targets:
                first.setdefault(q, li)
                last[q] = li

    out: list[Instruction] = []
    for li, layer in enumerate(layers):
        busy = set()
        for ins in layer:
            busy.update(ins.targets)
            if ins.kind in MEASURES and model.p_spam > 0:
                out.append(Instruction("FLIP_ERROR", ins.targets, (model.p_spam, _flip_for(ins.kind))))
        out.extend(layer)
        for ins in layer:
            if ins.kind == "CX" and model.p2 > 0:
                out.append(Instruction("NOISE_2Q", ins.targets, (model.p2,)))
            elif ins.kind in ("H", "PREP_ARB") and model.p1 > 0:
                out.append(Instruction("NOISE_1Q", ins.targets, (model.p1,)))
            elif ins.kind in ("RESET_Z", "RESET_X") and model.p_spam > 0:
                out.append(Instruction("FLIP_ERROR", ins.targets, (model.p_spam, _flip_for(ins.kind))))
        if model.p_idle > 0:
            idle = tuple(q for q in range(circuit.num_qubits)
                         if q not in busy and q in first and first[q] < li < last[q])
            if idle:
                out.append(Instruction("NOISE_1Q", idle, (model.p_idle,)))
        out.append(Instruction("TICK"))
    return Circuit(circuit.num_qubits, tuple(out), circuit.detectors, circuit.observables, dict(circuit.meta))


@dataclass(frozen=True)
class ErrorMechanism:
    probability: float
    instruction_index: int
    channel: int  # mechanisms sharing a channel are mutually exclusive
    qubits: tuple[int, ...]
    paulis: str  # one letter per qubit

    def pauli_on(self, q: int) -> str:
        for qq, p in zip(self.qubits, self.paulis):
            if qq == q:
                return p
        return "I"


def enumerate_mechanisms(circuit: Circuit) -> list[ErrorMechanism]:
    out: list[ErrorMechanism] = []
    channel = 0
    for idx, ins in enumerate(circuit.instructions):
        if not ins.is_noise:
            continue
        p = ins.args[0]
        if p == 0:
            continue
        if ins.kind == "NOISE_1Q":
            for q in ins.targets:
                for pa in "XYZ":
                    out.append(ErrorMechanism(p / 3, idx, channel, (q,), pa))
                channel += 1
        elif ins.kind == "NOISE_2Q":
            for a, b in ins.pairs():
                for pa, pb in PAIRS_2Q:
                    qs, ps = [], ""
                    if pa != "I":
                        qs.append(a)
                        ps += pa
                    if pb != "I":
                        qs.append(b)
                        ps += pb
                    out.append(ErrorMechanism(p / 15, idx, channel, tuple(qs), ps))
                channel += 1
        else:
            for q in ins.targets:
                out.append(ErrorMechanism(p, idx, channel, (q,), ins.args[1]))
                channel += 1
    return out
