"""Circuit instruction set and its line-based text format.

Text format, one instruction per line, ``#`` starts a comment::

    QUBITS 25
    RESET_Z 0 1 2
    PREP_ARB 12 0.5 0.25          # qubit theta phi (radians), lambda fixed to 0
    CX 0 1 2 3                    # control/target pairs
    NOISE_1Q 0.001 4 5
    FLIP_ERROR 0.016 X 4 5        # probability, flipped Pauli, qubits
    MEASURE_Z 4 5
    TICK
    DETECTOR Z.3.1 0 7 19         # label, expected parity, measurement indices
    OBSERVABLE 0 3 8 11           # observable id, measurement indices

Measurement indices are absolute positions in the measurement record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

RESETS = ("RESET_Z", "RESET_X")
MEASURES = ("MEASURE_Z", "MEASURE_X", "MEASURE_Y")
GATES_1Q = ("H",)
NOISE = ("NOISE_1Q", "NOISE_2Q", "FLIP_ERROR")
KINDS = RESETS + MEASURES + GATES_1Q + ("CX", "PREP_ARB", "TICK") + NOISE
MEASURE_BASIS = {"MEASURE_Z": "Z", "MEASURE_X": "X", "MEASURE_Y": "Y"}


class CircuitError(ValueError):
    pass


class ParseError(CircuitError):
    def __init__(self, line_no: int, token: str, message: str):
        super().__init__(f"line {line_no}: {message} (token {token!r})")
        self.line_no = line_no
        self.token = token


@dataclass(frozen=True)
class Instruction:
    kind: str
    targets: tuple[int, ...] = ()
    args: tuple = ()

    @property
    def is_noise(self) -> bool:
        return self.kind in NOISE

    def pairs(self) -> list[tuple[int, int]]:
        t = self.targets
        return [(t[i], t[i + 1]) for i in range(0, len(t), 2)]


@dataclass(frozen=True)
class Detector:
    label: str
    records: tuple[int, ...]
    parity: int = 0

    @property
    def basis(self) -> str:
        return self.label.split(".", 1)[0]


@dataclass(frozen=True)
class Observable:
    index: int
    records: tuple[int, ...]


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    instructions: tuple[Instruction, ...]
    detectors: tuple[Detector, ...] = ()
    observables: tuple[Observable, ...] = ()
    _meta: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    @property
    def measurement_count(self) -> int:
        return sum(len(i.targets) for i in self.instructions if i.kind in MEASURES)

    @property
    def num_detectors(self) -> int:
        return len(self.detectors)

    @property
    def num_observables(self) -> int:
        return len(self.observables)

    @property
    def is_noisy(self) -> bool:
        return any(i.is_noise for i in self.instructions)

    def measurements(self) -> list[tuple[int, str]]:
        """``(qubit, basis)`` of every measurement in record order."""
        out = []
        for ins in self.instructions:
            if ins.kind in MEASURES:
                out.extend((q, MEASURE_BASIS[ins.kind]) for q in ins.targets)
        return out

    def layers(self) -> list[list[Instruction]]:
        out: list[list[Instruction]] = [[]]
        for ins in self.instructions:
            if ins.kind == "TICK":
                out.append([])
            else:
                out[-1].append(ins)
        if not out[-1]:
            out.pop()
        return out

    def without_noise(self) -> "Circuit":
        return Circuit(
            self.num_qubits,
            tuple(i for i in self.instructions if not i.is_noise),
            self.detectors,
            self.observables,
            dict(self._meta),
        )

    def with_annotations(self, detectors, observables) -> "Circuit":
        return Circuit(self.num_qubits, self.instructions, tuple(detectors), tuple(observables), dict(self._meta))

    def prep_arb(self) -> Instruction | None:
        found = [i for i in self.instructions if i.kind == "PREP_ARB"]
        return found[0] if found else None

    @property
    def meta(self) -> dict:
        return self._meta

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (
            self.num_qubits == other.num_qubits
            and self.instructions == other.instructions
            and self.detectors == other.detectors
            and self.observables == other.observables
        )

    def __hash__(self):
        return hash((self.num_qubits, self.instructions, self.detectors, self.observables))


def validate(circuit: Circuit, edges=None) -> None:
    """Raise :class:`CircuitError` on structural problems."""
    n = circuit.num_qubits
    preps = 0
    used: set[int] = set()
    for pos, ins in enumerate(circuit.instructions):
        if ins.kind not in KINDS:
            raise CircuitError(f"instruction {pos}: unknown kind {ins.kind}")
        for q in ins.targets:
            if not 0 <= q < n:
                raise CircuitError(f"instruction {pos}: qubit {q} out of range")
        if ins.kind == "TICK":
            used = set()
            continue
        if ins.kind in ("CX", "NOISE_2Q"):
            if len(ins.targets) % 2:
                raise CircuitError(f"instruction {pos}: odd target count for {ins.kind}")
            for a, b in ins.pairs():
                if a == b:
                    raise CircuitError(f"instruction {pos}: {ins.kind} on a single qubit {a}")
                if ins.kind == "CX" and edges is not None and frozenset((a, b)) not in edges:
                    raise CircuitError(f"instruction {pos}: CX {a} {b} is not a lattice edge")
        if ins.kind == "PREP_ARB":
            preps += 1
            if preps > 1:
                raise CircuitError("PREP_ARB may appear at most once")
        if not ins.is_noise:
            for q in ins.targets:
                if q in used:
                    raise CircuitError(f"instruction {pos}: qubit {q} acted on twice in one layer")
                used.add(q)
    m = circuit.measurement_count
    for det in circuit.detectors:
        if any(not 0 <= r < m for r in det.records):
            raise CircuitError(f"detector {det.label} references a missing measurement")
    for obs in circuit.observables:
        if any(not 0 <= r < m for r in obs.records):
            raise CircuitError(f"observable {obs.index} references a missing measurement")


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize(circuit: Circuit) -> str:
    lines = [f"QUBITS {circuit.num_qubits}"]
    for ins in circuit.instructions:
        t = " ".join(str(q) for q in ins.targets)
        if ins.kind == "TICK":
            lines.append("TICK")
        elif ins.kind == "PREP_ARB":
            theta, phi = ins.args
            lines.append(f"PREP_ARB {ins.targets[0]} {_fmt(theta)} {_fmt(phi)}")
        elif ins.kind in ("NOISE_1Q", "NOISE_2Q"):
            lines.append(f"{ins.kind} {_fmt(ins.args[0])} {t}")
        elif ins.kind == "FLIP_ERROR":
            lines.append(f"FLIP_ERROR {_fmt(ins.args[0])} {ins.args[1]} {t}")
        else:
            lines.append(f"{ins.kind} {t}")
    for det in circuit.detectors:
        recs = " ".join(str(r) for r in det.records)
        lines.append(f"DETECTOR {det.label} {det.parity} {recs}".rstrip())
    for obs in circuit.observables:
        recs = " ".join(str(r) for r in obs.records)
        lines.append(f"OBSERVABLE {obs.index} {recs}".rstrip())
    return "\n".join(lines) + "\n"


def _int(tok: str, line_no: int) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise ParseError(line_no, tok, "expected an integer") from None
    if v < 0:
        raise ParseError(line_no, tok, "expected a non-negative integer")
    return v


def _float(tok: str, line_no: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(line_no, tok, "expected a number") from None


def _prob(tok: str, line_no: int) -> float:
    p = _float(tok, line_no)
    if not 0.0 <= p <= 1.0:
        raise ParseError(line_no, tok, "probability outside [0, 1]")
    return p


def parse(text: str, edges=None) -> Circuit:
    num_qubits = None
    instructions: list[Instruction] = []
    detectors: list[Detector] = []
    observables: list[Observable] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind, rest = tok[0], tok[1:]
        if kind == "QUBITS":
            if len(rest) != 1:
                raise ParseError(line_no, kind, "QUBITS takes one count")
            num_qubits = _int(rest[0], line_no)
        elif kind == "TICK":
            if rest:
                raise ParseError(line_no, rest[0], "TICK takes no arguments")
            instructions.append(Instruction("TICK"))
        elif kind == "PREP_ARB":
            if len(rest) != 3:
                raise ParseError(line_no, kind, "PREP_ARB expects: qubit theta phi")
            q = _int(rest[0], line_no)
            instructions.append(Instruction(kind, (q,), (_float(rest[1], line_no), _float(rest[2], line_no))))
        elif kind in ("NOISE_1Q", "NOISE_2Q"):
            if not rest:
                raise ParseError(line_no, kind, "missing probability")
            p = _prob(rest[0], line_no)
            instructions.append(Instruction(kind, tuple(_int(t, line_no) for t in rest[1:]), (p,)))
        elif kind == "FLIP_ERROR":
            if len(rest) < 2:
                raise ParseError(line_no, kind, "FLIP_ERROR expects: probability pauli qubits")
            p = _prob(rest[0], line_no)
            if rest[1] not in ("X", "Y", "Z"):
                raise ParseError(line_no, rest[1], "flip Pauli must be X, Y or Z")
            instructions.append(Instruction(kind, tuple(_int(t, line_no) for t in rest[2:]), (p, rest[1])))
        elif kind == "DETECTOR":
            if len(rest) < 2:
                raise ParseError(line_no, kind, "DETECTOR expects: label parity records")
            parity = _int(rest[1], line_no)
            if parity not in (0, 1):
                raise ParseError(line_no, rest[1], "parity must be 0 or 1")
            detectors.append(Detector(rest[0], tuple(_int(t, line_no) for t in rest[2:]), parity))
        elif kind == "OBSERVABLE":
            if not rest:
                raise ParseError(line_no, kind, "OBSERVABLE expects: id records")
            observables.append(Observable(_int(rest[0], line_no), tuple(_int(t, line_no) for t in rest[1:])))
        elif kind in KINDS:
            targets = tuple(_int(t, line_no) for t in rest)
            if kind == "CX" and len(targets) % 2:
                raise ParseError(line_no, rest[-1] if rest else kind, "CX needs control/target pairs")
            instructions.append(Instruction(kind, targets))
        else:
            raise ParseError(line_no, kind, "unknown instruction")
    if num_qubits is None:
        used = [q for i in instructions for q in i.targets]
        num_qubits = max(used) + 1 if used else 0
    circuit = Circuit(num_qubits, tuple(instructions), tuple(detectors), tuple(observables))
    validate(circuit, edges)
    return circuit
