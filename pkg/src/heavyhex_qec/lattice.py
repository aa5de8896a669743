"""Rotated surface code embedded in a heavy-hexagonal coupling graph.

Geometry
--------
Data qubits of the distance-``d`` patch sit on a ``d x d`` grid ``(row, col)``.
Plaquette ``(r, c)`` covers rows ``r, r+1`` and columns ``c, c+1``; it is
Z-type when ``r + c`` is even and X-type otherwise.  Boundary half-plaquettes
are Z-type on the top and bottom edges and X-type on the left and right edges.

Every vertical data pair ``(r, c) - (r+1, c)`` is joined through one bridge
qubit.  A full layer of bridged CNOTs (top -> bottom) over one plaquette row
folds every weight-four stabilizer of that row into a horizontal weight-two
operator: Z plaquettes onto their lower data pair, X plaquettes onto their
upper data pair.  Each folded pair is read out by a syndrome qubit placed in
the horizontal gap between the two data qubits, and a gap is shared by the Z
plaquette above it and the X plaquette below it (they sit in different
sub-rounds).

The top Z boundary pair ``Z_a Z_b`` is extended with two extra data qubits
``n1, n2`` held in ``|0>`` by weight-one stabilizers, giving the weight-four
operator ``Z_n1 Z_n2 Z_a Z_b`` that is folded like a bulk plaquette.  This
adds ``d - 1`` data qubits and reproduces the qubit counts
``d^2 + d - 1`` (data) and ``5/2 d^2 + 2 d - 7/2`` (total).

Coordinates are integers: data ``(2c+1, 2r+2)``, bridges one step below their
upper data qubit, gap syndromes one step right of their left data qubit,
extra top qubits on ``y = 0``.  Qubits are indexed row-major by ``(y, x)``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

DATA, SYNDROME, BRIDGE = "data", "syndrome", "bridge"


class InvalidDistanceError(ValueError):
    pass


class UnsupportedDistanceError(ValueError):
    pass


@dataclass(frozen=True)
class Qubit:
    index: int
    role: str
    x: int
    y: int


@dataclass(frozen=True)
class Fold:
    """One bridged CNOT ``upper -> lower`` used to (un)fold a plaquette row."""

    upper: int
    bridge: int
    lower: int


@dataclass(frozen=True)
class Stabilizer:
    pauli: str
    support: tuple[int, ...]
    subgroup: str
    weight_class: str
    boundary_kind: str
    plaquette_row: int
    # qubits carrying the folded operator and the syndrome qubit reading them;
    # weight-one stabilizers are read directly (syndrome is None)
    readout: tuple[int, ...] = ()
    syndrome: int | None = None

    @property
    def weight(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class LogicalOperator:
    pauli: str
    support: tuple[int, ...]


@dataclass(frozen=True)
class LatticeLayout:
    d: int
    qubits: tuple[Qubit, ...]
    edges: frozenset
    stabilizers: tuple[Stabilizer, ...]
    logical_z: LogicalOperator
    logical_x: LogicalOperator
    # grid position of every data qubit, extra top qubits use row -1
    data_grid: dict = field(hash=False, compare=False)
    folds: dict = field(hash=False, compare=False)

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def by_role(self, role: str) -> list[int]:
        return [q.index for q in self.qubits if q.role == role]

    @property
    def data_qubits(self) -> list[int]:
        return self.by_role(DATA)

    @property
    def extra_qubits(self) -> list[int]:
        return sorted(q for q, (r, _) in self.data_grid.items() if r < 0)

    @property
    def grid_data_qubits(self) -> list[int]:
        return sorted(q for q, (r, _) in self.data_grid.items() if r >= 0)

    @property
    def center(self) -> int:
        m = self.d // 2
        return self.grid_index(m, m)

    def grid_index(self, r: int, c: int) -> int:
        for q, rc in self.data_grid.items():
            if rc == (r, c):
                return q
        raise KeyError((r, c))

    def has_edge(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self.edges

    def degree(self) -> dict[int, int]:
        deg = {q.index: 0 for q in self.qubits}
        for e in self.edges:
            for q in e:
                deg[q] += 1
        return deg

    def subgroup(self, name: str) -> list[Stabilizer]:
        return [s for s in self.stabilizers if s.subgroup == name]

    def plaquette_rows(self, name: str) -> list[int]:
        return sorted({s.plaquette_row for s in self.subgroup(name)})

    def to_json(self) -> str:
        doc = {
            "d": self.d,
            "qubits": [{"id": q.index, "role": q.role, "x": q.x, "y": q.y} for q in self.qubits],
            "edges": sorted(sorted(e) for e in self.edges),
            "stabilizers": [
                {
                    "type": s.pauli,
                    "support": list(s.support),
                    "subgroup": s.subgroup,
                    "weight_class": s.weight_class,
                    "boundary_kind": s.boundary_kind,
                }
                for s in self.stabilizers
            ],
            "logical": {"x": list(self.logical_x.support), "z": list(self.logical_z.support)},
        }
        return json.dumps(doc, indent=1)


def _check_distance(d, minimum: int) -> int:
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)):
        raise InvalidDistanceError(f"code distance must be an integer, got {d!r}")
    d = int(d)
    if d < minimum or d % 2 == 0:
        raise InvalidDistanceError(f"code distance must be odd and >= {minimum}, got {d}")
    return d


def qubit_counts(d: int, variant: str = "rotated") -> tuple[int, int]:
    """Return ``(data, total)`` physical qubit counts on the heavy-hex lattice."""
    d = _check_distance(d, 1)
    if variant == "rotated":
        data = d * d + d - 1
        twice_total = 5 * d * d + 4 * d - 7
        return data, twice_total // 2
    if variant == "unrotated":
        return 2 * d * d - 1, 5 * d * d - 2 * (d + 1)
    raise ValueError(f"unknown variant {variant!r}")


def plaquette_type(r: int, c: int) -> str:
    return "Z" if (r + c) % 2 == 0 else "X"


def build_layout(d: int) -> LatticeLayout:
    d = _check_distance(d, 3)
    coords: dict[tuple[int, int], str] = {}
    data_rc: dict[tuple[int, int], tuple[int, int]] = {}

    def data_xy(r, c):
        return (2 * c + 1, 2 * r + 2)

    for r in range(d):
        for c in range(d):
            coords[data_xy(r, c)] = DATA
            data_rc[data_xy(r, c)] = (r, c)
    top_cols = [c for c in range(d - 1) if plaquette_type(-1, c) == "Z"]
    extra_cols = sorted({cc for c in top_cols for cc in (c, c + 1)})
    for c in extra_cols:
        coords[data_xy(-1, c)] = DATA
        data_rc[data_xy(-1, c)] = (-1, c)
    # bridges below every data qubit that has a data qubit underneath
    for (x, y), (r, c) in list(data_rc.items()):
        if r < d - 1:
            coords[(x, y + 1)] = BRIDGE

    # syndrome placement, one per used horizontal gap or side slot
    stab_specs = []  # (pauli, rows, cols, kind, plaquette_row, readout_rc, syndrome_xy)
    for r in range(d - 1):
        for c in range(d - 1):
            t = plaquette_type(r, c)
            support = [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)]
            row = r + 1 if t == "Z" else r
            readout = [(row, c), (row, c + 1)]
            stab_specs.append((t, support, "four", "bulk", r, readout, (2 * c + 2, 2 * row + 2)))
    for c in top_cols:
        support = [(-1, c), (-1, c + 1), (0, c), (0, c + 1)]
        readout = [(0, c), (0, c + 1)]
        stab_specs.append(("Z", support, "four", "top", -1, readout, (2 * c + 2, 2)))
    for c in extra_cols:
        stab_specs.append(("Z", [(-1, c)], "one", "top", -1, [(-1, c)], None))
    for c in range(d - 1):
        if plaquette_type(d - 1, c) == "Z":
            support = [(d - 1, c), (d - 1, c + 1)]
            stab_specs.append(("Z", support, "two", "bottom", d - 1, support, (2 * c + 2, 2 * d)))
    for r in range(d - 1):
        if plaquette_type(r, -1) == "X":
            support = [(r, 0), (r + 1, 0)]
            stab_specs.append(("X", support, "two", "side", r, [(r, 0)], (0, 2 * r + 2)))
        if plaquette_type(r, d - 1) == "X":
            support = [(r, d - 1), (r + 1, d - 1)]
            stab_specs.append(("X", support, "two", "side", r, [(r, d - 1)], (2 * d, 2 * r + 2)))
    for spec in stab_specs:
        if spec[6] is not None:
            coords[spec[6]] = SYNDROME

    ordered = sorted(coords, key=lambda xy: (xy[1], xy[0]))
    index = {xy: i for i, xy in enumerate(ordered)}
    qubits = tuple(Qubit(i, coords[xy], xy[0], xy[1]) for i, xy in enumerate(ordered))
    grid = {index[xy]: rc for xy, rc in data_rc.items()}
    rc_index = {rc: q for q, rc in grid.items()}

    edges = set()
    folds: dict[int, list[Fold]] = {}
    for (r, c), q in rc_index.items():
        if (r + 1, c) in rc_index:
            x, y = data_xy(r, c)
            b = index[(x, y + 1)]
            lower = rc_index[(r + 1, c)]
            edges.add(frozenset((q, b)))
            edges.add(frozenset((b, lower)))
            folds.setdefault(r, []).append(Fold(q, b, lower))
    for v in folds.values():
        v.sort(key=lambda f: f.upper)

    stabilizers = []
    for pauli, support, wclass, kind, prow, readout, sxy in stab_specs:
        sup = tuple(sorted(rc_index[rc] for rc in support))
        ro = tuple(rc_index[rc] for rc in readout)
        s = None
        if sxy is not None:
            s = index[sxy]
            for q in ro:
                edges.add(frozenset((q, s)))
        # odd plaquette rows (top extension included) form sub-round A
        subgroup = "A" if prow % 2 else "B"
        if wclass == "one":
            subgroup = "B"
        stabilizers.append(Stabilizer(pauli, sup, subgroup, wclass, kind, prow, ro, s))
    stabilizers.sort(key=lambda s: (s.plaquette_row, s.support[0], s.weight))

    m = d // 2
    lz = LogicalOperator("Z", tuple(sorted(rc_index[(r, m)] for r in range(d))))
    lx = LogicalOperator("X", tuple(sorted(rc_index[(m, c)] for c in range(d))))
    # the top fold row only spans columns carrying extra qubits
    folds = {r: tuple(v) for r, v in folds.items()}
    return LatticeLayout(d, qubits, frozenset(edges), tuple(stabilizers), lz, lx, grid, folds)


@dataclass(frozen=True)
class InjectionLayout:
    center: int
    init_basis: dict = field(hash=False)


def injection_layout(layout: LatticeLayout) -> InjectionLayout:
    """Product-state initialization pattern for injecting a state at the center.

    Qubits on the X logical row start in ``|+>``, qubits on the Z logical
    column start in ``|0>``, the four corners are chosen so every boundary
    stabilizer starts with eigenvalue +1, and the extra top qubits start in
    ``|0>``.
    """
    if layout.d != 3:
        raise UnsupportedDistanceError("state injection is only defined at distance 3")
    center = layout.center
    basis: dict[int, str] = {}
    for q in layout.logical_x.support:
        if q != center:
            basis[q] = "X"
    for q in layout.logical_z.support:
        if q != center:
            basis[q] = "Z"
    for s in layout.stabilizers:
        if s.boundary_kind != "bulk":
            for q in s.support:
                basis.setdefault(q, s.pauli)
    for q in layout.data_qubits:
        if q != center and q not in basis:
            raise AssertionError(f"data qubit {q} left without an initial basis")
    return InjectionLayout(center, dict(sorted(basis.items())))


# --- binary symplectic helpers -------------------------------------------------


def pauli_vector(n: int, pauli: str, support: Iterable[int]) -> np.ndarray:
    v = np.zeros(2 * n, dtype=np.uint8)
    for q in support:
        if pauli in "XY":
            v[q] = 1
        if pauli in "ZY":
            v[n + q] = 1
    return v


def symplectic_product(a: np.ndarray, b: np.ndarray) -> int:
    n = len(a) // 2
    return int((a[:n] @ b[n:] + a[n:] @ b[:n]) % 2)


def gf2_rank(rows: np.ndarray) -> int:
    m = np.array(rows, dtype=np.uint8) % 2
    rank = 0
    nrows, ncols = m.shape
    for col in range(ncols):
        pivot = next((i for i in range(rank, nrows) if m[i, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for i in range(nrows):
            if i != rank and m[i, col]:
                m[i] ^= m[rank]
        rank += 1
        if rank == nrows:
            break
    return rank


def stabilizer_matrix(layout: LatticeLayout) -> np.ndarray:
    n = layout.num_qubits
    return np.array([pauli_vector(n, s.pauli, s.support) for s in layout.stabilizers])


def css_distance(layout: LatticeLayout, max_weight: int | None = None) -> int:
    """Exact code distance by enumerating X- and Z-type operators of growing weight.

    The code is CSS, so the minimum-weight logical is either pure X or pure Z.
    """
    data = layout.data_qubits
    pos = {q: i for i, q in enumerate(data)}
    nd = len(data)

    def checks(pauli):
        return np.array(
            [[1 if q in s.support else 0 for q in data] for s in layout.stabilizers if s.pauli == pauli],
            dtype=np.uint8,
        )

    # X errors are caught by Z checks and vice versa
    hz, hx = checks("Z"), checks("X")
    lz = np.zeros(nd, dtype=np.uint8)
    lx = np.zeros(nd, dtype=np.uint8)
    for q in layout.logical_z.support:
        lz[pos[q]] = 1
    for q in layout.logical_x.support:
        lx[pos[q]] = 1
    limit = max_weight if max_weight is not None else layout.d
    for w in range(1, limit + 1):
        for combo in itertools.combinations(range(nd), w):
            cols = list(combo)
            if not (hz[:, cols].sum(axis=1) % 2).any() and lz[cols].sum() % 2:
                return w
            if not (hx[:, cols].sum(axis=1) % 2).any() and lx[cols].sum() % 2:
                return w
    return limit + 1


# --- drawing ---------------------------------------------------------------

_ROLE_FILL = {DATA: "#f4f4f4", SYNDROME: "#4a7fc1", BRIDGE: "#9a9a9a"}
_BASIS_FILL = {"Z": "#e8a33d", "X": "#5bb374"}


def render_svg(layout: LatticeLayout, injection: InjectionLayout | None = None, scale: int = 40) -> str:
    """SVG drawing: one circle per qubit, one line per coupling.

    Data qubits are colored by their initial basis when an injection layout
    is given; the injected center gets the ``center`` class and a red ring.
    """
    pos = {q.index: ((q.x + 1) * scale, (q.y + 1) * scale) for q in layout.qubits}
    width = (max(q.x for q in layout.qubits) + 2) * scale
    height = (max(q.y for q in layout.qubits) + 2) * scale
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<title>heavy-hex rotated surface code, d={layout.d}</title>',
        '<g class="edges" stroke="#666" stroke-width="2">',
    ]
    for a, b in sorted(tuple(sorted(e)) for e in layout.edges):
        (x1, y1), (x2, y2) = pos[a], pos[b]
        out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
    out.append("</g>")
    out.append('<g class="qubits" stroke="#222" stroke-width="1.5">')
    r = scale // 4
    for q in layout.qubits:
        x, y = pos[q.index]
        fill = _ROLE_FILL[q.role]
        cls = f"qubit {q.role}"
        extra = ""
        if injection is not None and q.role == DATA:
            if q.index == injection.center:
                cls += " center"
                fill = "#ffffff"
                extra = ' stroke="#d62728" stroke-width="4"'
            else:
                fill = _BASIS_FILL[injection.init_basis[q.index]]
        out.append(f'<circle class="{cls}" data-id="{q.index}" cx="{x}" cy="{y}" r="{r}" fill="{fill}"{extra}/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
