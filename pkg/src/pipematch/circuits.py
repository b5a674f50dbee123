"""Stabilizer-measurement circuits for toric, unrotated, and rotated surface codes.

Every family is scheduled on the same 8-step template per round so that all
gates have equal duration:

    step 0   reset all ancillas (|0>); round 0 also prepares data in |+>
    step 1   Hadamard on X-type ancillas
    steps 2-5  four CNOT layers
    step 6   Hadamard on X-type ancillas
    step 7   Z-basis measurement of all ancillas

X-type ancillas act as the control of their CNOTs, Z-type ancillas as the
target.  Qubits with nothing scheduled in a step get an explicit identity
gate, which carries noise like any other single-qubit gate.

CNOT layer order (chosen so that mid-sequence ancilla "hook" errors never
advance an error chain by two lattice units in its dangerous direction, and
so that no data qubit is used twice in one step):

    toric / unrotated : X ancillas (N, E, W, S),     Z ancillas (N, W, E, S)
    rotated           : X ancillas (NW, NE, SW, SE), Z ancillas (NW, SW, NE, SE)

Absent neighbors (lattice boundary) leave the ancilla idle for that step.
A noiseless X-basis readout of every data qubit is implied after the last
round; it closes the final detector layer and defines the logical-X outcome.
It is not part of ``Circuit.gates``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

FAMILIES = ("toric", "unrotated", "rotated")
CodeFamily = Literal["toric", "unrotated", "rotated"]

# Gate kinds: R = reset/init, M = measure, I = identity, H = Hadamard, CX = CNOT.
GATE_KINDS = ("R", "M", "I", "H", "CX")

CNOT_STEPS = (2, 3, 4, 5)

_TWO_QUBIT_PAULIS = tuple(
    a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II"
)


@dataclass(frozen=True)
class Gate:
    """One scheduled operation.

    ``qubits`` holds one qubit for R/M/I/H and (control, target) for CX.
    ``basis`` is the preparation/readout basis for R and M gates.
    """

    id: int
    kind: str
    qubits: tuple[int, ...]
    round: int
    step: int
    basis: Optional[str] = None

    def __post_init__(self):
        if self.kind == "CX":
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError("CX needs two distinct qubits")
        elif len(self.qubits) != 1:
            raise ValueError(f"{self.kind} takes exactly one qubit")


@dataclass(frozen=True)
class NoiseChannel:
    """Depolarizing noise attached to one gate.

    ``errors`` lists (pauli, probability) pairs.  For R and M gates the single
    entry is the preparation/readout flip expressed as the Pauli that flips
    the prepared state or the recorded outcome.
    """

    gate_id: int
    errors: tuple[tuple[str, float], ...]


@dataclass
class Stabilizer:
    """One plaquette/vertex check: ancilla qubit plus its data schedule.

    ``data_by_step`` has one entry per CNOT layer; ``None`` marks a skipped
    layer (truncated boundary stabilizer).
    """

    kind: str                     # "X" or "Z"
    coord: tuple[int, int]        # lattice site of the ancilla
    ancilla: int
    data_by_step: tuple[Optional[int], ...]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q in self.data_by_step if q is not None)


@dataclass
class Circuit:
    family: CodeFamily
    distance: int
    rounds: int
    gates: list[Gate]
    n_qubits: int
    qubit_coords: list[tuple[int, int]]
    data_qubits: tuple[int, ...]
    x_stabilizers: list[Stabilizer]
    z_stabilizers: list[Stabilizer]
    logical_x_support: frozenset[int] = field(default_factory=frozenset)

    @property
    def n_data(self) -> int:
        return len(self.data_qubits)

    @property
    def ancillas(self) -> tuple[int, ...]:
        return tuple(s.ancilla for s in self.x_stabilizers + self.z_stabilizers)

    def gate(self, gate_id: int) -> Gate:
        return self.gates[gate_id]


class _Layout:
    """Static lattice data for one (family, distance)."""

    def __init__(self, family: CodeFamily, distance: int):
        self.family = family
        self.d = distance
        self.data_coords: list[tuple[int, int]] = []
        # list of (coord, [data coord or None per CNOT layer])
        self.x_stabs: list[tuple[tuple[int, int], list]] = []
        self.z_stabs: list[tuple[tuple[int, int], list]] = []
        self.logical_coords: list[tuple[int, int]] = []
        getattr(self, f"_build_{family}")()

    def _neighbors(self, coord, dirs, valid, wrap=None):
        out = []
        for di, dj in dirs:
            i, j = coord[0] + di, coord[1] + dj
            if wrap is not None:
                i, j = i % wrap, j % wrap
            out.append((i, j) if valid(i, j) else None)
        return out

    def _build_toric(self):
        d = self.d
        n = 2 * d
        on = lambda i, j: 0 <= i < n and 0 <= j < n
        self.data_coords = [(i, j) for i in range(n) for j in range(n)
                            if (i + j) % 2 == 1]
        x_dirs = [(-1, 0), (0, 1), (0, -1), (1, 0)]   # N E W S
        z_dirs = [(-1, 0), (0, -1), (0, 1), (1, 0)]   # N W E S
        for i in range(0, n, 2):
            for j in range(0, n, 2):
                self.x_stabs.append(((i, j), self._neighbors((i, j), x_dirs, on, wrap=n)))
        for i in range(1, n, 2):
            for j in range(1, n, 2):
                self.z_stabs.append(((i, j), self._neighbors((i, j), z_dirs, on, wrap=n)))
        self.logical_coords = [(2 * a, 1) for a in range(d)]

    def _build_unrotated(self):
        d = self.d
        n = 2 * d - 1
        on = lambda i, j: 0 <= i < n and 0 <= j < n
        self.data_coords = [(i, j) for i in range(n) for j in range(n)
                            if (i + j) % 2 == 0]
        x_dirs = [(-1, 0), (0, 1), (0, -1), (1, 0)]   # N E W S
        z_dirs = [(-1, 0), (0, -1), (0, 1), (1, 0)]   # N W E S
        for i in range(0, n, 2):
            for j in range(1, n, 2):
                self.x_stabs.append(((i, j), self._neighbors((i, j), x_dirs, on)))
        for i in range(1, n, 2):
            for j in range(0, n, 2):
                self.z_stabs.append(((i, j), self._neighbors((i, j), z_dirs, on)))
        self.logical_coords = [(2 * r, 0) for r in range(d)]

    def _build_rotated(self):
        d = self.d
        data = {(i, j) for i in range(1, 2 * d, 2) for j in range(1, 2 * d, 2)}
        self.data_coords = sorted(data)
        on = lambda i, j: (i, j) in data
        x_dirs = [(-1, -1), (-1, 1), (1, -1), (1, 1)]   # NW NE SW SE
        z_dirs = [(-1, -1), (1, -1), (-1, 1), (1, 1)]   # NW SW NE SE
        for r in range(0, 2 * d + 1, 2):
            for c in range(0, 2 * d + 1, 2):
                is_x = (r + c) % 4 == 0
                if r in (0, 2 * d) and not is_x:
                    continue
                if c in (0, 2 * d) and is_x:
                    continue
                if r in (0, 2 * d) and c in (0, 2 * d):
                    continue
                dirs = x_dirs if is_x else z_dirs
                nbrs = self._neighbors((r, c), dirs, on)
                if not any(q is not None for q in nbrs):
                    continue
                (self.x_stabs if is_x else self.z_stabs).append(((r, c), nbrs))
        self.logical_coords = [(r, 1) for r in range(1, 2 * d, 2)]


def _expected_counts(family: CodeFamily, d: int) -> tuple[int, int, int]:
    """(n_data, n_x, n_z) forced by the standard layouts."""
    if family == "toric":
        return 2 * d * d, d * d, d * d
    if family == "unrotated":
        return d * d + (d - 1) * (d - 1), d * (d - 1), d * (d - 1)
    return d * d, (d * d - 1) // 2, (d * d - 1) // 2


def build_circuit(family: CodeFamily, distance: int, rounds: int) -> Circuit:
    """Construct the scheduled measurement circuit for one code family.

    Parameters
    ----------
    family : one of "toric", "unrotated", "rotated"
    distance : odd integer >= 3
    rounds : number of measurement rounds, >= 1

    The construction is deterministic: identical arguments produce an
    identical gate list.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if distance < 3 or distance % 2 == 0:
        raise ValueError("distance must be an odd integer >= 3")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")

    layout = _Layout(family, distance)
    qubit_coords = sorted(set(layout.data_coords)
                          | {c for c, _ in layout.x_stabs}
                          | {c for c, _ in layout.z_stabs})
    index = {c: q for q, c in enumerate(qubit_coords)}
    data_qubits = tuple(index[c] for c in sorted(layout.data_coords))

    x_stabs = [Stabilizer("X", c, index[c],
                          tuple(None if n is None else index[n] for n in nbrs))
               for c, nbrs in sorted(layout.x_stabs)]
    z_stabs = [Stabilizer("Z", c, index[c],
                          tuple(None if n is None else index[n] for n in nbrs))
               for c, nbrs in sorted(layout.z_stabs)]

    n_data, n_x, n_z = _expected_counts(family, distance)
    assert len(data_qubits) == n_data and len(x_stabs) == n_x and len(z_stabs) == n_z

    gates: list[Gate] = []

    def add(kind, qubits, rnd, step, basis=None):
        gates.append(Gate(len(gates), kind, tuple(qubits), rnd, step, basis))

    data_set = set(data_qubits)
    for rnd in range(rounds):
        for step in range(8):
            busy: set[int] = set()
            if step == 0:
                for s in x_stabs + z_stabs:
                    add("R", (s.ancilla,), rnd, step, basis="Z")
                    busy.add(s.ancilla)
                if rnd == 0:
                    for q in data_qubits:
                        add("R", (q,), rnd, step, basis="X")
                        busy.add(q)
            elif step in (1, 6):
                for s in x_stabs:
                    add("H", (s.ancilla,), rnd, step)
                    busy.add(s.ancilla)
            elif step in CNOT_STEPS:
                layer = CNOT_STEPS.index(step)
                for s in x_stabs:
                    q = s.data_by_step[layer]
                    if q is not None:
                        add("CX", (s.ancilla, q), rnd, step)
                        busy.update((s.ancilla, q))
                for s in z_stabs:
                    q = s.data_by_step[layer]
                    if q is not None:
                        add("CX", (q, s.ancilla), rnd, step)
                        busy.update((s.ancilla, q))
            elif step == 7:
                for s in x_stabs + z_stabs:
                    add("M", (s.ancilla,), rnd, step, basis="Z")
                    busy.add(s.ancilla)
            for q in range(len(qubit_coords)):
                if q not in busy:
                    add("I", (q,), rnd, step)

    # Sort for a stable serialization order; ids follow the sorted order.
    gates.sort(key=lambda g: (g.round, g.step, g.qubits))
    gates = [Gate(i, g.kind, g.qubits, g.round, g.step, g.basis)
             for i, g in enumerate(gates)]

    n_slots = 8 * len(qubit_coords) * rounds
    assert sum(len(g.qubits) for g in gates) == n_slots, "schedule must fill every slot once"

    return Circuit(
        family=family,
        distance=distance,
        rounds=rounds,
        gates=gates,
        n_qubits=len(qubit_coords),
        qubit_coords=qubit_coords,
        data_qubits=data_qubits,
        x_stabilizers=x_stabs,
        z_stabilizers=z_stabs,
        logical_x_support=frozenset(index[c] for c in layout.logical_coords),
    )


def attach_noise(circuit: Circuit, p: float) -> list[NoiseChannel]:
    """Attach standard depolarizing noise of strength ``p`` to every gate.

    CNOTs suffer the 15 nontrivial two-qubit Paulis with probability p/15
    each; single-qubit gates (including explicit identities) suffer X, Y, Z
    with probability p/3 each; resets prepare and measurements report the
    wrong state with probability p.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie strictly between 0 and 1")
    channels = []
    for g in circuit.gates:
        if g.kind == "CX":
            errors = tuple((pp, p / 15.0) for pp in _TWO_QUBIT_PAULIS)
        elif g.kind in ("H", "I"):
            errors = (("X", p / 3.0), ("Y", p / 3.0), ("Z", p / 3.0))
        elif g.kind == "R":
            # Wrong prepared state: the Pauli that flips the prepared basis.
            errors = (("Z" if g.basis == "X" else "X", p),)
        elif g.kind == "M":
            # Wrong recorded outcome: Pauli flip applied just before readout.
            errors = (("Z" if g.basis == "X" else "X", p),)
        else:
            raise ValueError(f"unknown gate kind {g.kind!r}")
        channels.append(NoiseChannel(g.id, errors))
    return channels


def serialize_circuit(circuit: Circuit) -> str:
    """Line-oriented text form, one gate per line: ``ROUND STEP KIND QUBITS...``.

    R/M kinds carry their basis as a suffix (``RX``, ``MZ``).  The format is
    stable so that golden files can be diffed.
    """
    lines = [f"# {circuit.family} d={circuit.distance} rounds={circuit.rounds}"]
    for g in circuit.gates:
        kind = g.kind + (g.basis or "") if g.kind in ("R", "M") else g.kind
        lines.append(f"{g.round} {g.step} {kind} " + " ".join(map(str, g.qubits)))
    return "\n".join(lines) + "\n"
