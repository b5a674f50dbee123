"""Pauli-frame simulation: error propagation and Monte-Carlo shot sampling.

The circuits are Clifford and the noise is Pauli, so only the error frame is
tracked, never the quantum state.  Detection events live on a space-time
lattice of detector coordinates (t, i, j):

    X-type detectors  t = 0..rounds      (round 0 compares against the
        deterministic |+> preparation; layer ``rounds`` is closed by the
        noiseless final X-basis data readout)
    Z-type detectors  t = 1..rounds-1    (plaquette outcomes are random in
        the first round and have no closing readout, so only consecutive-
        round comparisons exist)

A single reverse sweep over the gate list computes, for every gate and both
Pauli components of each of its qubits, the set of detectors flipped by an
error at that position.  Every enumerated error is then a constant-time XOR
of those sets, and a full noisy shot is the XOR of its independently fired
errors (linearity of Pauli frames through Clifford circuits).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .circuits import Circuit, NoiseChannel

Coord3 = tuple[int, int, int]

#: Cap asserted during enumeration; a single circuit fault never flips more
#: than four detectors on these schedules.
MAX_EVENTS_PER_ERROR = 4


@dataclass(frozen=True)
class ShotResult:
    """Fired detection events and the true logical-X flip for one shot."""

    events: frozenset[Coord3]
    logical_x_flip: bool


class DetectorIndex:
    """Bijection between detector coordinates (t, i, j) and dense indices.

    Indices are assigned in increasing (t, i, j) order, so index order is the
    stream-processing order used by pre-matching.
    """

    def __init__(self, circuit: Circuit):
        R = circuit.rounds
        coords: list[Coord3] = []
        for t in range(R + 1):
            for s in circuit.x_stabilizers:
                coords.append((t, s.coord[0], s.coord[1]))
        for t in range(1, R):
            for s in circuit.z_stabilizers:
                coords.append((t, s.coord[0], s.coord[1]))
        coords.sort()
        self.coords = coords
        self.index = {c: k for k, c in enumerate(coords)}
        self.n = len(coords)

    def __len__(self) -> int:
        return self.n


class SensitivityModel:
    """Per-gate detector sensitivities of X and Z frame components.

    For gate g and qubit slot k, ``sens[g][k] = (sx, sz)`` where sx (sz) is
    the sorted tuple of detector indices flipped by an X (Z) error on that
    qubit at the gate's noise position.  The logical-X observable is carried
    as the sentinel index ``len(detectors)``.

    Noise position convention: after the gate for R/H/I/CX, before the
    readout for M (a readout flip is an X just ahead of a Z-basis measure).
    """

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.detectors = DetectorIndex(circuit)
        self.logical_sentinel = self.detectors.n
        self._sweep()

    def _measure_targets(self, stab_kind: str, coord, rnd: int) -> frozenset[int]:
        R = self.circuit.rounds
        idx = self.detectors.index
        i, j = coord
        if stab_kind == "X":
            return frozenset((idx[(rnd, i, j)], idx[(rnd + 1, i, j)]))
        dets = []
        if 1 <= rnd <= R - 1:
            dets.append(idx[(rnd, i, j)])
        if 1 <= rnd + 1 <= R - 1:
            dets.append(idx[(rnd + 1, i, j)])
        return frozenset(dets)

    def _sweep(self):
        circuit = self.circuit
        idx = self.detectors.index
        L = self.logical_sentinel
        stab_of_ancilla = {s.ancilla: s
                           for s in circuit.x_stabilizers + circuit.z_stabilizers}

        empty: frozenset[int] = frozenset()
        sx = [empty] * circuit.n_qubits
        sz = [empty] * circuit.n_qubits

        # Virtual closure: a residual Z on a data qubit flips the final
        # X-basis readout, hence every closing detector containing it and
        # the logical-X observable if it sits on the logical support.
        R = circuit.rounds
        for s in circuit.x_stabilizers:
            det = frozenset((idx[(R, s.coord[0], s.coord[1])],))
            for q in s.support:
                sz[q] = sz[q] ^ det
        for q in circuit.logical_x_support:
            sz[q] = sz[q] ^ frozenset((L,))

        sens: list[tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]] = \
            [None] * len(circuit.gates)  # type: ignore[list-item]

        def record(g):
            sens[g.id] = tuple(
                (tuple(sorted(sx[q])), tuple(sorted(sz[q]))) for q in g.qubits
            )

        for g in reversed(circuit.gates):
            if g.kind == "M":
                a = g.qubits[0]
                stab = stab_of_ancilla[a]
                sx[a] = self._measure_targets(stab.kind, stab.coord, g.round)
                sz[a] = empty
                record(g)
            elif g.kind == "R":
                record(g)
                q = g.qubits[0]
                sx[q] = empty
                sz[q] = empty
            elif g.kind == "H":
                record(g)
                q = g.qubits[0]
                sx[q], sz[q] = sz[q], sx[q]
            elif g.kind == "CX":
                record(g)
                c, t = g.qubits
                sx[c] = sx[c] ^ sx[t]
                sz[t] = sz[t] ^ sz[c]
            else:
                record(g)

        self._sens = sens

    def events_for(self, gate_id: int, pauli: str) -> tuple[tuple[int, ...], bool]:
        """Detector indices flipped by ``pauli`` on gate ``gate_id`` plus the
        logical-X flip, in an otherwise noiseless circuit."""
        gate = self.circuit.gates[gate_id]
        if len(pauli) != len(gate.qubits):
            raise ValueError(
                f"pauli {pauli!r} does not fit gate {gate_id} on {len(gate.qubits)} qubit(s)")
        acc: frozenset[int] = frozenset()
        for k, c in enumerate(pauli):
            if c == "I":
                continue
            if c not in "XYZ":
                raise ValueError(f"bad pauli character {c!r}")
            gx, gz = self._sens[gate_id][k]
            if c in ("X", "Y"):
                acc = acc ^ frozenset(gx)
            if c in ("Z", "Y"):
                acc = acc ^ frozenset(gz)
        logical = self.logical_sentinel in acc
        events = tuple(sorted(acc - {self.logical_sentinel}))
        assert len(events) <= MAX_EVENTS_PER_ERROR, \
            f"error ({gate_id}, {pauli}) fired {len(events)} detectors"
        return events, logical


@dataclass
class ErrorTable:
    """Flat enumeration of every channel error with its detector signature."""

    gate_ids: np.ndarray
    paulis: list[str]
    probs: np.ndarray
    events: list[tuple[int, ...]]
    logicals: np.ndarray
    n_detectors: int

    def __len__(self) -> int:
        return len(self.paulis)

    def signature_matrix(self) -> csr_matrix:
        """Sparse GF(2) incidence matrix, shape (n_detectors + 1, n_errors).

        Row ``n_detectors`` is the logical-X flip row.
        """
        rows, cols = [], []
        for col, ev in enumerate(self.events):
            for r in ev:
                rows.append(r)
                cols.append(col)
            if self.logicals[col]:
                rows.append(self.n_detectors)
                cols.append(col)
        data = np.ones(len(rows), dtype=np.int8)
        return csr_matrix((data, (rows, cols)),
                          shape=(self.n_detectors + 1, len(self.paulis)))


def enumerate_errors(circuit: Circuit, channels: list[NoiseChannel],
                     model: SensitivityModel | None = None) -> ErrorTable:
    """Tabulate detector signatures for every error of every channel."""
    model = model or SensitivityModel(circuit)
    gate_ids, paulis, probs, events, logicals = [], [], [], [], []
    for ch in channels:
        for pauli, prob in ch.errors:
            ev, log = model.events_for(ch.gate_id, pauli)
            gate_ids.append(ch.gate_id)
            paulis.append(pauli)
            probs.append(prob)
            events.append(ev)
            logicals.append(log)
    return ErrorTable(
        gate_ids=np.asarray(gate_ids, dtype=np.int64),
        paulis=paulis,
        probs=np.asarray(probs, dtype=np.float64),
        events=events,
        logicals=np.asarray(logicals, dtype=bool),
        n_detectors=model.detectors.n,
    )


def propagate_error(circuit: Circuit, gate_id: int, pauli: str,
                    model: SensitivityModel | None = None
                    ) -> tuple[frozenset[Coord3], bool]:
    """Detection events and logical-X flip of a single error.

    Deterministic; the identity Pauli returns (empty set, False).
    """
    if not 0 <= gate_id < len(circuit.gates):
        raise ValueError(f"no gate with id {gate_id}")
    model = model or SensitivityModel(circuit)
    ev, log = model.events_for(gate_id, pauli)
    coords = frozenset(model.detectors.coords[k] for k in ev)
    return coords, log


def forward_reference_events(circuit: Circuit,
                             insertions: list[tuple[int, str]]
                             ) -> tuple[frozenset[Coord3], bool]:
    """Independent forward-simulation oracle.

    Walks the full circuit once with explicit X/Z frame bits per qubit,
    applying each inserted Pauli at its gate's noise position, and derives
    detectors from measurement-outcome flips.  Used to cross-check the
    reverse-sweep sensitivity model; shares no code with it.
    """
    by_gate: dict[int, list[str]] = {}
    for gid, pauli in insertions:
        gate = circuit.gates[gid]
        if len(pauli) != len(gate.qubits):
            raise ValueError(f"pauli {pauli!r} does not fit gate {gid}")
        by_gate.setdefault(gid, []).append(pauli)

    fx = np.zeros(circuit.n_qubits, dtype=bool)
    fz = np.zeros(circuit.n_qubits, dtype=bool)
    stab_of_ancilla = {s.ancilla: s
                       for s in circuit.x_stabilizers + circuit.z_stabilizers}
    outcome_flips: dict[tuple[int, int], bool] = {}  # (ancilla, round) -> flip

    def apply_paulis(g):
        for pauli in by_gate.get(g.id, ()):
            for k, c in enumerate(pauli):
                q = g.qubits[k]
                if c in ("X", "Y"):
                    fx[q] ^= True
                if c in ("Z", "Y"):
                    fz[q] ^= True

    for g in circuit.gates:
        if g.kind == "M":
            apply_paulis(g)  # readout flip sits before the measurement
            a = g.qubits[0]
            outcome_flips[(a, g.round)] = bool(fx[a])
        elif g.kind == "R":
            q = g.qubits[0]
            fx[q] = fz[q] = False
            apply_paulis(g)
        elif g.kind == "H":
            q = g.qubits[0]
            fx[q], fz[q] = fz[q], fx[q]
            apply_paulis(g)
        elif g.kind == "CX":
            c, t = g.qubits
            fx[t] ^= fx[c]
            fz[c] ^= fz[t]
            apply_paulis(g)
        else:
            apply_paulis(g)

    R = circuit.rounds
    fired: set[Coord3] = set()
    for s in circuit.x_stabilizers:
        i, j = s.coord
        flips = [outcome_flips[(s.ancilla, t)] for t in range(R)]
        closure = bool(np.logical_xor.reduce([fz[q] for q in s.support]))
        flips.append(closure)
        prev = False
        for t, f in enumerate(flips):
            if f != prev:
                fired.add((t, i, j))
            prev = f
    for s in circuit.z_stabilizers:
        i, j = s.coord
        for t in range(1, R):
            if outcome_flips[(s.ancilla, t)] != outcome_flips[(s.ancilla, t - 1)]:
                fired.add((t, i, j))

    logical = bool(np.logical_xor.reduce(
        [fz[q] for q in sorted(circuit.logical_x_support)]))
    return frozenset(fired), logical


class ShotSampler:
    """Reproducible batched sampler of noisy shots.

    Shots are grouped into fixed-size batches; batch ``b`` draws from
    ``numpy`` Philox-backed ``default_rng(SeedSequence((seed, b)))``, so the
    shot stream is independent of how batches are distributed over workers.
    """

    BATCH = 1024

    def __init__(self, table: ErrorTable, seed: int):
        self.table = table
        self.seed = int(seed)
        self._sig = table.signature_matrix()
        self._probs = table.probs
        # Keep the dense uniform block under ~50 MB.
        self._chunk = max(1, min(self.BATCH, 6_000_000 // max(1, len(table))))

    def sample_batch(self, batch_index: int, batch_size: int | None = None
                     ) -> tuple[list[np.ndarray], np.ndarray]:
        """Events (per-shot sorted detector-index arrays) and logical flips."""
        size = self.BATCH if batch_size is None else batch_size
        rng = np.random.default_rng(np.random.SeedSequence((self.seed, batch_index)))
        n_err = len(self.table)
        nd = self.table.n_detectors
        events: list[np.ndarray] = []
        flips: list[np.ndarray] = []
        done = 0
        while done < size:
            cols = min(self._chunk, size - done)
            fired = rng.random((n_err, cols)) < self._probs[:, None]
            sig = (self._sig @ fired.astype(np.int8)) & 1
            det_rows = sig[:nd].T  # (cols, nd)
            shots, dets = np.nonzero(det_rows)
            splits = np.searchsorted(shots, np.arange(1, cols))
            events.extend(np.split(dets, splits))
            flips.append(sig[nd].astype(bool))
            done += cols
        return events, np.concatenate(flips)


def sample_shot(circuit: Circuit, channels: list[NoiseChannel], seed: int,
                table: ErrorTable | None = None) -> ShotResult:
    """Sample one noisy shot; equals the XOR of its fired errors' signatures."""
    table = table or enumerate_errors(circuit, channels)
    sampler = ShotSampler(table, seed)
    events, flips = sampler.sample_batch(0, batch_size=1)
    det_index = DetectorIndex(circuit)
    coords = frozenset(det_index.coords[k] for k in events[0])
    return ShotResult(events=coords, logical_x_flip=bool(flips[0]))
