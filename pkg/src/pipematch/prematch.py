"""Greedy streaming pre-matching of detection events.

Fired detection events are processed exactly once, in increasing
(t, i, j) coordinate order, and each carries one of three states:

    ZP  zero-prematched (initial)
    HP  half-prematched: a reference stored by an earlier event that chose
        this one as its lowest-weight neighbor
    FP  fully prematched: mutually paired with a neighbor, or matched to
        the boundary

Processing an event finds its lowest-weight incident option among fired
neighbors and its boundary edge (sorted adjacency makes this a constant-cost
scan), then applies the state-transformation table.  Two half-matches in
opposite directions make a pair mutual; anything inconsistent is reset
rather than repaired, so after its turn an event is only ever ZP or FP.
State combinations that cannot arise in a correct execution raise
``TransitionError``, and driving the transition table exhaustively is the
cheap way to certify alternative (e.g. parallel) executions.

Boundary matches are allowed only when no fired neighbor is half-matched or
already matched to the boundary itself: two neighboring events both leaving
to the boundary is rarely part of a low-weight global matching.

The pass is greedy and local; it offers no optimality guarantee and is not
a decoder on its own.  Its pairs feed the correlation reweighting stage and,
optionally, get frozen as high-confidence matches for the final matcher.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .errors import TransitionError
from .graph import BOUNDARY, DetectionGraph, _BoundaryType
from .sim import Coord3

ZP = "ZP"
HP = "HP"
FP = "FP"

Partner = Union[Coord3, _BoundaryType, None]


@dataclass(frozen=True)
class PrematchState:
    """State label plus partner reference of one detection event."""

    state: str = ZP
    partner: Partner = None


@dataclass
class PrematchResult:
    pairs: set[frozenset[Coord3]]
    boundary_matches: set[Coord3]
    unmatched: set[Coord3]
    #: matches in the order they were formed (drives last-write-wins
    #: reweighting); entries are (coord, coord) or (coord, BOUNDARY)
    order: list[tuple] = field(default_factory=list)


@dataclass
class OpCounter:
    """Work counter: adjacency entries scanned plus state updates applied."""

    ops: int = 0


def transition(a_coord: Coord3, a: PrematchState,
               b_coord: Coord3, b: PrematchState
               ) -> tuple[PrematchState, PrematchState]:
    """Apply the state-transformation table for processed event A whose
    lowest-weight fired neighbor is B.

    Returns the new (A, B) states; raises ``TransitionError`` for the E
    cells.  Which sub-table applies follows from the coordinate order.
    """
    if a_coord == b_coord:
        raise ValueError("an event cannot neighbor itself")
    if b_coord < a_coord:
        # B lies in the past.
        if a.state == FP:
            raise TransitionError(
                f"{a_coord} is already FP while being processed (B={b_coord})")
        if b.state == HP:
            raise TransitionError(
                f"past event {b_coord} is still HP when {a_coord} is processed")
        if a.state == ZP:
            return a, b                       # B missed its chance; no change
        # A is HP.
        if b.state == ZP:
            if a.partner == b_coord:          # both directions fulfilled
                return (PrematchState(FP, b_coord), PrematchState(FP, a_coord))
            return PrematchState(ZP), b       # reference elsewhere: reset A
        # B is FP.
        if a.partner == b_coord:
            raise TransitionError(
                f"{a_coord} references already-matched {b_coord}")
        return PrematchState(ZP), b
    else:
        # B lies in the future and cannot have been processed yet.
        if a.state == FP:
            raise TransitionError(
                f"{a_coord} is already FP while being processed (B={b_coord})")
        if b.state == FP:
            raise TransitionError(
                f"future event {b_coord} is already FP when {a_coord} is processed")
        if b.state == ZP:
            if a.state == ZP:
                return a, PrematchState(HP, a_coord)   # half-match toward A
            return PrematchState(ZP), b       # A's backward direction failed
        # B is HP.
        if b.partner == a_coord:
            raise TransitionError(
                f"future event {b_coord} already references {a_coord}")
        if a.state == ZP:
            return a, PrematchState(ZP)       # strict rule: break B's half-match
        return PrematchState(ZP), PrematchState(ZP)


class _Weights:
    """Edge weights with an optional overlay; resorts affected adjacency."""

    def __init__(self, graph: DetectionGraph, overlay=None):
        self.graph = graph
        self.overlay = overlay
        if overlay is None:
            self._touched = frozenset()
        else:
            self._touched = frozenset(overlay.written_edges())

    def weight(self, edge_id: int) -> float:
        if self.overlay is not None and edge_id in self._touched:
            return self.overlay.weight(edge_id)
        return self.graph.edges[edge_id].weight

    def adjacency(self, v_idx: int) -> list[tuple[int, int]]:
        base = self.graph.adjacency[v_idx]
        if not self._touched or not any(e in self._touched for e, _ in base):
            return base
        return sorted(base, key=lambda t: (self.weight(t[0]), t[0]))

    def boundary_edge(self, v_idx: int) -> Optional[int]:
        return self.graph.boundary_edge_at.get(v_idx)


def pmc_choose(v: Coord3, events, graph: DetectionGraph,
               states: Optional[dict] = None, mode: str = "relaxed",
               overlay=None, counter: Optional[OpCounter] = None):
    """Lowest-weight pre-match option of fired event ``v``.

    Candidates are fired graph neighbors and, when ``v`` is still ZP and the
    boundary avoidance rule allows it, the event's boundary edge (an event
    already half-matched can only resolve through the transition table).
    Ties resolve to the lower edge id (the canonical endpoint ordering).
    In strict mode a neighbor is only a candidate if it is the unique
    lowest-weight fired neighbor.  Returns a neighbor coordinate, BOUNDARY,
    or None.
    """
    states = states if states is not None else {}
    weights = overlay if isinstance(overlay, _Weights) else _Weights(graph, overlay)
    fired = events if isinstance(events, (set, frozenset, dict)) else set(events)
    v_idx = graph.coord_index[v]
    counter = counter or OpCounter()
    v_is_zp = states.get(v, PrematchState()).state == ZP

    options: list[tuple[float, int, object]] = []
    neighbor_opts: list[tuple[float, int, Coord3]] = []
    blocked_boundary = False
    for eid, other in weights.adjacency(v_idx):
        counter.ops += 1
        coord = graph.vertices[other]
        if coord not in fired or coord == v:
            continue
        st = states.get(coord, PrematchState())
        if st.state == HP or (st.state == FP and st.partner is BOUNDARY):
            blocked_boundary = True
        neighbor_opts.append((weights.weight(eid), eid, coord))

    if mode == "strict" and neighbor_opts:
        neighbor_opts.sort(key=lambda t: (t[0], t[1]))
        lowest = neighbor_opts[0][0]
        if sum(1 for w, _, _ in neighbor_opts if w == lowest) > 1:
            neighbor_opts = []                # no unique lowest-weight neighbor
        else:
            neighbor_opts = neighbor_opts[:1]
    options.extend(neighbor_opts)

    bnd = weights.boundary_edge(v_idx)
    if bnd is not None and v_is_zp and not blocked_boundary:
        options.append((weights.weight(bnd), bnd, BOUNDARY))

    if not options:
        return None
    options.sort(key=lambda t: (t[0], t[1]))
    counter.ops += 1
    return options[0][2]


def prematch(events: Iterable[Coord3], graph: DetectionGraph,
             mode: str = "relaxed", overlay=None,
             trace: Optional[list] = None,
             counter: Optional[OpCounter] = None) -> PrematchResult:
    """Single-pass pre-matching of the fired events in coordinate order."""
    if mode not in ("relaxed", "strict"):
        raise ValueError(f"mode must be 'relaxed' or 'strict', not {mode!r}")
    fired = sorted(set(events))
    fired_set = set(fired)
    states: dict[Coord3, PrematchState] = {}
    counter = counter if counter is not None else OpCounter()
    weights = _Weights(graph, overlay)
    result = PrematchResult(pairs=set(), boundary_matches=set(), unmatched=set())

    def note(coord, old, new):
        if trace is not None and old != new:
            p = new.partner
            ptxt = "-" if p is None else ("B" if p is BOUNDARY else f"{p}")
            trace.append(f"{coord} {old.state}->{new.state} {ptxt}")

    for v in fired:
        st = states.get(v, PrematchState())
        if st.state not in (ZP, HP):
            raise TransitionError(f"{v} enters processing in state {st.state}")
        choice = pmc_choose(v, fired_set, graph, states, mode, weights, counter)
        counter.ops += 1
        if choice is None:
            if st.state == HP:                # half-match cannot complete
                states[v] = PrematchState(ZP)
                note(v, st, states[v])
            continue
        if choice is BOUNDARY:
            new = PrematchState(FP, BOUNDARY)
            states[v] = new
            note(v, st, new)
            result.boundary_matches.add(v)
            result.order.append((v, BOUNDARY))
            continue
        b_st = states.get(choice, PrematchState())
        new_a, new_b = transition(v, st, choice, b_st)
        if new_a is not st:
            states[v] = new_a
            note(v, st, new_a)
        if new_b is not b_st:
            states[choice] = new_b
            note(choice, b_st, new_b)
        if new_a.state == FP:
            result.pairs.add(frozenset((v, choice)))
            result.order.append((choice, v) if choice < v else (v, choice))

    for v in fired:
        st = states.get(v, PrematchState())
        assert st.state != HP, f"{v} left HP after the pass"
        if st.state == ZP:
            result.unmatched.add(v)

    matched = {c for pair in result.pairs for c in pair} | result.boundary_matches
    assert matched | result.unmatched == fired_set
    return result
