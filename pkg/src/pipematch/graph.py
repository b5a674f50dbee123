"""Detection-graph construction with correlated-error analysis.

Every enumerated circuit error is classified by how many detectors it flips:

    pass 1  single-event errors create boundary edges, uniquely identified
            by the coordinate of the generating detection event;
    pass 2  two-event errors create bulk edges between their two detectors,
            except that an error whose both events already own boundary
            edges is set aside;
    pass 3  everything left (the set-aside pairs and all 3+/4-event errors)
            is decomposed into a symmetric difference of existing edges, and
            the error joins every component edge's list, annotated with the
            full decomposition.

The pass-3 annotations drive the correlation analysis: for a parent edge,
every distinct other edge appearing in its errors' decompositions is a
correlated edge, whose conditional probability (given the parent is deemed
present) feeds the reweighting stage.

Edge probabilities avoid naive summing, which can exceed 1 at higher error
rates: the errors on an edge are grouped by generating gate, each gate's
probabilities are summed into one value, and the edge probability is the
probability that exactly one of those independent groups fires.  Weights
are w = -ln p, positive for p < 1 and free of negative-weight issues.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix

from .circuits import Circuit, NoiseChannel
from .errors import DecompositionError, GraphConstructionError
from .sim import Coord3, ErrorTable, SensitivityModel, enumerate_errors


class _BoundaryType:
    """Singleton endpoint marker for edges that leave the lattice."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOUNDARY"


BOUNDARY = _BoundaryType()

#: Sorts boundary endpoints after every real coordinate.
_COORD_MAX: Coord3 = (1 << 30, 1 << 30, 1 << 30)


@dataclass
class EdgeError:
    """One generating error on an edge's list."""

    gate_id: int
    pauli: str
    probability: float
    decomposed_edge_ids: Optional[tuple[int, ...]] = None


@dataclass
class Edge:
    id: int
    u: Coord3
    v: Coord3 | _BoundaryType
    u_idx: int
    v_idx: int                      # -1 for boundary edges
    errors: list[EdgeError] = field(default_factory=list)
    p_edge: float = 0.0             # probability of exactly one local error
    weight: float = math.inf        # -ln(p_edge)
    logical: bool = False           # flips the logical-X observable

    @property
    def is_boundary(self) -> bool:
        return self.v_idx < 0


@dataclass(frozen=True)
class CorrelatedEdgeLink:
    """Parent edge -> correlated edge with conditional probability.

    ``conditional_p`` is the probability of the correlated edge given that
    the parent edge is present: the exactly-one-error evaluation restricted
    to the parent's errors carrying this decomposition partner, divided by
    the parent's full edge probability.
    """

    parent_edge: int
    correlated_edge: int
    conditional_p: float


@dataclass
class DetectionGraph:
    circuit: Circuit
    vertices: list[Coord3]
    coord_index: dict[Coord3, int]
    edges: list[Edge]
    #: per vertex: (edge_id, other_vertex_idx or -1), ascending (weight, edge id)
    adjacency: list[list[tuple[int, int]]]
    boundary_edge_at: dict[int, int]
    links: list[CorrelatedEdgeLink]
    links_by_parent: dict[int, tuple[CorrelatedEdgeLink, ...]]

    def __post_init__(self):
        self._csr_cache = None
        self._boundary_w = None
        self._pair_edge = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edge_between(self, u_idx: int, v_idx: int) -> Optional[Edge]:
        for eid, other in self.adjacency[u_idx]:
            if other == v_idx:
                return self.edges[eid]
        return None

    def base_weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.edges])

    def weight_csr(self) -> tuple[csr_matrix, np.ndarray]:
        """Symmetric bulk-edge weight matrix plus per-edge data positions.

        Returns (csr, positions) where positions[k] holds the one or two
        offsets of edge k inside ``csr.data`` (boundary edges have none);
        used to run shortest paths under per-shot reweighted overlays by
        patching a copy of the data array.
        """
        if self._csr_cache is not None:
            return self._csr_cache
        n = self.n_vertices
        rows, cols, data, eids = [], [], [], []
        for e in self.edges:
            if e.is_boundary:
                continue
            rows += [e.u_idx, e.v_idx]
            cols += [e.v_idx, e.u_idx]
            data += [e.weight, e.weight]
            eids += [e.id, e.id]
        mat = csr_matrix((data, (rows, cols)), shape=(n, n))
        # coo->csr sums duplicates, but endpoints are unique per edge.
        order = np.lexsort((np.array(cols), np.array(rows)))
        positions: list[list[int]] = [[] for _ in self.edges]
        for slot, k in enumerate(order):
            positions[eids[k]].append(slot)
        pos_arr = np.full((len(self.edges), 2), -1, dtype=np.int64)
        for eid, slots in enumerate(positions):
            for col, slot in enumerate(slots):
                pos_arr[eid, col] = slot
        self._csr_cache = (mat, pos_arr)
        return self._csr_cache

    def boundary_weight_vector(self) -> np.ndarray:
        if self._boundary_w is None:
            w = np.full(self.n_vertices, np.inf)
            for v_idx, eid in self.boundary_edge_at.items():
                w[v_idx] = self.edges[eid].weight
            self._boundary_w = w
        return self._boundary_w

    def pair_edge_map(self) -> dict[tuple[int, int], int]:
        """(u_idx, v_idx) -> bulk edge id, both orientations."""
        if self._pair_edge is None:
            self._pair_edge = {}
            for e in self.edges:
                if not e.is_boundary:
                    self._pair_edge[(e.u_idx, e.v_idx)] = e.id
                    self._pair_edge[(e.v_idx, e.u_idx)] = e.id
        return self._pair_edge

    def dump(self) -> str:
        """One edge per line: endpoints, probability, sorted correlation links."""
        lines = []
        for e in self.edges:
            end = "BOUNDARY" if e.is_boundary else f"({e.v[0]},{e.v[1]},{e.v[2]})"
            links = sorted(
                (l.correlated_edge, l.conditional_p)
                for l in self.links_by_parent.get(e.id, ())
            )
            link_txt = " ".join(f"{c}:{p:.12g}" for c, p in links)
            lines.append(
                f"({e.u[0]},{e.u[1]},{e.u[2]}) {end} p_e={e.p_edge:.12g}"
                + (f" links {link_txt}" if link_txt else "")
            )
        return "\n".join(lines) + "\n"


def weight_of(p: float) -> float:
    """Edge weight w = -ln p for a probability strictly inside (0, 1)."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    return -math.log(p)


def prob_exactly_one(probs: list[float]) -> float:
    """Probability that exactly one of the independent groups fires.

    The inputs are the per-gate summed probabilities of one edge's errors.
    An empty list is rejected: an edge with no errors must be removed, not
    assigned probability zero.
    """
    if len(probs) == 0:
        raise ValueError("empty probability list; remove the edge instead")
    if any(not (0.0 <= q < 1.0) for q in probs):
        raise ValueError("group probabilities must lie in [0, 1)")
    total = 0.0
    for i, q in enumerate(probs):
        term = q
        for j, r in enumerate(probs):
            if j != i:
                term *= 1.0 - r
        total += term
    return total


# Contract-named alias: the probability of exactly one independent error.
compute_edge_probability = prob_exactly_one


def _grouped_by_gate(errors: list[EdgeError],
                     keep=lambda err: True) -> list[float]:
    sums: dict[int, float] = {}
    for err in errors:
        if keep(err):
            sums[err.gate_id] = sums.get(err.gate_id, 0.0) + err.probability
    return [sums[g] for g in sorted(sums)]


class _Builder:
    def __init__(self, coords: list[Coord3], table: Optional[ErrorTable]):
        self.coords = coords
        self.table = table
        self.bulk: dict[tuple[int, int], list[int]] = {}      # (u,v) -> error ks
        self.boundary: dict[int, list[int]] = {}              # vertex -> error ks
        self.deferred: list[int] = []
        self.decos: dict[int, tuple] = {}                     # error k -> edge keys
        self.parity: dict[tuple, bool] = {}                   # edge key -> logical

    def run(self) -> tuple[list, dict]:
        assert self.table is not None
        table = self.table
        ev = table.events
        boundary_by_gate: dict[int, set[int]] = {}
        for k in range(len(table)):
            if len(ev[k]) == 1:
                self.boundary.setdefault(ev[k][0], []).append(k)
                boundary_by_gate.setdefault(int(table.gate_ids[k]), set()).add(ev[k][0])
        for k in range(len(table)):
            if len(ev[k]) == 2:
                a, b = ev[k]
                # Set the error aside only when this gate itself generates a
                # boundary edge at both coordinates, i.e. the error factors
                # into the two single-event mechanisms of the same gate.  A
                # coordinate-only test would also swallow genuine pair
                # mechanisms (corner time-like edges, short rows at d=3) and
                # leave a basis unable to express their logical action.
                local = boundary_by_gate.get(int(table.gate_ids[k]), ())
                if a in local and b in local:
                    self.deferred.append(k)
                else:
                    self.bulk.setdefault((a, b), []).append(k)
        for k in self.deferred:
            a, b = ev[k]
            keys = (("B", a), ("B", b))
            self.decos[k] = keys
            self.boundary[a].append(k)
            self.boundary[b].append(k)
        # Logical parities of the plain basis are needed to pick sound
        # decompositions for the remaining multi-event errors.
        for key_set, make in ((self.bulk, lambda ab: ("E",) + ab),
                              (self.boundary, lambda v: ("B", v))):
            for raw, ks in key_set.items():
                plain = {bool(table.logicals[k]) for k in ks
                         if k not in self.decos}
                if len(plain) != 1:
                    raise GraphConstructionError(
                        f"basis edge {make(raw)} has no unique logical parity")
                self.parity[make(raw)] = plain.pop()
        for k in range(len(table)):
            if len(ev[k]) >= 3:
                keys = self.decompose(ev[k], bool(table.logicals[k]))
                self.decos[k] = keys
                for key in keys:
                    if key[0] == "B":
                        self.boundary[key[1]].append(k)
                    else:
                        self.bulk[(key[1], key[2])].append(k)
        return self._finalize()

    def decompose(self, events: tuple[int, ...],
                  parity: Optional[bool] = None) -> tuple:
        """Minimal-cardinality decomposition into existing basis edges.

        Blocks of two map to a bulk edge (or, failing that, a two-edge chain
        through a shared vertex); singleton blocks map to boundary edges.
        When ``parity`` is given, decompositions whose edges do not XOR to
        it are rejected.  Ties between equal-cardinality decompositions
        resolve to the lexicographically smallest tuple of edge keys.
        """
        best: Optional[tuple[int, tuple]] = None
        for part in _pair_partitions(events):
            keys: list[tuple] = []
            cost = 0
            ok = True
            for block in part:
                if len(block) == 1:
                    if block[0] not in self.boundary:
                        ok = False
                        break
                    keys.append(("B", block[0]))
                    cost += 1
                else:
                    a, b = block
                    if (a, b) in self.bulk:
                        keys.append(("E", a, b))
                        cost += 1
                    else:
                        chain = self._chain(a, b)
                        if chain is None:
                            ok = False
                            break
                        keys.extend(chain)
                        cost += 2
            if not ok:
                continue
            if parity is not None:
                got = False
                for key in keys:
                    got ^= self.parity[key]
                if got != parity:
                    continue
            cand = (cost, tuple(sorted(keys)))
            if best is None or cand < best:
                best = cand
        if best is None:
            raise DecompositionError(
                f"events {events} do not decompose into the edge basis"
                + ("" if parity is None else " with consistent logical parity"))
        return best[1]

    def _chain(self, a: int, b: int) -> Optional[list[tuple]]:
        """Two bulk edges (a,m),(m,b) whose symmetric difference is {a,b}."""
        mids = sorted(
            {k[1] for k in self.bulk if k[0] == a} &
            {k[0] for k in self.bulk if k[1] == b}
        )
        if mids:
            m = mids[0]
            return [("E", a, m), ("E", m, b)]
        return None

    def _finalize(self):
        keys = sorted(
            [("E", a, b) for (a, b) in self.bulk] +
            [("B", v) for v in self.boundary],
            key=self._canonical_key,
        )
        key_to_id = {k: i for i, k in enumerate(keys)}
        return keys, key_to_id

    def _canonical_key(self, key):
        if key[0] == "B":
            return (self.coords[key[1]], _COORD_MAX)
        return (self.coords[key[1]], self.coords[key[2]])


def _pair_partitions(items: tuple[int, ...]):
    """Set partitions into blocks of size one or two."""
    items = tuple(items)
    if not items:
        yield ()
        return
    head, rest = items[0], items[1:]
    for sub in _pair_partitions(rest):
        yield ((head,),) + sub
    for i, other in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for sub in _pair_partitions(remaining):
            yield ((head, other),) + sub


def enumerate_and_classify(circuit: Circuit, channels: list[NoiseChannel],
                           model: SensitivityModel | None = None,
                           table: ErrorTable | None = None) -> DetectionGraph:
    """Run the three classification passes; edges carry error lists and
    logical parities but no probabilities or correlation links yet."""
    model = model or SensitivityModel(circuit)
    table = table or enumerate_errors(circuit, channels, model)

    coords = model.detectors.coords
    builder = _Builder(coords, table)
    keys, key_to_id = builder.run()

    edges: list[Edge] = []
    for eid, key in enumerate(keys):
        if key[0] == "B":
            v_idx = key[1]
            edges.append(Edge(eid, coords[v_idx], BOUNDARY, v_idx, -1))
        else:
            a, b = key[1], key[2]
            edges.append(Edge(eid, coords[a], coords[b], a, b))

    probs = table.probs
    for key, ks in itertools.chain(
            ((("E", a, b), v) for (a, b), v in builder.bulk.items()),
            ((("B", u), v) for u, v in builder.boundary.items())):
        edge = edges[key_to_id[key]]
        for k in ks:
            deco = builder.decos.get(k)
            deco_ids = tuple(sorted(key_to_id[d] for d in deco)) if deco else None
            edge.errors.append(EdgeError(
                gate_id=int(table.gate_ids[k]),
                pauli=table.paulis[k],
                probability=float(probs[k]),
                decomposed_edge_ids=deco_ids,
            ))

    # Logical-flip parity.  Edges only ever get created by a plain
    # (undecomposed) error in pass 1 or 2, and all plain errors of one edge
    # must agree on whether they flip the logical-X observable:
    # disagreement would mean two syndrome-equivalent local errors differing
    # by a logical operator, impossible below distance.
    logical = table.logicals
    for e in edges:
        e.errors.sort(key=lambda err: (err.gate_id, err.pauli))
        plain = {bool(logical[_err_row(table, err)])
                 for err in e.errors if err.decomposed_edge_ids is None}
        if len(plain) != 1:
            raise GraphConstructionError(
                f"edge {e.id} has no unique plain logical parity: {plain}")
        e.logical = plain.pop()

    # Decomposed errors must reproduce their recorded parity as the XOR of
    # their component edges' parities.
    seen: set[tuple[int, str]] = set()
    for e in edges:
        for err in e.errors:
            if err.decomposed_edge_ids is None or (err.gate_id, err.pauli) in seen:
                continue
            seen.add((err.gate_id, err.pauli))
            parity = False
            for k in err.decomposed_edge_ids:
                parity ^= edges[k].logical
            if parity != bool(logical[_err_row(table, err)]):
                raise GraphConstructionError(
                    f"decomposition of {(err.gate_id, err.pauli)} breaks "
                    "logical parity")

    _check_consistency(edges, table)

    boundary_edge_at: dict[int, int] = {}
    for e in edges:
        if e.is_boundary:
            boundary_edge_at[e.u_idx] = e.id

    graph = DetectionGraph(
        circuit=circuit,
        vertices=list(coords),
        coord_index=dict(model.detectors.index),
        edges=edges,
        adjacency=[[] for _ in coords],
        boundary_edge_at=boundary_edge_at,
        links=[],
        links_by_parent={},
    )
    _sort_adjacency(graph)
    return graph


def _sort_adjacency(graph: DetectionGraph) -> None:
    adjacency: list[list[tuple[int, int]]] = [[] for _ in graph.vertices]
    for e in graph.edges:
        if not e.is_boundary:
            adjacency[e.u_idx].append((e.id, e.v_idx))
            adjacency[e.v_idx].append((e.id, e.u_idx))
    for lst in adjacency:
        lst.sort(key=lambda t: (graph.edges[t[0]].weight, t[0]))
    graph.adjacency = adjacency


def assign_probabilities(graph: DetectionGraph) -> None:
    """Per-gate grouped exactly-one-error probabilities and weights, then
    re-sort the adjacency under the new weights."""
    for e in graph.edges:
        p = prob_exactly_one(_grouped_by_gate(e.errors))
        if not (0.0 < p < 1.0):
            raise GraphConstructionError(
                f"edge {e.id} has out-of-range probability {p}")
        e.p_edge = p
        e.weight = weight_of(p)
    _sort_adjacency(graph)


def build_graph(circuit: Circuit, channels: list[NoiseChannel],
                model: SensitivityModel | None = None,
                table: ErrorTable | None = None) -> DetectionGraph:
    """Classify all errors, compute probabilities, and attach correlation
    links: the complete shared decoding graph for one configuration."""
    graph = enumerate_and_classify(circuit, channels, model, table)
    assign_probabilities(graph)
    graph.links = compute_correlation_links_from_edges(graph.edges)
    by_parent: dict[int, list[CorrelatedEdgeLink]] = {}
    for link in graph.links:
        by_parent.setdefault(link.parent_edge, []).append(link)
    graph.links_by_parent = {k: tuple(v) for k, v in by_parent.items()}
    return graph


def _err_row(table: ErrorTable, err: EdgeError) -> int:
    # Error identity within the table: (gate, pauli) pairs are unique.
    lo = int(np.searchsorted(table.gate_ids, err.gate_id, side="left"))
    hi = int(np.searchsorted(table.gate_ids, err.gate_id, side="right"))
    for k in range(lo, hi):
        if table.paulis[k] == err.pauli:
            return k
    raise KeyError((err.gate_id, err.pauli))


def _check_consistency(edges: list[Edge], table: ErrorTable):
    """Every listed error must reproduce its edge's endpoints, directly or
    through its recorded decomposition."""
    for e in edges:
        own = {e.u_idx} if e.is_boundary else {e.u_idx, e.v_idx}
        for err in e.errors:
            events = set(table.events[_err_row(table, err)])
            if err.decomposed_edge_ids is None:
                if events != own:
                    raise GraphConstructionError(
                        f"edge {e.id} lists error {(err.gate_id, err.pauli)} "
                        f"with events {sorted(events)}")
            else:
                acc: set[int] = set()
                for k in err.decomposed_edge_ids:
                    comp = edges[k]
                    acc ^= {comp.u_idx} if comp.is_boundary \
                        else {comp.u_idx, comp.v_idx}
                if acc != events:
                    raise GraphConstructionError(
                        f"decomposition of {(err.gate_id, err.pauli)} on edge "
                        f"{e.id} does not reproduce its events")


def compute_correlation_links_from_edges(edges: list[Edge]
                                         ) -> list[CorrelatedEdgeLink]:
    """Derive conditional correlated-edge probabilities from the error lists."""
    links: list[CorrelatedEdgeLink] = []
    for e in edges:
        partners = sorted({
            k for err in e.errors if err.decomposed_edge_ids
            for k in err.decomposed_edge_ids if k != e.id
        })
        if partners and not e.p_edge:
            raise GraphConstructionError(
                "correlation links need edge probabilities assigned first")
        for k in partners:
            joint = prob_exactly_one(_grouped_by_gate(
                e.errors,
                keep=lambda err, k=k: err.decomposed_edge_ids is not None
                and k in err.decomposed_edge_ids))
            conditional = joint / e.p_edge
            if not (0.0 < conditional <= 1.0):
                raise GraphConstructionError(
                    f"conditional probability {conditional} for link "
                    f"{e.id}->{k} out of range")
            links.append(CorrelatedEdgeLink(e.id, k, conditional))
    return links


def compute_correlation_links(graph: DetectionGraph) -> list[CorrelatedEdgeLink]:
    return compute_correlation_links_from_edges(graph.edges)


def synthetic_graph(edges: list[tuple]) -> DetectionGraph:
    """Build a detection graph directly from (u, v, weight[, logical]) tuples.

    ``v`` may be BOUNDARY.  Vertices are inferred from the endpoints.  Meant
    for worked examples and tests; the edges carry no error lists or links.
    """
    vertices = sorted({c for e in edges for c in e[:2] if not isinstance(c, _BoundaryType)})
    index = {c: i for i, c in enumerate(vertices)}
    built: list[Edge] = []
    specs = sorted(edges, key=lambda e: (e[0], _COORD_MAX if isinstance(e[1], _BoundaryType) else e[1]))
    for spec in specs:
        u, v, w = spec[:3]
        logical = bool(spec[3]) if len(spec) > 3 else False
        if isinstance(v, _BoundaryType):
            e = Edge(len(built), u, BOUNDARY, index[u], -1)
        else:
            if v < u:
                u, v = v, u
            e = Edge(len(built), u, v, index[u], index[v])
        e.p_edge = math.exp(-w)
        e.weight = float(w)
        e.logical = logical
        built.append(e)

    adjacency: list[list[tuple[int, int]]] = [[] for _ in vertices]
    boundary_edge_at: dict[int, int] = {}
    for e in built:
        if e.is_boundary:
            boundary_edge_at[e.u_idx] = e.id
        else:
            adjacency[e.u_idx].append((e.id, e.v_idx))
            adjacency[e.v_idx].append((e.id, e.u_idx))
    for lst in adjacency:
        lst.sort(key=lambda t: (built[t[0]].weight, t[0]))

    return DetectionGraph(
        circuit=None,  # type: ignore[arg-type]
        vertices=vertices,
        coord_index=index,
        edges=built,
        adjacency=adjacency,
        boundary_edge_at=boundary_edge_at,
        links=[],
        links_by_parent={},
    )


def decompose(events, graph: DetectionGraph) -> list[int]:
    """Decompose a detection-event set into basis edge ids of ``graph``.

    Accepts coordinates or vertex indices; needs at least two events.
    """
    idx = [graph.coord_index[e] if isinstance(e, tuple) else int(e)
           for e in events]
    if len(idx) < 2:
        raise ValueError("decomposition needs at least two events")
    b = _Builder(graph.vertices, None)
    b.bulk = {(e.u_idx, e.v_idx): [] for e in graph.edges if not e.is_boundary}
    b.boundary = {e.u_idx: [] for e in graph.edges if e.is_boundary}
    keys = b.decompose(tuple(sorted(idx)))
    by_key = {("B", e.u_idx) if e.is_boundary else ("E", e.u_idx, e.v_idx): e.id
              for e in graph.edges}
    return sorted(by_key[k] for k in keys)
