"""Final-stage exact minimum-weight perfect matching with boundary.

Fired events not already frozen by pre-matching are matched exactly under
the shortest-path metric of the (possibly reweighted) detection graph, each
event also having the option of matching to the boundary.  The search space
is cut down losslessly before solving:

  * a pair whose connecting distance exceeds the sum of the two boundary
    distances can never improve a matching (route both to the boundary
    instead), so such pairs are dropped;
  * the surviving pair graph splits into connected components that are
    solved independently.

Components up to ``DP_CAP`` events are solved by exact subset dynamic
programming; larger ones fall back to a blossom solver on the standard
construction with one zero-connected virtual boundary node per event.
Correctness of the production path is defined by exact weight agreement
with ``brute_force_mwpm``, an independent exhaustive oracle.

Totals are accumulated with ``math.fsum`` so that equal-weight alternative
matchings report bit-identical weights.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .errors import CoverageError, MatchingError
from .graph import BOUNDARY, DetectionGraph
from .prematch import PrematchResult
from .reweight import WeightOverlay
from .sim import Coord3, ShotResult

logger = logging.getLogger(__name__)

#: Largest component handed to the subset-DP solver; bigger ones go to the
#: blossom fallback, which overtakes the 2^n DP around this size.
DP_CAP = 13


@dataclass
class MatchOutcome:
    """Complete pairing of a shot's detection events.

    ``logical_x_correction`` is the parity of logical-flip bits along every
    matched shortest path: the induced correction's action on the logical-X
    observable.
    """

    pairs: set[tuple[Coord3, Coord3]]
    boundary_matches: set[Coord3]
    total_weight: float
    logical_x_correction: bool
    frozen_pairs: set[tuple[Coord3, Coord3]] = field(default_factory=set)
    frozen_boundary: set[Coord3] = field(default_factory=set)

    def covered_events(self) -> set[Coord3]:
        out = set(self.boundary_matches)
        for u, v in self.pairs:
            out.add(u)
            out.add(v)
        return out


class StaticPaths:
    """All-pairs shortest paths on the base weights, computed once."""

    def __init__(self, graph: DetectionGraph):
        csr, _ = graph.weight_csr()
        self.dist, self.pred = dijkstra(csr, directed=True,
                                        return_predecessors=True)
        self.boundary_w = graph.boundary_weight_vector()


class ShotMetric:
    """Shortest-path distances from a shot's fired events.

    Uses the static all-pairs tables when no overlay is active, otherwise
    re-runs Dijkstra from the fired events over the patched weights.
    """

    def __init__(self, graph: DetectionGraph, sources: Sequence[int],
                 overlay: Optional[WeightOverlay] = None,
                 static: Optional[StaticPaths] = None):
        self.graph = graph
        self.sources = list(sources)
        self.overlay = overlay
        csr, positions = graph.weight_csr()
        if overlay is None and static is not None:
            self._dist = static.dist
            self._pred = static.pred
            self._row = {v: v for v in self.sources}
            self.boundary_w = static.boundary_w
        else:
            if overlay is not None:
                csr = csr.copy()
                csr.data = overlay.csr_data(csr.data, positions)
                self.boundary_w = overlay.boundary_weights(
                    graph.boundary_weight_vector())
            else:
                self.boundary_w = graph.boundary_weight_vector()
            if self.sources:
                self._dist, self._pred = dijkstra(
                    csr, directed=True, indices=self.sources,
                    return_predecessors=True)
            else:
                self._dist = np.zeros((0, graph.n_vertices))
                self._pred = np.zeros((0, graph.n_vertices), dtype=np.int32)
            self._row = {v: r for r, v in enumerate(self.sources)}
        self._pair_map = graph.pair_edge_map()

    def dist(self, u_idx: int, v_idx: int) -> float:
        return float(self._dist[self._row[u_idx], v_idx])

    def boundary_dist(self, u_idx: int) -> float:
        row = self._dist[self._row[u_idx]]
        return float(np.min(row + self.boundary_w))

    def _edge_id(self, a: int, b: int) -> int:
        return self._pair_map[(a, b)]

    def path_edges(self, u_idx: int, v_idx: int) -> list[int]:
        """Edge ids along the shortest path from u to v."""
        if u_idx == v_idx:
            return []
        row = self._row[u_idx]
        if not np.isfinite(self._dist[row, v_idx]):
            raise MatchingError(f"vertices {u_idx} and {v_idx} are disconnected")
        pred = self._pred[row]
        out = []
        cur = v_idx
        while cur != u_idx:
            prev = int(pred[cur])
            out.append(self._edge_id(prev, cur))
            cur = prev
        return out

    def boundary_path_edges(self, u_idx: int) -> list[int]:
        row = self._dist[self._row[u_idx]] + self.boundary_w
        w = int(np.argmin(row))
        if not np.isfinite(row[w]):
            raise MatchingError(f"vertex {u_idx} cannot reach the boundary")
        bnd_edge = self.graph.boundary_edge_at[w]
        return self.path_edges(u_idx, w) + [bnd_edge]

    def match_cost(self, u_idx: int, v) -> float:
        if v is BOUNDARY:
            return self.boundary_dist(u_idx)
        return self.dist(u_idx, v)

    def logical_parity(self, u_idx: int, v) -> bool:
        edges = (self.boundary_path_edges(u_idx) if v is BOUNDARY
                 else self.path_edges(u_idx, v))
        parity = False
        for eid in edges:
            parity ^= self.graph.edges[eid].logical
        return parity


def pairwise_distance(u: Coord3, v, graph: DetectionGraph,
                      overlay: Optional[WeightOverlay] = None
                      ) -> tuple[float, list[int]]:
    """Shortest-path weight and edge ids between u and v (or BOUNDARY)."""
    u_idx = graph.coord_index[u]
    metric = ShotMetric(graph, [u_idx], overlay)
    if v is BOUNDARY:
        return metric.boundary_dist(u_idx), metric.boundary_path_edges(u_idx)
    v_idx = graph.coord_index[v]
    d = metric.dist(u_idx, v_idx)
    if not np.isfinite(d):
        raise MatchingError(f"{u} and {v} are disconnected")
    return d, metric.path_edges(u_idx, v_idx)


def _matching_weight(costs: Iterable[float]) -> float:
    return math.fsum(costs)


def _dp_component(nodes: list[int], pair_cost: dict, bnd: dict) -> list[tuple]:
    """Exact minimum matching of one component by subset DP.

    Returns a list of ('p', u, v) and ('b', u) choices over vertex indices.
    """
    n = len(nodes)
    pos = {v: i for i, v in enumerate(nodes)}
    memo: dict[int, tuple[float, tuple]] = {0: (0.0, None)}

    def solve(mask: int) -> float:
        entry = memo.get(mask)
        if entry is not None:
            return entry[0]
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        best = math.inf
        choice = None
        b = bnd.get(nodes[i], math.inf)
        if math.isfinite(b):
            cand = b + solve(rest)
            if cand < best:
                best, choice = cand, ("b", nodes[i])
        m = rest
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            c = pair_cost.get((nodes[i], nodes[j]))
            if c is None:
                continue
            cand = c + solve(rest & ~(1 << j))
            if cand < best:
                best, choice = cand, ("p", nodes[i], nodes[j])
        if choice is None:
            raise MatchingError(
                "events cannot be matched: odd count with no boundary option")
        memo[mask] = (best, choice)
        return best

    solve((1 << n) - 1)
    out = []
    mask = (1 << n) - 1
    while mask:
        _, choice = memo[mask]
        out.append(choice)
        if choice[0] == "b":
            mask &= ~(1 << pos[choice[1]])
        else:
            mask &= ~(1 << pos[choice[1]])
            mask &= ~(1 << pos[choice[2]])
    return out


def _blossom_component(nodes: list[int], pair_cost: dict, bnd: dict) -> list[tuple]:
    """Blossom fallback for components beyond the DP cap.

    Boundary options fold into the pair costs: matching u-v at cost
    bd(u)+bd(v) stands for routing both to the boundary, and an odd
    component gets one virtual node carrying the plain boundary costs.
    Every matching of the explicit one-virtual-node-per-event construction
    maps to this graph at identical weight, so the minimum is unchanged,
    while the blossom instance is half the size.
    """
    import networkx as nx

    has_boundary = any(math.isfinite(bnd.get(v, math.inf)) for v in nodes)
    g = nx.Graph()
    g.add_nodes_from(nodes)
    for u, v in itertools.combinations(nodes, 2):
        c = pair_cost.get((u, v), math.inf)
        if has_boundary:
            c = min(c, bnd[u] + bnd[v])
        if math.isfinite(c):
            g.add_edge(u, v, weight=c)
    if has_boundary and len(nodes) % 2:
        for v in nodes:
            g.add_edge("virtual", v, weight=bnd[v])
    matching = nx.min_weight_matching(g)
    if 2 * len(matching) != g.number_of_nodes():
        raise MatchingError("blossom fallback failed to find a perfect matching")
    out = []
    for a, b in matching:
        if "virtual" in (a, b):
            out.append(("b", a if b == "virtual" else b))
            continue
        direct = pair_cost.get((a, b), math.inf)
        if has_boundary and bnd[a] + bnd[b] < direct:
            out.append(("b", a))
            out.append(("b", b))
        else:
            out.append(("p", a, b))
    return out


def mwpm(events: Iterable[Coord3], frozen: Optional[PrematchResult],
         graph: DetectionGraph, overlay: Optional[WeightOverlay] = None,
         static: Optional[StaticPaths] = None,
         metric: Optional[ShotMetric] = None) -> MatchOutcome:
    """Exact minimum-weight matching of the free events plus frozen matches.

    Frozen pre-matches are hard constraints: their events are removed from
    the free set and the matches appended unchanged, their weights counted
    at the same shortest-path metric.
    """
    event_list = sorted(set(events))
    frozen_pairs = set()
    frozen_boundary = set()
    if frozen is not None:
        frozen_pairs = {tuple(sorted(p)) for p in frozen.pairs}
        frozen_boundary = set(frozen.boundary_matches)
    consumed = {c for p in frozen_pairs for c in p} | frozen_boundary
    missing = consumed - set(event_list)
    if missing:
        raise MatchingError(f"frozen matches cover unfired events {missing}")
    free = [c for c in event_list if c not in consumed]

    idx = [graph.coord_index[c] for c in event_list]
    if metric is None:
        metric = ShotMetric(graph, idx, overlay, static)

    free_idx = [graph.coord_index[c] for c in free]
    bnd = {u: metric.boundary_dist(u) for u in free_idx}

    # Keep a pair only if it can beat sending both events to the boundary.
    pair_cost: dict[tuple[int, int], float] = {}
    parent = {u: u for u in free_idx}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in itertools.combinations(free_idx, 2):
        d = metric.dist(a, b)
        if not math.isfinite(d):
            continue
        if d > bnd[a] + bnd[b]:
            continue
        pair_cost[(a, b)] = d
        pair_cost[(b, a)] = d
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    components: dict[int, list[int]] = {}
    for u in free_idx:
        components.setdefault(find(u), []).append(u)

    choices: list[tuple] = []
    for comp in components.values():
        comp.sort()
        if len(comp) == 1:
            u = comp[0]
            if not math.isfinite(bnd[u]):
                raise MatchingError(f"isolated event {graph.vertices[u]} "
                                    "has no boundary option")
            choices.append(("b", u))
        elif len(comp) <= DP_CAP:
            choices.extend(_dp_component(comp, pair_cost, bnd))
        else:
            choices.extend(_blossom_component(comp, pair_cost, bnd))

    pairs = set()
    boundary = set()
    costs: list[float] = []
    parity = False
    for choice in choices:
        if choice[0] == "b":
            u = choice[1]
            boundary.add(graph.vertices[u])
            costs.append(bnd[u])
            parity ^= metric.logical_parity(u, BOUNDARY)
        else:
            _, a, b = choice
            cu, cv = graph.vertices[a], graph.vertices[b]
            pairs.add((cu, cv) if cu < cv else (cv, cu))
            costs.append(pair_cost[(a, b)])
            parity ^= metric.logical_parity(a, b)
    frozen_weight = 0.0
    for u, v in sorted(frozen_pairs):
        a, b = graph.coord_index[u], graph.coord_index[v]
        d = metric.dist(a, b)
        if not math.isfinite(d):
            raise MatchingError(f"frozen pair {u}-{v} is disconnected")
        costs.append(d)
        frozen_weight += d
        parity ^= metric.logical_parity(a, b)
    for u in sorted(frozen_boundary):
        a = graph.coord_index[u]
        d = metric.boundary_dist(a)
        costs.append(d)
        frozen_weight += d
        parity ^= metric.logical_parity(a, BOUNDARY)
    if frozen_pairs or frozen_boundary:
        logger.debug("frozen pre-matches contribute %.6g of the total weight",
                     frozen_weight)

    return MatchOutcome(
        pairs=pairs | frozen_pairs,
        boundary_matches=boundary | frozen_boundary,
        total_weight=_matching_weight(costs),
        logical_x_correction=parity,
        frozen_pairs=frozen_pairs,
        frozen_boundary=frozen_boundary,
    )


BRUTE_FORCE_CAP = 12


def brute_force_mwpm(events: Iterable[Coord3], graph: DetectionGraph,
                     overlay: Optional[WeightOverlay] = None,
                     metric: Optional[ShotMetric] = None) -> MatchOutcome:
    """Exhaustive minimum over all pairings and boundary assignments.

    Test oracle only; rejects instances above {cap} events.
    """
    event_list = sorted(set(events))
    if len(event_list) > BRUTE_FORCE_CAP:
        raise ValueError(
            f"brute force capped at {BRUTE_FORCE_CAP} events, got {len(event_list)}")
    idx = [graph.coord_index[c] for c in event_list]
    if metric is None:
        metric = ShotMetric(graph, idx, overlay)

    best: Optional[tuple[float, list[tuple]]] = None

    def enumerate_matchings(remaining: tuple[int, ...], acc: list[tuple]):
        nonlocal best
        if not remaining:
            total = _matching_weight(c for _, c in acc)
            if best is None or total < best[0]:
                best = (total, list(acc))
            return
        u, rest = remaining[0], remaining[1:]
        b = metric.boundary_dist(u)
        if math.isfinite(b):
            acc.append((("b", u), b))
            enumerate_matchings(rest, acc)
            acc.pop()
        for k, v in enumerate(rest):
            d = metric.dist(u, v)
            if math.isfinite(d):
                acc.append((("p", u, v), d))
                enumerate_matchings(rest[:k] + rest[k + 1:], acc)
                acc.pop()

    enumerate_matchings(tuple(idx), [])
    if best is None:
        raise MatchingError("no feasible matching exists")

    pairs = set()
    boundary = set()
    parity = False
    for choice, _ in best[1]:
        if choice[0] == "b":
            boundary.add(graph.vertices[choice[1]])
            parity ^= metric.logical_parity(choice[1], BOUNDARY)
        else:
            cu, cv = graph.vertices[choice[1]], graph.vertices[choice[2]]
            pairs.add((cu, cv) if cu < cv else (cv, cu))
            parity ^= metric.logical_parity(choice[1], choice[2])
    return MatchOutcome(pairs=pairs, boundary_matches=boundary,
                        total_weight=best[0], logical_x_correction=parity)


brute_force_mwpm.__doc__ = brute_force_mwpm.__doc__.format(cap=BRUTE_FORCE_CAP)


def judge_failure(outcome: MatchOutcome, truth: ShotResult) -> bool:
    """True when the induced correction disagrees with the true logical flip."""
    covered = outcome.covered_events()
    if covered != set(truth.events):
        raise CoverageError(
            f"outcome covers {len(covered)} events, shot fired {len(truth.events)}")
    return outcome.logical_x_correction != truth.logical_x_flip
