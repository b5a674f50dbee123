"""Correlated reweighting driven by a virtual pre-matching.

The first pre-matching pass is "virtual": its matches are never kept, they
only say which edges look likely.  For every edge used by a virtual match,
each of its correlated partners receives that link's conditional probability
as an additive boost:

    p_f = p_e + p_c          w = -ln(p_f)

Writes land in a per-shot overlay; the shared graph is never mutated.  When
several virtual matches write to the same edge only the last write in the
pass order survives - the race the streaming formulation deliberately
permits.  An optional second pre-matching pass then runs on the overlay
weights; its matches are the high-confidence pairs frozen for the final
matcher.  No further reweighting happens downstream.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import BOUNDARY, DetectionGraph
from .prematch import OpCounter, PrematchResult, prematch

logger = logging.getLogger(__name__)

#: Keeps -ln(p_f) finite when a boosted probability would reach 1.
CLAMP_EPS = 1e-12


@dataclass
class WeightOverlay:
    """Per-shot effective probabilities/weights over a shared graph."""

    graph: DetectionGraph
    p_written: dict[int, float] = field(default_factory=dict)

    def written_edges(self):
        return self.p_written.keys()

    def p_final(self, edge_id: int) -> float:
        e = self.graph.edges[edge_id]
        if edge_id not in self.p_written:
            return e.p_edge
        p = e.p_edge + self.p_written[edge_id]
        if p >= 1.0:
            logger.warning("edge %d boosted to p=%g; clamping", edge_id, p)
            p = 1.0 - CLAMP_EPS
        return p

    def weight(self, edge_id: int) -> float:
        return -math.log(self.p_final(edge_id))

    def csr_data(self, base_data: np.ndarray, positions: np.ndarray) -> np.ndarray:
        """Copy of the graph's CSR weight data with overlay values patched in."""
        data = base_data.copy()
        for eid in self.p_written:
            w = self.weight(eid)
            for slot in positions[eid]:
                if slot >= 0:
                    data[slot] = w
        return data

    def boundary_weights(self, base: np.ndarray) -> np.ndarray:
        w = base.copy()
        for eid in self.p_written:
            e = self.graph.edges[eid]
            if e.is_boundary:
                w[e.u_idx] = self.weight(eid)
        return w

    def dump(self) -> str:
        """One written edge per line: ``edge_id p_c p_f w``."""
        lines = []
        for eid in sorted(self.p_written):
            lines.append(f"{eid} {self.p_written[eid]:.12g} "
                         f"{self.p_final(eid):.12g} {self.weight(eid):.12g}")
        return "\n".join(lines) + ("\n" if lines else "")


def reweight(graph: DetectionGraph, virtual: PrematchResult) -> WeightOverlay:
    """Write conditional correlated probabilities along the virtual matches.

    Only mutual virtual pairs write: the parent edge is the direct edge the
    two events chose each other through, and each of its correlated partners
    receives the link's conditional probability.  Virtual boundary matches
    trigger no writes: a lone event leaning on the boundary is weak evidence,
    and boundary edges aggregate so many mechanisms that their conditionals
    would flood the neighborhood and can even spoil single-fault corrections.
    Writes follow the match-formation order, last one wins.
    """
    overlay = WeightOverlay(graph)
    for match in virtual.order:
        u, v = match
        if v is BOUNDARY:
            continue
        parent = graph.edge_between(graph.coord_index[u], graph.coord_index[v])
        if parent is None:
            raise ValueError(f"virtual pair {u}-{v} has no direct edge")
        for link in graph.links_by_parent.get(parent.id, ()):
            overlay.p_written[link.correlated_edge] = link.conditional_p
    return overlay


def run_stage2_prematch(graph: DetectionGraph, overlay: WeightOverlay, events,
                        mode: str = "relaxed",
                        counter: OpCounter | None = None) -> PrematchResult:
    """Second pre-matching pass on the reweighted graph.

    Same algorithm as the first pass, adjacency re-sorted under the overlay
    weights; the resulting matches are the ones frozen for the final matcher.
    """
    return prematch(events, graph, mode=mode, overlay=overlay, counter=counter)
