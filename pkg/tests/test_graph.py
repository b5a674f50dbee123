import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipematch import (
    BOUNDARY,
    attach_noise,
    build_circuit,
    build_graph,
    decompose,
    prob_exactly_one,
    weight_of,
)
from pipematch.graph import (
    Edge,
    EdgeError,
    compute_correlation_links_from_edges,
    _pair_partitions,
)


def exactly_one_by_enumeration(probs):
    """Independent oracle: sum configuration probabilities over all subsets
    in which exactly one group fired."""
    total = 0.0
    for fired in itertools.product([0, 1], repeat=len(probs)):
        if sum(fired) != 1:
            continue
        conf = 1.0
        for f, p in zip(fired, probs):
            conf *= p if f else (1.0 - p)
        total += conf
    return total


def test_prob_exactly_one_examples():
    assert prob_exactly_one([0.1]) == pytest.approx(0.1, abs=0)
    assert prob_exactly_one([0.1, 0.1]) == pytest.approx(0.18, rel=1e-15)
    assert prob_exactly_one([0.5, 0.5]) == pytest.approx(0.5, rel=1e-15)


def test_prob_exactly_one_empty_rejected():
    with pytest.raises(ValueError):
        prob_exactly_one([])


@given(st.lists(st.floats(min_value=0.0, max_value=0.3), min_size=1, max_size=6))
@settings(max_examples=300, deadline=None)
def test_prob_exactly_one_matches_enumeration(probs):
    got = prob_exactly_one(probs)
    want = exactly_one_by_enumeration(probs)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-15)
    assert got <= sum(probs) + 1e-15


@given(st.lists(st.floats(min_value=1e-6, max_value=0.3), min_size=2, max_size=6))
@settings(max_examples=200, deadline=None)
def test_prob_exactly_one_below_naive_sum(probs):
    assert prob_exactly_one(probs) < sum(probs)


def test_weight_of_examples():
    assert weight_of(1.0 / math.e) == pytest.approx(1.0, rel=1e-15)
    assert weight_of(0.01) == pytest.approx(4.605170185988091, rel=1e-15)
    assert weight_of(0.5) == pytest.approx(0.6931471805599453, rel=1e-15)
    for bad in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(ValueError):
            weight_of(bad)


def test_every_eventful_error_lands_on_some_edge(any_family):
    """Completeness: each enumerated error with >= 1 detection event appears
    in at least one edge's error list."""
    g = any_family.graph
    table = any_family.table
    listed = {(err.gate_id, err.pauli) for e in g.edges for err in e.errors}
    for k in range(len(table)):
        if len(table.events[k]) >= 1:
            assert (int(table.gate_ids[k]), table.paulis[k]) in listed


def test_edge_error_consistency_oracle(any_family):
    """Each listed error reproduces its edge's endpoints directly or via the
    recorded decomposition (boundary endpoints excluded from parity)."""
    g = any_family.graph
    table = any_family.table
    sig = {(int(table.gate_ids[k]), table.paulis[k]): set(table.events[k])
           for k in range(len(table))}
    for e in g.edges:
        own = {e.u_idx} if e.is_boundary else {e.u_idx, e.v_idx}
        for err in e.errors:
            events = sig[(err.gate_id, err.pauli)]
            if err.decomposed_edge_ids is None:
                assert events == own
            else:
                acc = set()
                for k in err.decomposed_edge_ids:
                    comp = g.edges[k]
                    acc ^= ({comp.u_idx} if comp.is_boundary
                            else {comp.u_idx, comp.v_idx})
                assert acc == events
                assert e.id in err.decomposed_edge_ids


def test_boundary_edges_unique_per_coordinate(any_family):
    g = any_family.graph
    coords = [e.u for e in g.edges if e.is_boundary]
    assert len(coords) == len(set(coords))


def test_two_event_cnot_errors_form_bulk_edges(unrotated3):
    """Every CNOT error with exactly two events joins a bulk edge (or, when
    it factors into two same-gate boundary mechanisms, both boundary edges)."""
    g = unrotated3.graph
    table = unrotated3.table
    c = unrotated3.circuit
    bulk_members = {(err.gate_id, err.pauli)
                    for e in g.edges if not e.is_boundary for err in e.errors}
    bnd_members = {(err.gate_id, err.pauli)
                   for e in g.edges if e.is_boundary for err in e.errors}
    n_checked = 0
    for k in range(len(table)):
        gid = int(table.gate_ids[k])
        if c.gates[gid].kind != "CX" or len(table.events[k]) != 2:
            continue
        key = (gid, table.paulis[k])
        assert key in bulk_members or key in bnd_members
        n_checked += 1
    assert n_checked > 100


def test_zero_event_errors_contribute_nowhere(any_family):
    g = any_family.graph
    table = any_family.table
    silent = {(int(table.gate_ids[k]), table.paulis[k])
              for k in range(len(table)) if len(table.events[k]) == 0}
    listed = {(err.gate_id, err.pauli) for e in g.edges for err in e.errors}
    assert silent and not (silent & listed)


def test_four_event_error_decomposition(unrotated3):
    """A four-event error carries >= 2 decomposed edge ids whose endpoint
    XOR reproduces the events; verified by brute-force subset search."""
    g = unrotated3.graph
    table = unrotated3.table
    sig = {(int(table.gate_ids[k]), table.paulis[k]): set(table.events[k])
           for k in range(len(table))}
    four = None
    for e in g.edges:
        for err in e.errors:
            if err.decomposed_edge_ids and len(sig[(err.gate_id, err.pauli)]) == 4:
                four = err
                break
        if four:
            break
    assert four is not None, "expected at least one four-event error"
    assert len(four.decomposed_edge_ids) >= 2
    events = sig[(four.gate_id, four.pauli)]
    endpoint = [({e.u_idx} if e.is_boundary else {e.u_idx, e.v_idx})
                for e in g.edges]
    acc = set()
    for k in four.decomposed_edge_ids:
        acc ^= endpoint[k]
    assert acc == events
    # brute-force pair search over the whole basis: some two-edge subset must
    # reproduce the events, and the recorded decomposition is one of them
    pair_solutions = {
        frozenset((a, b))
        for a, b in itertools.combinations(range(len(g.edges)), 2)
        if endpoint[a] ^ endpoint[b] == events
    }
    assert pair_solutions
    if len(four.decomposed_edge_ids) == 2:
        assert frozenset(four.decomposed_edge_ids) in pair_solutions


def test_decompose_degenerate_single_edge(unrotated3):
    g = unrotated3.graph
    e = next(e for e in g.edges if not e.is_boundary)
    assert decompose([e.u, e.v], g) == [e.id]


def test_decompose_two_disjoint_pairs(unrotated3):
    g = unrotated3.graph
    bulk = [e for e in g.edges if not e.is_boundary]
    e1 = bulk[0]
    e2 = next(e for e in bulk
              if not ({e.u_idx, e.v_idx} & {e1.u_idx, e1.v_idx}))
    got = decompose([e1.u, e1.v, e2.u, e2.v], g)
    assert got == sorted([e1.id, e2.id])


def test_decompose_pair_plus_boundary(unrotated3):
    """Three events where one pairs to the boundary: one bulk plus one
    boundary edge; verified by endpoint XOR."""
    g = unrotated3.graph
    bnd = next(e for e in g.edges if e.is_boundary)
    bulk = next(e for e in g.edges
                if not e.is_boundary and bnd.u_idx not in (e.u_idx, e.v_idx))
    got = decompose([bulk.u, bulk.v, bnd.u], g)
    acc = set()
    for k in got:
        e = g.edges[k]
        acc ^= {e.u_idx} if e.is_boundary else {e.u_idx, e.v_idx}
    assert acc == {bulk.u_idx, bulk.v_idx, bnd.u_idx}
    assert got == sorted([bulk.id, bnd.id])


def test_decompose_needs_two_events(unrotated3):
    with pytest.raises(ValueError):
        decompose([unrotated3.graph.vertices[0]], unrotated3.graph)


def test_adjacency_sorted_by_weight(any_family):
    g = any_family.graph
    for lst in g.adjacency:
        weights = [(g.edges[eid].weight, eid) for eid, _ in lst]
        assert weights == sorted(weights)


def test_correlation_links_bounds_and_exclusions(any_family):
    g = any_family.graph
    for link in g.links:
        assert link.parent_edge != link.correlated_edge
        assert 0.0 < link.conditional_p <= 1.0


def _edge_with_errors(errors, eid=0):
    e = Edge(eid, (0, 0, 0), (0, 0, 2), 0, 1)
    e.errors = errors
    e.p_edge = prob_exactly_one(
        [sum(err.probability for err in errors if err.gate_id == gid)
         for gid in sorted({err.gate_id for err in errors})])
    return e


def test_link_conditional_single_error_is_one():
    e = _edge_with_errors([EdgeError(7, "Z", 0.01, (0, 5))])
    other = Edge(5, (0, 2, 0), (0, 2, 2), 2, 3)
    other.errors = [EdgeError(9, "Z", 0.02)]
    other.p_edge = 0.02
    links = compute_correlation_links_from_edges([e, other])
    link = next(l for l in links if l.parent_edge == 0)
    assert link.correlated_edge == 5
    assert link.conditional_p == pytest.approx(1.0, rel=1e-12)


def test_link_conditional_same_gate_ratio():
    """Two same-gate errors, one carrying the link: conditional = q1/(q1+q2)."""
    q1, q2 = 0.004, 0.006
    e = _edge_with_errors([
        EdgeError(7, "Y", q1, (0, 5)),
        EdgeError(7, "Z", q2),
    ])
    other = Edge(5, (0, 2, 0), (0, 2, 2), 2, 3)
    other.errors = [EdgeError(9, "Z", 0.02)]
    other.p_edge = 0.02
    links = compute_correlation_links_from_edges([e, other])
    link = next(l for l in links if l.parent_edge == 0)
    assert link.conditional_p == pytest.approx(q1 / (q1 + q2), rel=1e-12)


def test_parent_without_decompositions_has_no_links():
    e = _edge_with_errors([EdgeError(3, "Z", 0.01)])
    assert compute_correlation_links_from_edges([e]) == []


def test_staged_construction_matches_build_graph(unrotated3):
    """Classification alone leaves probabilities unset; assigning them and
    deriving links reproduces the one-shot construction."""
    from pipematch import assign_probabilities, enumerate_and_classify
    from pipematch.graph import compute_correlation_links_from_edges

    c = unrotated3.circuit
    skeleton = enumerate_and_classify(c, unrotated3.channels,
                                      unrotated3.model, unrotated3.table)
    assert all(e.p_edge == 0.0 and e.weight == math.inf for e in skeleton.edges)
    assert skeleton.links == []
    assign_probabilities(skeleton)
    full = unrotated3.graph
    assert [(e.u, e.p_edge, e.weight, e.logical) for e in skeleton.edges] == \
           [(e.u, e.p_edge, e.weight, e.logical) for e in full.edges]
    assert skeleton.adjacency == full.adjacency
    links = compute_correlation_links_from_edges(skeleton.edges)
    assert links == full.links


def test_noise_covariance_topology(unrotated3):
    """Scaling p changes probabilities and weights, never the topology."""
    c = unrotated3.circuit
    g1 = unrotated3.graph
    g2 = build_graph(c, attach_noise(c, 0.002))
    assert [(e.u, e.v if not e.is_boundary else None) for e in g1.edges] == \
           [(e.u, e.v if not e.is_boundary else None) for e in g2.edges]
    assert [(l.parent_edge, l.correlated_edge) for l in g1.links] == \
           [(l.parent_edge, l.correlated_edge) for l in g2.links]
    assert any(abs(a.weight - b.weight) > 1e-9
               for a, b in zip(g1.edges, g2.edges))


def test_graph_dump_format(unrotated3):
    dump = unrotated3.graph.dump()
    lines = dump.strip().splitlines()
    assert len(lines) == len(unrotated3.graph.edges)
    assert any("BOUNDARY" in line for line in lines)
    assert all("p_e=" in line for line in lines)


def test_pair_partitions_counts():
    assert len(list(_pair_partitions((1, 2)))) == 2
    assert len(list(_pair_partitions((1, 2, 3)))) == 4
    assert len(list(_pair_partitions((1, 2, 3, 4)))) == 10


def test_cross_sector_pairs_become_boundary_decompositions(unrotated3):
    """A Y error whose X and Z parts each fire a single event in different
    sectors must land on the two boundary edges, never a cross-sector edge."""
    g = unrotated3.graph
    xstab_coords = {s.coord for s in unrotated3.circuit.x_stabilizers}
    for e in g.edges:
        if e.is_boundary:
            continue
        u_is_x = (e.u[1], e.u[2]) in xstab_coords
        v_is_x = (e.v[1], e.v[2]) in xstab_coords
        assert u_is_x == v_is_x, f"cross-sector edge {e.u}-{e.v}"
