"""Anatomy of the detection graph and its correlation links.

Every circuit error is classified by its detection events: single events
make boundary edges, pairs make bulk edges, and everything bigger is
decomposed over that basis.  Decomposed errors are what correlate edges:
once one component edge looks matched, its partners become likelier.

Run:  python demos/02_detection_graph.py
"""

from pipematch import attach_noise, build_circuit, build_graph, propagate_error

circuit = build_circuit("unrotated", 3, 3)
channels = attach_noise(circuit, 0.01)
graph = build_graph(circuit, channels)

n_boundary = sum(1 for e in graph.edges if e.is_boundary)
print(f"unrotated d=3, 3 rounds: {graph.n_vertices} detectors, "
      f"{len(graph.edges)} edges ({n_boundary} boundary), "
      f"{len(graph.links)} correlation links")

# A single two-qubit error can fire up to four detectors.
wide = max(graph.edges, key=lambda e: max(
    (len({k for k in err.decomposed_edge_ids or ()}) for err in e.errors),
    default=0))
err = next(err for err in wide.errors if err.decomposed_edge_ids)
events, flips_logical = propagate_error(circuit, err.gate_id, err.pauli)
print(f"\nexample decomposed error: gate {err.gate_id} pauli {err.pauli}")
print(f"  fires {sorted(events)}")
print(f"  decomposes into edges {list(err.decomposed_edge_ids)}")

# Each edge's probability is the chance that exactly one of its per-gate
# error groups fires; the weight is -ln(p).
e = graph.edges[0]
print(f"\nedge 0: {e.u} -> {'BOUNDARY' if e.is_boundary else e.v}")
print(f"  {len(e.errors)} generating errors, p_e={e.p_edge:.5f}, "
      f"weight={e.weight:.3f}")

links = graph.links_by_parent.get(e.id, ())
if links:
    link = links[0]
    print(f"  correlated with edge {link.correlated_edge}: conditional "
          f"probability {link.conditional_p:.4f}")

print("\ngraph dump excerpt:")
print("\n".join(graph.dump().splitlines()[:5]))
