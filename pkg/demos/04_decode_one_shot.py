"""Walk one noisy shot through all three pipeline stages.

Stage 1 pre-matches virtually and boosts correlated edges (p_f = p_e + p_c);
stage 2 (optional) pre-matches again on the boosted weights and freezes its
pairs; stage 3 finishes with exact minimum-weight matching.

Run:  python demos/04_decode_one_shot.py
"""

from pipematch import (
    DecodeContext,
    RunConfig,
    judge_failure,
    mwpm,
    prematch,
    reweight,
    run_stage2_prematch,
    sample_shot,
)

ctx = DecodeContext(RunConfig("unrotated", 3, 0.015, 5, 1, seed=0))
graph = ctx.graph

shot = None
for seed in range(60):
    candidate = sample_shot(ctx.circuit, ctx.channels, seed, table=ctx.table)
    if 6 <= len(candidate.events) <= 12:
        shot = candidate
        break
assert shot is not None
events = sorted(shot.events)
print(f"shot fired {len(events)} detection events "
      f"(true logical flip: {shot.logical_x_flip}):")
print("   ", events)

virtual = prematch(events, graph)
print(f"\nstage 1 (virtual): {len(virtual.pairs)} pairs, "
      f"{len(virtual.boundary_matches)} boundary, "
      f"{len(virtual.unmatched)} unmatched")

overlay = reweight(graph, virtual)
print(f"reweighting wrote {len(overlay.p_written)} correlated boosts:")
for eid in sorted(overlay.p_written)[:6]:
    e = graph.edges[eid]
    print(f"    edge {eid:4d} p {e.p_edge:.4f} -> {overlay.p_final(eid):.4f}"
          f"   w {e.weight:.2f} -> {overlay.weight(eid):.2f}")

frozen = run_stage2_prematch(graph, overlay, events)
print(f"\nstage 2 froze {len(frozen.pairs)} pairs and "
      f"{len(frozen.boundary_matches)} boundary matches")

outcome = mwpm(events, frozen, graph, overlay)
print(f"\nstage 3 matching: {len(outcome.pairs)} pairs, "
      f"{len(outcome.boundary_matches)} to boundary, "
      f"total weight {outcome.total_weight:.3f}")
print(f"correction flips logical X: {outcome.logical_x_correction}")
print("logical failure:", judge_failure(outcome, shot))
