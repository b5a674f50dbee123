"""The greedy streaming pre-matcher on the two worked three-event examples.

Events are processed once, in (t, i, j) order, through the ZP/HP/FP state
machine: a first choice half-matches its target, a reciprocated choice makes
the pair mutual, the boundary is taken only by still-unmatched events with
no half-matched or boundary-matched neighbor, and anything inconsistent is
reset rather than repaired.

Run:  python demos/03_prematching.py
"""

from pipematch import BOUNDARY, prematch
from pipematch.graph import synthetic_graph

A, B, C = (1, 0, 0), (1, 1, 2), (2, 2, 1)


def example(a, b):
    graph = synthetic_graph([
        (A, B, a), (B, C, b), (A, C, 3),
        (A, BOUNDARY, 2), (C, BOUNDARY, 2),
    ])
    trace = []
    result = prematch([A, B, C], graph, trace=trace)
    print(f"edge weights: A-B={a}, B-C={b}, A-C=3, boundaries 2")
    for line in trace:
        print("   ", line)
    print("  pairs:", [tuple(sorted(p)) for p in result.pairs] or "-")
    print("  boundary:", sorted(result.boundary_matches) or "-")
    print("  unmatched:", sorted(result.unmatched) or "-")
    print()


print("advancing the states (A pairs with B, C leaves to the boundary):")
example(a=1, b=4)

print("reverting the states (A leaves early; C's half-match cannot complete,")
print("its boundary is blocked by A, and it resets to ZP):")
example(a=5, b=4)
