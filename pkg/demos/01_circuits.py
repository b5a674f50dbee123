"""Build the three code families and look at what a scheduled circuit holds.

Run:  python demos/01_circuits.py
"""

from pipematch import build_circuit, attach_noise, serialize_circuit

# Every family follows the same 8-step round template; the layouts differ.
for family in ("toric", "unrotated", "rotated"):
    c = build_circuit(family, 3, 2)
    print(f"{family:10s} d=3: {c.n_data:3d} data qubits, "
          f"{len(c.x_stabilizers):2d} X + {len(c.z_stabilizers):2d} Z checks, "
          f"{len(c.gates)} gates over {c.rounds} rounds")

# The logical-X support is a single top-to-bottom column of data qubits.
c = build_circuit("unrotated", 3, 1)
print("\nlogical-X support (unrotated d=3):",
      sorted(c.qubit_coords[q] for q in c.logical_x_support))

# Depolarizing noise: p/15 per CNOT Pauli, p/3 per single-qubit Pauli,
# p for preparation/readout flips.
channels = attach_noise(c, 0.001)
cx = next(ch for ch in channels if c.gates[ch.gate_id].kind == "CX")
print(f"a CNOT channel has {len(cx.errors)} errors of "
      f"{cx.errors[0][1]:.2e} each")

# The serialized form is stable, one gate per line: ROUND STEP KIND QUBITS...
print("\nfirst lines of the serialized circuit:")
print("\n".join(serialize_circuit(c).splitlines()[:6]))
