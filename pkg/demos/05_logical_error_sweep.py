"""Desk-scale Monte-Carlo sweep: per-round logical error rates with and
without correlated reweighting, written as CSV and per-curve plot data.

Run:  python demos/05_logical_error_sweep.py        (about a minute)
"""

import time

from pipematch import RunConfig, plotdata_files, run_paired, write_csv

SHOTS = 4000
ROUNDS = 6

rows = []
t0 = time.time()
print(f"unrotated d=3, {SHOTS} paired shots per point")
print(f"{'p':>8} {'q uncorrelated':>15} {'q correlated':>14} {'benefit':>9}")
for p in (0.004, 0.006, 0.009):
    paired = run_paired(RunConfig("unrotated", 3, p, ROUNDS, SHOTS, seed=12))
    rows += [paired.uncorrelated, paired.correlated]
    rel = paired.q_difference / paired.uncorrelated.q_per_round * 100
    print(f"{p:8.4f} {paired.uncorrelated.q_per_round:15.4e} "
          f"{paired.correlated.q_per_round:14.4e} {rel:8.1f}%")

write_csv(rows, "sweep_demo.csv")
files = plotdata_files(rows, "sweep_demo")
print(f"\nwrote sweep_demo.csv and {len(files)} curve files "
      f"(p vs q_per_round, ready for log-log plotting):")
for f in files:
    print("   ", f)
print(f"[{time.time() - t0:.0f}s]")
