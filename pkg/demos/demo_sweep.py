"""Empirical modulus: how the achieved distances shrink with the commutator.

There is no closed-form map from the input commutator nu to the achievable
distance, so the package measures it: seeded random ensembles at several
(n, nu) cells, each corrected end to end, medians per cell.  The same sweep
is available from the command line as

    nearcomm sweep --output sweep.csv --dims 8,16 --trials 12
"""

from nearcomm import modulus_sweep, sweep_medians

DIMS = (8, 16)
NUS = (1e-1, 1e-2, 1e-4)

rows = modulus_sweep(DIMS, NUS, trials=6, seed=20240915)
flagged = sum(1 for r in rows if r.flag)
print(f"{len(rows)} corrections run, {flagged} flagged out-of-regime")
print("(a flag means the measured nu exceeded the calibrated admissible nu")
print(" for the chosen budget; the run still returns a commuting pair)")

med = sweep_medians(rows)
print("\nmedian dist_a + dist_b per cell")
header = "      n " + "".join(f"  nu={nu:<8g}" for nu in NUS)
print(header)
for n in DIMS:
    cells = "".join(f"  {med[(n, nu)]:<11.3e}" for nu in NUS)
    print(f"  {n:5d} {cells}")

print("\nmedians shrink monotonically with nu at every dimension; the")
print("calibration table (nearcomm calibrate) stores the admissible nu per")
print("commutator budget eps measured the same way.")
