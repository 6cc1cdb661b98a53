"""Continuous deformation of a discrete measure onto three atoms.

A state here is a finitely supported probability measure on the line plus a
unit amplitude vector over its atoms.  The path flattens the phases first,
then drains mass stage by stage onto three selected support points while
keeping the mean and variance frozen to rounding at every grid time.  The
same trace is available from the command line as

    nearcomm car-path --input demos/measure_gaussian16.json --output trace.csv
"""

import pathlib

import numpy as np

from nearcomm import load_measure, select_three_points, three_point_path
from nearcomm.measurepath import trace_header, trace_rows

FIXTURE = pathlib.Path(__file__).resolve().parent / "measure_gaussian16.json"

state = load_measure(str(FIXTURE))
print(f"16-atom Gaussian-profile measure on [0, 1]")
print(f"  mean = {state.mean():.12f}, variance = {state.variance():.12f}")

a, c, b = select_three_points(state)
print(f"  selected atoms: {a:.4f} <= {c:.4f} <= {b:.4f}")

path = three_point_path(state)
m0, v0 = state.mean(), state.variance()
drift = max(max(abs(s.mean() - m0), abs(s.variance() - v0))
            for s in path.states)
print(f"\npath: {len(path.states)} grid states, {path.stages[-1] + 1} stages")
print(f"  worst moment drift along the path: {drift:.2e}")

final = path.states[-1]
live = final.masses() > 0
print(f"  final support: {np.round(final.support(), 4)}")
print(f"  final masses:  {np.round(final.masses()[live], 6)}")

rows = trace_rows(path)
header = trace_header(len(state.atoms))
print(f"\ntrace CSV columns: {', '.join(header[:5])}, w_0 .. w_15")
print("first and last rows:")
for row in (rows[0], rows[-1]):
    print(f"  stage {row[0]}, t = {row[1]:.4f}, mean = {row[2]:.8f}, "
          f"variance = {row[3]:.8f}, support = {row[4]}")
