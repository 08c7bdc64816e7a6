"""
Synchronized clocks and known emission schedules
================================================

If all receivers share a clock, only the emission times are unknown and
the problem needs fewer sources.  If the sources fire on a known schedule
with one unknown start time, subtracting the schedule reduces the problem
to the same case with the roles swapped.
"""

import numpy as np

from arraycalib import ScenarioConfig, ToaMatrix, dof_report, generate, localize, procrustes_align

# %%
# Receivers synchronized: only the source emission times are free.
inst = generate(ScenarioConfig(m=10, k=10, sync="receivers_synced", seed=2))
result = localize(inst.toa, 3, "receivers_synced")
print("receivers synced:", dof_report(10, 10, 3, "receivers_synced").describe())
print(f"  error {procrustes_align(result.points, inst.truth).e_rs:.2e} m")

# %%
# A known schedule: source k fires at start + delays[k].
inst = generate(ScenarioConfig(m=8, k=8, seed=0))
delays = 0.05 * np.arange(8)
times = inst.clean_toa.t - inst.timing.tau[None, :] + 0.2 + delays[None, :]
toa = ToaMatrix(times, inst.toa.mask, inst.toa.speed)
result = localize(toa, constant_offset=delays)
print(f"known schedule: error {procrustes_align(result.points, inst.truth).e_rs:.2e} m")
# The unknown start time folds into the receiver offsets.
print("  offset error:", np.max(np.abs(result.timing.sigma - (inst.timing.sigma + 0.2))))
