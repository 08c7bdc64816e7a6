"""
Counting degrees of freedom
===========================

Each arrival time is one equation.  The unknowns are the coordinates and
timings minus the rigid-motion and common-time gauges.  The table lists the
smallest number of sources that gives at least as many equations as
unknowns for each number of receivers.
"""

from arraycalib import dof_report, min_sources

for mode in ("none", "receivers_synced", "sources_synced"):
    for d in (2, 3):
        row = [(m, min_sources(m, d, mode)) for m in range(4, 11)]
        print(f"{mode:>17} d={d}:", " ".join(f"{m}->{k}" for m, k in row))

# %%
print(dof_report(7, 7, 3).describe())
