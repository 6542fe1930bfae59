"""
Infection pathway from bedside vitals
=====================================

Turn hourly temperature and white-cell counts into infection states, mine
the directly-follows graph and look for the slow transitions.
"""

import numpy as np

from clinpm import staging
from clinpm.analytics import annotate_performance, rank_bottlenecks
from clinpm.discovery import discover_dfg
from clinpm.dot import dfg_to_dot
from clinpm.eventlog import EventLog
from clinpm.synthetic import example_vitals_csv

# The package ships 40 synthetic patients with hourly vitals.
rows = staging.load_measurements(example_vitals_csv())
print(len(rows), "measurement rows")

# Each row becomes one of seven infection states; repeated states collapse.
events = staging.derive_state_events(rows, staging.INFECTION_PROGRESSION)
log = EventLog.from_events(e.to_event() for e in events)
print(len(log), "cases,", log.n_events, "state events")

###############################################################################
# Directly-follows graph
dfg = discover_dfg(log)
for (a, b), edge in sorted(dfg.edges.items(), key=lambda kv: -kv[1].frequency)[:5]:
    print(f"{a:>32} -> {b:<32} {edge.frequency:3d}")

# case coverage is what the node percentages in the DOT output show
coverage = {a: s.case_coverage for a, s in dfg.activities.items()}
print(max(coverage, key=coverage.get), "is visited by every patient")

###############################################################################
# Where do patients wait?
annotation = annotate_performance(dfg)
ranking = rank_bottlenecks(annotation, min_frequency=5)
print(ranking.to_markdown())

hours = np.array([e.mean_duration for e in ranking.entries]) / 3600
print("mean waits (h):", np.round(hours, 2))

###############################################################################
# Paste into any Graphviz viewer
print(dfg_to_dot(dfg, annotation)[:400], "...")
