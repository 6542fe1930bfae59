"""
Four miners on one small log
============================
"""

from clinpm.analytics import compare_to_reference, comparison_table, element_counts, timed
from clinpm.discovery import discover_alpha, discover_dfg, discover_heuristics, discover_inductive, tree_to_petri
from clinpm.discovery.alpha import footprint
from clinpm.discovery.petri import replay_fitness
from clinpm.eventlog import log_from_sequences

traces = [list("ABCD")] * 3 + [list("ACBD")] * 2 + [list("AED")]
log = log_from_sequences(traces)

# B and C appear in both orders, so the footprint calls them parallel.
fp = footprint(traces)
print("B vs C:", fp.relation("B", "C"), "  A vs B:", fp.relation("A", "B"))

tree = discover_inductive(log)
print("process tree:", tree)

net = tree_to_petri(tree)
print("inductive net:", element_counts(net), "fitness", replay_fitness(net, traces))

alpha = discover_alpha(log)
print("alpha net:", element_counts(alpha), "fitness", replay_fitness(alpha, traces))

###############################################################################
# Every miner against the observed directly-follows relation
reference = discover_dfg(log)
rows = []
for miner in (discover_dfg, discover_alpha, discover_heuristics, discover_inductive):
    model, seconds = timed(miner, log)
    rows.append(compare_to_reference(model, reference, seconds, miner.__name__.replace("discover_", "")))
print(comparison_table(rows))

# The heuristics miner drops B<->C: each direction has dependency +-1/6.
print(discover_heuristics(log).dependency[("B", "C")])
