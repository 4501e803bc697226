"""Per-allele search-space sizes for every built-in dataset row (one sensor per UAV)."""

from swarm_planner.model import TABLE1
from swarm_planner.plan import search_space_size

print(f"{'row':>3} {'T':>3} {'multi':>5} {'U':>3} {'G':>3}  {'total':>12}")
for k, row in enumerate(TABLE1, 1):
    sp = search_space_size(row.tasks, row.multi_uav_tasks, row.uavs, row.gcss, 1)
    print(f"{k:>3} {row.tasks:>3} {row.multi_uav_tasks:>5} {row.uavs:>3} {row.gcss:>3}  {float(sp.total):>12.3e}")
