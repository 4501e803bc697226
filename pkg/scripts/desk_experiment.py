"""Baseline vs combined strategy triple on dataset shapes 2-6, desk configuration.

    python3 scripts/desk_experiment.py --out desk-run
"""

import argparse
import statistics

from swarm_planner.experiment import BASELINE, COMBINED, ExperimentSpec, run_experiment
from swarm_planner.metrics import kruskal_wallis
from swarm_planner.moea import RunConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", default="2,3,4,5,6")
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--out", default=None)
    a = ap.parse_args()
    rows = tuple(int(r) for r in a.rows.split(","))
    spec = ExperimentSpec(rows=rows, triples=(BASELINE, COMBINED), runs=a.runs,
                          run_config=RunConfig(mu=12, lam=120, max_gens=300, grid_resolution=1.0), out=a.out)
    rep = run_experiment(spec)
    print(rep.text())
    for row in rows:
        g = {t.label: [r.generations for r in rep.records if r.scenario == f"ds{row}" and r.triple == t.label]
             for t in (BASELINE, COMBINED)}
        base, comb = g[BASELINE.label], g[COMBINED.label]
        p = kruskal_wallis([comb, base]).p
        print(f"ds{row}: median generations {statistics.median(base):g} -> {statistics.median(comb):g}  p={p:.3g}")


if __name__ == "__main__":
    main()
