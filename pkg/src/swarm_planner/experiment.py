"""Multi-run experiments: (scenario, strategy triple, seed) cells and their statistics."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .csp import OBJECTIVE_NAMES
from .metrics import hypervolume, kruskal_wallis, normalize
from .model import TABLE1, Scenario, generate_scenario, load_scenario
from .moea import RunConfig, RunResult, evolve
from .weights import StrategyTriple

BASELINE = StrategyTriple()
COMBINED = StrategyTriple.parse("geometric,harmonic,harmonic")


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("SWARM_PLANNER_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ExperimentSpec:
    rows: tuple[int, ...] = ()  # 1-based TABLE1 rows, generated with seed = row
    scenario_paths: tuple[str, ...] = ()
    triples: tuple[StrategyTriple, ...] = (BASELINE, COMBINED)
    runs: int = 10
    base_seed: int = 0
    run_config: RunConfig = RunConfig()
    out: str | None = None
    hv_ref: tuple[float, ...] | None = None  # in normalised space; default all ones

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not self.triples:
            raise ValueError("need at least one strategy triple")
        if not self.rows and not self.scenario_paths:
            raise ValueError("need at least one scenario")

    def scenarios(self) -> list[tuple[str, Scenario]]:
        out = [(f"ds{r}", generate_scenario(TABLE1[r - 1], seed=r, name=f"ds{r}")) for r in self.rows]
        out += [(Path(p).stem, load_scenario(p)) for p in self.scenario_paths]
        return out


@dataclass
class RunRecord:
    scenario: str
    triple: str
    seed: int
    generations: int
    converged: bool
    front_size: int
    hypervolume: float = 0.0
    error: str = ""
    front: list[tuple[float, ...]] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class CellSummary:
    scenario: str
    triple: str
    runs: int
    failures: int
    hv_mean: float
    hv_std: float
    gens_mean: float
    gens_std: float
    gens_median: float
    p_hv: float | None
    p_gens: float | None


@dataclass
class ExperimentReport:
    records: list[RunRecord]
    summary: list[CellSummary]

    def runs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "triple", "seed", "generations", "converged", "front_size", "hypervolume", "error"])
        for r in self.records:
            w.writerow([r.scenario, r.triple, r.seed, r.generations, int(r.converged), r.front_size,
                        repr(r.hypervolume), r.error])
        return buf.getvalue()

    def summary_csv(self) -> str:
        with_p = any(c.p_gens is not None for c in self.summary)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["scenario", "triple", "runs", "failures", "hv_mean", "hv_std", "gens_mean", "gens_std", "gens_median"]
        w.writerow(head + (["p_hv", "p_gens"] if with_p else []))
        for c in self.summary:
            row = [c.scenario, c.triple, c.runs, c.failures, repr(c.hv_mean), repr(c.hv_std),
                   repr(c.gens_mean), repr(c.gens_std), repr(c.gens_median)]
            if with_p:
                row += ["" if c.p_hv is None else repr(c.p_hv), "" if c.p_gens is None else repr(c.p_gens)]
            w.writerow(row)
        return buf.getvalue()

    def text(self) -> str:
        lines = [f"{'scenario':<10} {'triple':<32} {'hypervolume':>17} {'generations':>17} {'p_hv':>8} {'p_gens':>8}"]
        for c in self.summary:
            ph = "" if c.p_hv is None else f"{c.p_hv:.3g}"
            pg = "" if c.p_gens is None else f"{c.p_gens:.3g}"
            lines.append(f"{c.scenario:<10} {c.triple:<32} {c.hv_mean:>8.4f} ± {c.hv_std:<6.4f} "
                         f"{c.gens_mean:>8.1f} ± {c.gens_std:<6.1f} {ph:>8} {pg:>8}")
        return "\n".join(lines) + "\n"


def _std(xs: list[float]) -> float:
    return statistics.stdev(xs) if len(xs) > 1 else 0.0


def run_dir(out: str | Path, scenario: str, triple: StrategyTriple, seed: int) -> Path:
    return Path(out) / scenario / triple.label / f"run-{seed}"


def front_document(result: RunResult, scenario: Scenario) -> dict:
    return {
        "config": result.config.to_dict() if result.config else None,
        "scenario": scenario.name,
        "scenario_fingerprint": scenario.fingerprint(),
        "generations_run": result.generations_run,
        "converged": result.converged,
        "objectives": list(OBJECTIVE_NAMES),
        "front": [{"objectives": list(v.as_tuple()), "chromosome": c.to_dict()} for c, v in result.front],
    }


def write_run(out: str | Path, name: str, scenario: Scenario, result: RunResult) -> Path:
    d = run_dir(out, name, result.config.strategies, result.config.seed)
    d.mkdir(parents=True, exist_ok=True)
    (d / "front.json").write_text(json.dumps(front_document(result, scenario), indent=1) + "\n")
    (d / "log.csv").write_text(result.log_csv())
    return d


def _run_cell(args) -> RunRecord:
    name, scenario, cfg, out = args
    try:
        res = evolve(cfg, scenario)
    except Exception as exc:  # recorded per cell; the experiment keeps going
        return RunRecord(name, cfg.strategies.label, cfg.seed, 0, False, 0, error=f"{type(exc).__name__}: {exc}")
    if out is not None:
        write_run(out, name, scenario, res)
    return RunRecord(name, cfg.strategies.label, cfg.seed, res.generations_run, res.converged, len(res.front),
                     front=[v.as_tuple() for _, v in res.front])


def summarize(records: list[RunRecord], triples: list[str], hv_ref=None) -> list[CellSummary]:
    """Fill per-run hypervolumes (union-normalised per scenario) and per-cell statistics."""
    scenarios = list(dict.fromkeys(r.scenario for r in records))
    out = []
    for name in scenarios:
        mine = [r for r in records if r.scenario == name and not r.error]
        with_front = [r for r in mine if r.front]
        if with_front:
            for r, nf in zip(with_front, normalize([r.front for r in with_front])):
                r.hypervolume = hypervolume(nf, hv_ref)
        cells = {t: [r for r in mine if r.triple == t] for t in triples}
        base = cells.get(BASELINE.label) if len(triples) > 1 else None
        if base is None and len(triples) > 1:
            base = cells[triples[0]]
        for t in triples:
            rs = cells[t]
            hv = [r.hypervolume for r in rs]
            gens = [float(r.generations) for r in rs]
            p_hv = p_gens = None
            if base is not None and rs is not base and rs and base:
                p_hv = kruskal_wallis([hv, [r.hypervolume for r in base]]).p
                p_gens = kruskal_wallis([gens, [float(r.generations) for r in base]]).p
            n_fail = sum(1 for r in records if r.scenario == name and r.triple == t and r.error)
            out.append(CellSummary(
                name, t, len(rs), n_fail,
                statistics.fmean(hv) if hv else 0.0, _std(hv),
                statistics.fmean(gens) if gens else 0.0, _std(gens),
                statistics.median(gens) if gens else 0.0, p_hv, p_gens,
            ))
    return out


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    jobs = []
    for name, scenario in spec.scenarios():
        for triple in spec.triples:
            for i in range(spec.runs):
                cfg = dataclasses.replace(spec.run_config, strategies=triple, seed=spec.base_seed + i)
                jobs.append((name, scenario, cfg, spec.out))
    workers = min(thread_cap(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_run_cell, jobs))
    else:
        records = [_run_cell(j) for j in jobs]
    report = ExperimentReport(records, summarize(records, [t.label for t in spec.triples], spec.hv_ref))
    if spec.out is not None:
        out = Path(spec.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "runs.csv").write_text(report.runs_csv())
        (out / "summary.csv").write_text(report.summary_csv())
        (out / "summary.txt").write_text(report.text())
    return report
