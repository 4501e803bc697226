"""swarm-planner: generate | solve | experiment | plot.

Exit codes: 0 success, 1 input error, 2 no valid solution.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiment import ExperimentSpec, run_experiment, write_run
from .model import TABLE1, DatasetSpec, GenerationFailed, load_scenario, save_scenario, generate_scenario
from .moea import RunConfig, evolve
from .plots import companion_csv, parallel_svg, radviz_svg
from .weights import StrategyKind, StrategyTriple

EXIT_OK, EXIT_INPUT, EXIT_NO_SOLUTION = 0, 1, 2


class InputError(Exception):
    pass


def parse_rows(text: str, n: int = len(TABLE1)) -> list[int]:
    """'1-4,7' -> [1, 2, 3, 4, 7]; rows are 1-based."""
    rows: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            rows.extend(range(int(a), int(b) + 1))
        else:
            rows.append(int(part))
    bad = [r for r in rows if not 1 <= r <= n]
    if bad:
        raise InputError(f"rows out of range 1..{n}: {bad}")
    return rows


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    kinds = [k.value for k in StrategyKind]
    d = RunConfig()
    p.add_argument("--nus", choices=kinds, default="constant")
    p.add_argument("--dus", choices=kinds, default="constant")
    p.add_argument("--dgs", choices=kinds, default="constant")
    p.add_argument("--mu", type=int, default=d.mu)
    p.add_argument("--lambda", dest="lam", type=int, default=d.lam)
    p.add_argument("--mutation-prob", type=float, default=d.mutation_prob)
    p.add_argument("--crossover-prob", type=float, default=d.crossover_prob)
    p.add_argument("--stagnation", type=int, default=d.stagnation_gens)
    p.add_argument("--max-gens", type=int, default=d.max_gens)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-res", type=float, default=d.grid_resolution)
    p.add_argument("--distance-unit", type=float, default=d.distance_unit)


def _run_config(a: argparse.Namespace, scenario_path: str | None) -> RunConfig:
    try:
        return RunConfig(
            mu=a.mu, lam=a.lam, mutation_prob=a.mutation_prob, crossover_prob=a.crossover_prob,
            stagnation_gens=a.stagnation, max_gens=a.max_gens,
            strategies=StrategyTriple(StrategyKind(a.nus), StrategyKind(a.dus), StrategyKind(a.dgs)),
            seed=a.seed, scenario_path=scenario_path, grid_resolution=a.grid_res, distance_unit=a.distance_unit,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _load(path: str):
    try:
        return load_scenario(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read scenario {path}: {exc}") from exc


def cmd_generate(a: argparse.Namespace) -> int:
    if a.spec:
        try:
            specs = [DatasetSpec(**row) for row in json.loads(Path(a.spec).read_text())]
        except (OSError, ValueError, TypeError) as exc:
            raise InputError(f"cannot read dataset spec {a.spec}: {exc}") from exc
        rows = list(range(1, len(specs) + 1))
    else:
        specs = list(TABLE1)
        rows = parse_rows(a.rows) if a.rows else list(range(1, len(TABLE1) + 1))
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for r in rows:
        try:
            s = generate_scenario(specs[r - 1], seed=a.seed + r, name=f"ds{r}")
        except GenerationFailed as exc:
            raise InputError(f"row {r}: {exc}") from exc
        save_scenario(s, out / f"ds{r}.json")
        print(out / f"ds{r}.json")
    return EXIT_OK


def cmd_solve(a: argparse.Namespace) -> int:
    path = a.scenario_opt or a.scenario
    if not path:
        raise InputError("solve needs a scenario file")
    s = _load(path)
    cfg = _run_config(a, path)
    result = evolve(cfg, s)
    name = s.name or Path(path).stem
    d = write_run(a.out, name, s, result)
    summary = {"generations_run": result.generations_run, "converged": result.converged,
               "front_size": len(result.front), "config": cfg.to_dict()}
    (d / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    print(json.dumps({k: summary[k] for k in ("generations_run", "converged", "front_size")}))
    print(d)
    if not result.front:
        print("no valid solution found", file=sys.stderr)
        return EXIT_NO_SOLUTION
    return EXIT_OK


def cmd_experiment(a: argparse.Namespace) -> int:
    try:
        triples = tuple(StrategyTriple.parse(t) for t in a.triple) if a.triple else ExperimentSpec.triples
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rows = tuple(parse_rows(a.rows)) if a.rows else ()
    cfg = _run_config(a, None)
    try:
        hv_ref = tuple(float(x) for x in a.hv_ref.split(",")) if a.hv_ref else None
    except ValueError as exc:
        raise InputError(f"bad --hv-ref: {exc}") from exc
    for p in a.scenario:
        _load(p)
    try:
        spec = ExperimentSpec(rows=rows, scenario_paths=tuple(a.scenario), triples=triples, runs=a.runs,
                              base_seed=a.seed, run_config=cfg, out=a.out, hv_ref=hv_ref)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    report = run_experiment(spec)
    print(report.text(), end="")
    return EXIT_OK


def cmd_plot(a: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(a.front).read_text())
        points = [e["objectives"] for e in doc["front"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read front {a.front}: {exc}") from exc
    if not points:
        print("warning: empty front, writing axes only", file=sys.stderr)
    if a.mode == "parallel":
        svg, tr = parallel_svg(points)
        labels = [f"z_{n}" for n in doc.get("objectives", [])] or [f"z{k}" for k in range(7)]
    else:
        svg, tr = radviz_svg(points)
        labels = ["x", "y"]
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"front-{a.mode}.svg").write_text(svg)
    (out / f"front-{a.mode}.csv").write_text(companion_csv(points, tr, labels))
    print(out / f"front-{a.mode}.svg")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarm-planner", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write synthetic scenarios shaped like the dataset table")
    g.add_argument("--table1", action="store_true", help="all 16 built-in rows (default)")
    g.add_argument("--rows", help="subset of rows, e.g. 1-4,7")
    g.add_argument("--spec", help="JSON list of dataset rows instead of the built-in table")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="scenarios")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run the planner on one scenario")
    s.add_argument("scenario", nargs="?")
    s.add_argument("--scenario", dest="scenario_opt")
    _add_run_flags(s)
    s.add_argument("--out", default="runs")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="compare strategy triples over repeated runs")
    e.add_argument("--scenario", action="append", default=[])
    e.add_argument("--rows", help="built-in dataset rows to generate, e.g. 2-6")
    e.add_argument("--triple", action="append", help="nus,dus,dgs; repeatable")
    e.add_argument("--runs", type=int, default=10)
    e.add_argument("--hv-ref", help="comma-separated hypervolume reference point in normalised space")
    _add_run_flags(e)
    e.add_argument("--out", default="experiment")
    e.set_defaults(func=cmd_experiment)

    pl = sub.add_parser("plot", help="parallel-coordinates or RadViz SVG of a front")
    pl.add_argument("front")
    pl.add_argument("--mode", choices=["parallel", "radviz"], default="parallel")
    pl.add_argument("--out", default="plots")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
