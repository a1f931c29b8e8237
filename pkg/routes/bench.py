import asyncio
import json
import os
import sys
import traceback

import click
from jinja2 import Environment, FileSystemLoader
from tqdm import tqdm

from config import BENCH_REPS, BENCH_WORKERS, QUERY_TIMEOUT_MS, SOLVER_CMD, TEMPLATES_DIR
from models import Algorithm, BenchReport, BenchRow, Heuristics, RunConfig, Theory
from services.abstraction import brute_force_queries
from services.game import solve, to_pair_form
from services.pipeline import OracleFactory, run_abstraction
from services.spec_parser import parse_spec
from utils.errors import AbstractionError, CapacityError, FragmentError
from utils.logger import logger

templates = Environment(loader=FileSystemLoader(TEMPLATES_DIR), keep_trailing_newline=True)


def load_jobs(directory: str) -> list[dict]:
    manifest = os.path.join(directory, "bench.json")
    if os.path.exists(manifest):
        with open(manifest, encoding="utf-8") as f:
            fixtures = json.load(f)["fixtures"]
    else:
        fixtures = [
            {"file": name, "algorithms": [Algorithm.MODEL_LOOP.value, Algorithm.NESTED.value]}
            for name in sorted(os.listdir(directory)) if name.endswith(".ltlt")
        ]

    jobs = []
    for fixture in fixtures:
        for theory in fixture.get("theories", [None]):
            for algo in fixture.get("algorithms", [Algorithm.NESTED.value]):
                algorithm = Algorithm(algo)
                setups = fixture.get("setups", [None]) if algorithm is Algorithm.NESTED else [None]
                for setup in setups:
                    jobs.append({
                        "path": os.path.join(directory, fixture["file"]),
                        "fixture": fixture.get("name", fixture["file"].removesuffix(".ltlt")),
                        "theory": Theory(theory) if theory else None,
                        "algorithm": algorithm,
                        "heuristics": Heuristics(**setup) if setup else None,
                        "force": fixture.get("force", False),
                    })
    return jobs


def _verdict(spec) -> str:
    try:
        return "realizable" if solve(to_pair_form(spec)).realizable else "unrealizable"
    except (CapacityError, FragmentError):
        return "n/a"


async def run_job(job: dict, cfg: RunConfig, factory: OracleFactory | None = None) -> BenchRow:
    row = BenchRow(
        fixture=job["fixture"],
        theory=job["theory"],
        algorithm=job["algorithm"],
        setup=job["heuristics"].label() if job["heuristics"] else "-",
    )
    try:
        with open(job["path"], encoding="utf-8") as f:
            spec = parse_spec(f.read())
        row.theory = row.theory or spec.theory
        runs = []
        for rep in range(cfg.repetitions):
            run_cfg = cfg.model_copy(update={
                "algorithm": job["algorithm"],
                "heuristics": job["heuristics"],
                "theory": job["theory"],
                "seed": cfg.seed + rep,
                "force": cfg.force or job["force"],
            })
            runs.append(await run_abstraction(spec, run_cfg, factory))
    except (AbstractionError, OSError) as e:
        logger.warning(f"[BENCH] {job['fixture']} ({job['algorithm'].value}) failed: {e}")
        row.error = str(e)
        return row
    except Exception as e:
        logger.error(f"❌ [BENCH] {job['fixture']} ({job['algorithm'].value}): {e}\n{traceback.format_exc()}")
        row.error = f"{type(e).__name__}: {e}"
        return row

    count = len(runs)
    last = runs[-1]
    if job["algorithm"] is Algorithm.NESTED and not job["heuristics"]:
        row.setup = last.stats.heuristics.label()
    row.clusters = [(c.vars, c.lits) for c in last.stats.clusters]
    row.wall_ms = round(sum(r.stats.wall_ms for r in runs) / count, 3)
    row.outer_queries = sum(r.stats.outer_queries for r in runs) / count
    row.inner_queries = sum(r.stats.inner_queries for r in runs) / count
    row.valid_reactions = sum(r.stats.valid_reactions for r in runs) / count
    row.minimal_reactions = sum(len(vr.minimal()) for r in runs for vr in r.reactions) / count
    row.brute_force_queries = sum(brute_force_queries(c.lits) for c in last.stats.clusters)
    if row.brute_force_queries:
        row.ratio = round((row.outer_queries + row.inner_queries) / row.brute_force_queries, 6)
    row.verdict = _verdict(last.spec)
    return row


async def run_bench(directory: str, cfg: RunConfig, factory: OracleFactory | None = None) -> BenchReport:
    jobs = load_jobs(directory)
    semaphore = asyncio.Semaphore(cfg.workers)
    progress = tqdm(total=len(jobs), desc="bench", file=sys.stderr, disable=not jobs)

    async def guarded(job: dict) -> BenchRow:
        async with semaphore:
            row = await run_job(job, cfg, factory)
        progress.update(1)
        return row

    try:
        rows = await asyncio.gather(*(guarded(job) for job in jobs))
    finally:
        progress.close()
    logger.info(f"[BENCH] {directory}: {len(rows)} rows, {sum(1 for r in rows if r.error)} failed")
    return BenchReport(repetitions=cfg.repetitions, rows=list(rows))


def render_report(report: BenchReport) -> str:
    return templates.get_template("bench_report.md.j2").render(report=report)


@click.command("bench")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--reps", type=int, default=BENCH_REPS, show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), help="Markdown or .json report path.")
@click.option("--solver-cmd", default=SOLVER_CMD, show_default=True)
@click.option("--timeout-ms", type=int, default=QUERY_TIMEOUT_MS, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=BENCH_WORKERS, show_default=True)
@click.option("--force", is_flag=True, help="Allow brute force above the query cap.")
def command(directory, reps, report_path, solver_cmd, timeout_ms, seed, workers, force):
    """Run every bundled fixture and report averaged query counts."""
    cfg = RunConfig(
        command="bench",
        input_path=directory,
        solver_cmd=solver_cmd,
        timeout_ms=timeout_ms,
        seed=seed,
        repetitions=reps,
        report_path=report_path,
        workers=workers,
        force=force,
    )
    report = asyncio.run(run_bench(directory, cfg))
    if report_path and report_path.endswith(".json"):
        text = report.model_dump_json(indent=2) + "\n"
    else:
        text = render_report(report)
    if report_path:
        with open(report_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)
