import asyncio

import click
from pydantic import ValidationError

from config import QUERY_TIMEOUT_MS, SOLVER_CMD
from models import Algorithm, Encoding, Heuristics, RunConfig, Theory
from services.emitter import emit_boolean_spec, emit_stats
from services.pipeline import AbstractionResult, run_abstraction
from services.spec_parser import parse_spec
from utils.logger import logger


def build_heuristics(mxi: int | None, md: int | None, decay: int | None, acore: str | None) -> Heuristics | None:
    # Явные опции важнее; без них набор выбирается по числу литералов
    given = {"mxi": mxi, "md": md, "dc": decay}
    overrides = {k: v for k, v in given.items() if v is not None}
    if acore is not None:
        overrides["acore"] = acore == "on"
    if not overrides:
        return None
    return Heuristics(**overrides)


async def run_abstract(cfg: RunConfig) -> AbstractionResult:
    with open(cfg.input_path, encoding="utf-8") as f:
        spec = parse_spec(f.read())
    result = await run_abstraction(spec, cfg)

    document = emit_boolean_spec(result.spec)
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(document)
    else:
        click.echo(document, nl=False)
    if cfg.stats_path:
        with open(cfg.stats_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(emit_stats(result.stats))
    logger.info(
        f"[ABSTRACT] {cfg.input_path}: {len(result.clusters)} clusters, |VR|={result.stats.valid_reactions}, "
        f"outer={result.stats.outer_queries} inner={result.stats.inner_queries}"
    )
    return result


@click.command("abstract")
@click.argument("spec_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output_path", type=click.Path(dir_okay=False), help="Boolean document path.")
@click.option("--algo", type=click.Choice([a.value for a in Algorithm]), default=Algorithm.NESTED.value)
@click.option("--mxi", type=int, help="Max inner queries per inner loop.")
@click.option("--md", type=int, help="Enter the inner loop on every Md-th invalid model.")
@click.option("--decay", type=int, help="Decrease fatigue by one every N inner loops.")
@click.option("--acore", type=click.Choice(["on", "off"]))
@click.option("--encoding", type=click.Choice([e.value for e in Encoding]), default=Encoding.ONEHOT.value)
@click.option("--cluster", type=click.Choice(["on", "off"]), default="on")
@click.option("--theory", type=click.Choice([t.value for t in Theory]), help="Override the document theory.")
@click.option("--solver-cmd", default=SOLVER_CMD, show_default=True)
@click.option("--timeout-ms", type=int, default=QUERY_TIMEOUT_MS, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--stats", "stats_path", type=click.Path(dir_okay=False), help="Write run statistics as JSON.")
@click.option("--workers", type=int, default=4, show_default=True, help="Clusters abstracted concurrently.")
@click.option("--force", is_flag=True, help="Allow brute force above the query cap.")
def command(spec_path, output_path, algo, mxi, md, decay, acore, encoding, cluster, theory, solver_cmd,
            timeout_ms, seed, stats_path, workers, force):
    """Abstract an LTL modulo theory specification into Boolean LTL."""
    try:
        cfg = RunConfig(
            command="abstract",
            input_path=spec_path,
            output_path=output_path,
            algorithm=Algorithm(algo),
            heuristics=build_heuristics(mxi, md, decay, acore),
            theory=Theory(theory) if theory else None,
            solver_cmd=solver_cmd,
            timeout_ms=timeout_ms,
            seed=seed,
            clustering=cluster == "on",
            encoding=Encoding(encoding),
            stats_path=stats_path,
            workers=workers,
            force=force,
        )
    except ValidationError as e:
        raise click.BadParameter(str(e))
    asyncio.run(run_abstract(cfg))
