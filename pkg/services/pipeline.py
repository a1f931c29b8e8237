import asyncio
import json
import time
from dataclasses import dataclass, replace
from typing import Callable

from config import BENCH_SETUPS_PATH
from models import (
    Algorithm, BooleanSpec, Cluster, ClusterStats, GatewayStats, Heuristics, LiteralTable, RunConfig, RunStats,
    TheorySpec, ValidReactionSet,
)
from services.abstraction import assemble, brute_force
from services.literals import cluster_literals, collect_literals, substitute
from services.sat_search import model_loop, nested_loop
from services.smt_gateway import SmtGateway
from utils.logger import logger

with open(BENCH_SETUPS_PATH, encoding="utf-8") as f:
    bench_setups = json.load(f)


def default_heuristics(literal_count: int) -> Heuristics:
    for setup in bench_setups["defaults"]:
        limit = setup["max_literals"]
        if limit is None or literal_count <= limit:
            return Heuristics(**{k: v for k, v in setup.items() if k != "max_literals"})
    return Heuristics()


# Результат абстракции одной спецификации
@dataclass
class AbstractionResult:
    spec: BooleanSpec
    stats: RunStats
    table: LiteralTable
    clusters: list[Cluster]
    reactions: list[ValidReactionSet]


OracleFactory = Callable[[LiteralTable], object]


def solver_factory(cfg: RunConfig) -> OracleFactory:
    def make(table: LiteralTable) -> SmtGateway:
        return SmtGateway(table, cfg.solver_cmd, cfg.timeout_ms, abort_on_unknown=cfg.abort_on_unknown)
    return make


def split_clusters(table: LiteralTable, clustering: bool) -> list[Cluster]:
    if not len(table):
        return []
    if clustering:
        return cluster_literals(table)
    names = frozenset().union(*(entry.variables for entry in table.entries))
    return [Cluster(tuple(range(len(table))), names)]


async def _abstract_cluster(
    index: int,
    sub_table: LiteralTable,
    cfg: RunConfig,
    heuristics: Heuristics,
    factory: OracleFactory,
    semaphore: asyncio.Semaphore,
) -> tuple[ValidReactionSet, GatewayStats]:
    async with semaphore:
        async with factory(sub_table) as oracle:
            logger.info(f"[ABSTRACT] cluster {index}: {len(sub_table)} literals, algorithm={cfg.algorithm.value}")
            if cfg.algorithm is Algorithm.BRUTE_FORCE:
                vr = await brute_force(sub_table, oracle, cfg.force)
            elif cfg.algorithm is Algorithm.MODEL_LOOP:
                vr = await model_loop(sub_table, oracle, cfg.seed)
            else:
                vr = await nested_loop(sub_table, oracle, heuristics, cfg.seed)
            logger.info(
                f"[ABSTRACT] cluster {index} done: |VR|={len(vr)} "
                f"outer={oracle.stats.outer_queries} inner={oracle.stats.inner_queries}"
            )
            return vr, oracle.stats


async def run_abstraction(
    spec: TheorySpec, cfg: RunConfig, factory: OracleFactory | None = None
) -> AbstractionResult:
    # Кластеры абстрагируются параллельно, затем собирается phi_B
    started = time.perf_counter()
    if cfg.theory is not None and cfg.theory is not spec.theory:
        spec = replace(spec, theory=cfg.theory)
    table = collect_literals(spec)
    skeleton = substitute(spec, table)
    clusters = split_clusters(table, cfg.clustering)
    sub_tables = [table.restrict(cluster.literals) for cluster in clusters]

    largest = max((len(c.literals) for c in clusters), default=0)
    heuristics = cfg.heuristics or default_heuristics(largest)
    factory = factory or solver_factory(cfg)
    semaphore = asyncio.Semaphore(cfg.workers)

    results = await asyncio.gather(*(
        _abstract_cluster(k, sub, cfg, heuristics, factory, semaphore) for k, sub in enumerate(sub_tables)
    ))
    reactions = [vr for vr, _ in results]
    boolean_spec = assemble(skeleton, table, list(zip(sub_tables, reactions)), cfg.encoding)

    cluster_stats = [
        ClusterStats(
            vars=len(cluster.variables),
            lits=len(cluster.literals),
            outer_queries=gateway_stats.outer_queries,
            inner_queries=gateway_stats.inner_queries,
            cache_hits=gateway_stats.cache_hits,
            valid_reactions=len(vr),
            smt_ms=round(gateway_stats.solver_ms, 3),
        )
        for cluster, (vr, gateway_stats) in zip(clusters, results)
    ]
    stats = RunStats(
        algorithm=cfg.algorithm,
        clusters=cluster_stats,
        outer_queries=sum(c.outer_queries for c in cluster_stats),
        inner_queries=sum(c.inner_queries for c in cluster_stats),
        smt_ms=round(sum(c.smt_ms for c in cluster_stats), 3),
        wall_ms=round((time.perf_counter() - started) * 1000, 3),
        valid_reactions=sum(c.valid_reactions for c in cluster_stats),
        heuristics=heuristics,
        seed=cfg.seed,
    )
    return AbstractionResult(boolean_spec, stats, table, clusters, reactions)
