import pytest

from conftest import (
    INT_ENV, INT_SYS, RUNNING_LIA_REGIONS, RegionOracle, grid_regions, load_fixture, region_factory,
)
from models import Algorithm, Heuristics, RunConfig, Theory
from services.emitter import emit_boolean_spec
from services.game import solve, to_pair_form
from services.literals import collect_literals
from services.pipeline import default_heuristics, run_abstraction, split_clusters
from services.spec_parser import parse_spec
from utils.errors import CapacityError

LIFT_HEURISTICS = Heuristics(mxi=130, md=1, dc=0, acore=False)


def test_default_heuristics_by_size():
    assert default_heuristics(0) == Heuristics(mxi=10, md=2, dc=0, acore=True)
    assert default_heuristics(5) == Heuristics(mxi=10, md=2, dc=0, acore=True)
    assert default_heuristics(6) == Heuristics(mxi=100, md=20, dc=40, acore=False)


async def test_running_example_unrealizable():
    spec = load_fixture("running_example_lia.ltlt")
    result = await run_abstraction(spec, RunConfig(), region_factory({3: RUNNING_LIA_REGIONS}))
    assert len(result.clusters) == 1
    assert result.stats.clusters[0].lits == 3
    assert not solve(to_pair_form(result.spec)).realizable
    assert result.stats.heuristics == default_heuristics(3)


async def test_grid_oracle_over_fixture():
    spec = load_fixture("syn_2_3.ltlt")
    factory = region_factory(default=lambda table: grid_regions(table, INT_ENV, INT_SYS))
    result = await run_abstraction(spec, RunConfig(algorithm=Algorithm.MODEL_LOOP), factory)
    assert result.stats.valid_reactions >= 1
    assert solve(to_pair_form(result.spec)).realizable


async def test_lift_clusters_abstracted_separately():
    spec = load_fixture("lift.ltlt")
    cfg = RunConfig(algorithm=Algorithm.NESTED, heuristics=LIFT_HEURISTICS)
    result = await run_abstraction(spec, cfg, region_factory())
    assert [(c.vars, c.lits) for c in result.stats.clusters] == [(1, 7), (2, 4), (1, 3), (1, 2)]
    assert [c.valid_reactions for c in result.stats.clusters] == [1, 1, 1, 1]
    assert result.stats.valid_reactions == 4
    assert result.stats.outer_queries == sum(c.outer_queries for c in result.stats.clusters)
    assert result.spec.inputs == ("d0_0", "d1_0", "d2_0", "d3_0")


async def test_runs_are_deterministic():
    spec = load_fixture("running_example_lra.ltlt")
    cfg = RunConfig(seed=9, heuristics=Heuristics(mxi=4, md=1))
    first = await run_abstraction(spec, cfg, region_factory({3: RUNNING_LIA_REGIONS}))
    second = await run_abstraction(spec, cfg, region_factory({3: RUNNING_LIA_REGIONS}))
    assert emit_boolean_spec(first.spec) == emit_boolean_spec(second.spec)
    skip = {"smt_ms", "wall_ms"}
    assert first.stats.model_dump(exclude=skip) == second.stats.model_dump(exclude=skip)


async def test_theory_override_reaches_oracle():
    seen = []

    def factory(table):
        seen.append(table.theory)
        return RegionOracle([1])

    spec = load_fixture("syn_2_3.ltlt")
    await run_abstraction(spec, RunConfig(theory=Theory.LRA), factory)
    assert seen == [Theory.LRA]


async def test_brute_force_capacity():
    spec = load_fixture("syn_2_4.ltlt")
    with pytest.raises(CapacityError):
        await run_abstraction(spec, RunConfig(algorithm=Algorithm.BRUTE_FORCE), region_factory())


async def test_brute_force_counts():
    spec = load_fixture("syn_2_2.ltlt")
    result = await run_abstraction(spec, RunConfig(algorithm=Algorithm.BRUTE_FORCE), region_factory())
    assert result.stats.outer_queries == 16
    assert result.stats.inner_queries == 0


async def test_zero_literals():
    spec = parse_spec("theory LIA\nenv x:Int\nspec: G true")

    def factory(table):
        raise AssertionError("no cluster expected")

    result = await run_abstraction(spec, RunConfig(), factory)
    assert result.clusters == []
    assert result.stats.clusters == []
    assert emit_boolean_spec(result.spec) == ".inputs\n.outputs\nspec: G true\n"


def test_clustering_can_be_disabled():
    literals = collect_literals(load_fixture("lift.ltlt"))
    assert len(split_clusters(literals, True)) == 4
    single = split_clusters(literals, False)
    assert len(single) == 1
    assert single[0].literals == tuple(range(16))
