import itertools
import os
import random
from fractions import Fraction

import pytest

from config import SOLVER_CMD
from models import (
    Add, Always, And, AtomConjunction, BooleanSpec, Const, Div, Encoding, GatewayStats, Implies, LiteralTable, Mul, Neg,
    Next, Not, Or, Prop, QuasiReaction, Relop, Sub, Var, Verdict, VerdictStatus, conjoin,
)
from services.abstraction import assemble
from services.game import SafetyGame
from services.literals import collect_literals, substitute
from services.smt_gateway import resolve_solver
from services.spec_parser import parse_spec
from utils.errors import GatewayError

FIXTURES_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")


def _solver_available() -> bool:
    try:
        resolve_solver(SOLVER_CMD)
    except GatewayError:
        return False
    return True


SOLVER_AVAILABLE = _solver_available()
requires_solver = pytest.mark.skipif(not SOLVER_AVAILABLE, reason="no SMT-LIB2 solver executable")


# Оракул валидности по явным областям среды: (P, A) валиден, если есть область R, P ⊆ R и A ∩ R = ∅
class RegionOracle:
    def __init__(self, regions, use_cache: bool = True, limit: int | None = None):
        self.regions = list(regions)
        self.use_cache = use_cache
        self.limit = limit
        self.stats = GatewayStats()
        self.log: list[tuple[str, QuasiReaction, bool]] = []
        self._cache: dict[tuple[int, int], Verdict] = {}

    async def __aenter__(self):
        return self

    async def __aexit__(self, *exc):
        return None

    def decide(self, quasi: QuasiReaction) -> bool:
        return any(quasi.potentials & ~r == 0 and quasi.antipotentials & r == 0 for r in self.regions)

    async def check(self, quasi: QuasiReaction, tag: str = "outer") -> Verdict:
        if self.use_cache and quasi.key in self._cache:
            self.stats.cache_hits += 1
            return self._cache[quasi.key]
        if tag == "inner":
            self.stats.inner_queries += 1
        else:
            self.stats.outer_queries += 1
        if self.limit is not None and self.stats.outer_queries + self.stats.inner_queries > self.limit:
            raise AssertionError(f"search exceeded {self.limit} queries")
        valid = self.decide(quasi)
        self.log.append((tag, quasi, valid))
        verdict = Verdict(VerdictStatus.VALID if valid else VerdictStatus.INVALID)
        if self.use_cache:
            self._cache[quasi.key] = verdict
        return verdict

    async def probe_choice(self, choice: int, env_values: dict) -> bool:
        self.stats.probe_queries += 1
        return bool(self.regions[env_values["region"]] >> choice & 1)


def region_factory(regions_by_size=None, default=None):
    """Oracle factory for run_abstraction: regions chosen by the cluster's literal count."""
    def make(table: LiteralTable) -> RegionOracle:
        if regions_by_size and len(table) in regions_by_size:
            return RegionOracle(regions_by_size[len(table)])
        if default is not None:
            return RegionOracle(default(table))
        return RegionOracle([1])
    return make


def _eval_term(term, point: dict) -> Fraction:
    if isinstance(term, Var):
        return point[term.name]
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Neg):
        return -_eval_term(term.operand, point)
    left, right = _eval_term(term.left, point), _eval_term(term.right, point)
    if isinstance(term, Add):
        return left + right
    if isinstance(term, Sub):
        return left - right
    if isinstance(term, Mul):
        return left * right
    if isinstance(term, Div):
        return left / right
    raise TypeError(term)


_RELOPS = {
    Relop.LT: lambda a, b: a < b,
    Relop.LE: lambda a, b: a <= b,
    Relop.GT: lambda a, b: a > b,
    Relop.GE: lambda a, b: a >= b,
    Relop.EQ: lambda a, b: a == b,
    Relop.NE: lambda a, b: a != b,
}


def eval_literal(literal, point: dict) -> bool:
    if isinstance(literal, AtomConjunction):
        return all(eval_literal(part, point) for part in literal.parts)
    return _RELOPS[literal.relop](_eval_term(literal.lhs, point), _eval_term(literal.rhs, point))


def choice_at(table: LiteralTable, point: dict) -> int:
    return sum(1 << i for i, entry in enumerate(table.entries) if eval_literal(entry.literal, point))


def grid_regions(table: LiteralTable, env_points, sys_points) -> list[int]:
    """Potential sets per environment point, sampling the system over a finite grid."""
    env = [v.name for v in table.env_variables()]
    system = [v.name for v in table.sys_variables()]
    regions = []
    for env_values in itertools.product(env_points, repeat=len(env)):
        potentials = 0
        for sys_values in itertools.product(sys_points, repeat=len(system)):
            point = dict(zip(env, env_values)) | dict(zip(system, sys_values))
            potentials |= 1 << choice_at(table, point)
        if potentials not in regions:
            regions.append(potentials)
    return regions


INT_ENV = [Fraction(v) for v in range(-25, 26)]
INT_SYS = [Fraction(v) for v in range(-40, 41)]
HALF_ENV = [Fraction(v, 2) for v in range(-10, 13)]
QUARTER_SYS = [Fraction(v, 4) for v in range(-24, 25)]


def load_fixture(name: str):
    with open(os.path.join(FIXTURES_DIR, name), encoding="utf-8") as f:
        return parse_spec(f.read())


def fixture_table(name: str) -> tuple[LiteralTable, object]:
    spec = load_fixture(name)
    table = collect_literals(spec)
    skeleton = substitute(spec, table)
    return table, skeleton


# Потенциалы примера (x<2, y>1, y<x): над Z области x<=1, x=2, x>=3
RUNNING_LIA_REGIONS = [0b00101010, 0b00010100, 0b01010100]
# Над R: 1<x<2, x<=1, x>=2
RUNNING_LRA_REGIONS = [0b10101000, 0b00101010, 0b01010100]


def random_regions(rng: random.Random, n: int, max_regions: int = 3) -> list[int]:
    width = 1 << n
    return [rng.randrange(1, 1 << width) for _ in range(rng.randint(1, max_regions))]


def synthetic_table(n: int) -> LiteralTable:
    lines = ["theory LIA", "env x:Int", "sys y:Int"]
    lines += [f"lit {i + 1} : y > x + {i}" for i in range(n)]
    return collect_literals(parse_spec("\n".join(lines)))


def random_skeleton(rng: random.Random, n: int):
    names = [Prop(f"s{i}") for i in range(n)]
    parts = []
    for _ in range(rng.randint(1, 2)):
        a, b = rng.choice(names), rng.choice(names)
        kind = rng.randrange(3)
        if kind == 0:
            parts.append(Implies(a, Next(b)))
        elif kind == 1:
            parts.append(Implies(a, Not(b)))
        else:
            parts.append(Or(a, b))
    return Always(conjoin(parts))


def random_pair_formula(rng: random.Random, names: list[str], depth: int = 3, under_next: bool = False):
    if depth == 0 or rng.random() < 0.25:
        return Prop(rng.choice(names))
    kind = rng.randrange(4 if under_next else 5)
    if kind == 0:
        return Not(random_pair_formula(rng, names, depth - 1, under_next))
    if kind == 4:
        return Next(random_pair_formula(rng, names, depth - 1, True))
    left = random_pair_formula(rng, names, depth - 1, under_next)
    right = random_pair_formula(rng, names, depth - 1, under_next)
    return (And, Or, Implies)[kind - 1](left, right)


def unrolled_realizable(game: SafetyGame) -> bool:
    """Bounded-unrolling game search to depth 2^|V| + 1."""
    inputs = game.input_count
    outputs = len(game.constraint.atoms) - inputs
    memo: dict[tuple[int, int], bool] = {}

    def survives(state: int, steps: int) -> bool:
        if steps == 0:
            return True
        key = (state, steps)
        if key not in memo:
            memo[key] = all(
                any(
                    game.holds(state, i | o << inputs) and survives(i | o << inputs, steps - 1)
                    for o in range(1 << outputs)
                )
                for i in range(1 << inputs)
            )
        return memo[key]

    depth = game.size + 1
    return all(any(survives(i | o << inputs, depth) for o in range(1 << outputs)) for i in range(1 << inputs))


@pytest.fixture
def running_lia():
    return fixture_table("running_example_lia.ltlt")


@pytest.fixture
def running_lra():
    return fixture_table("running_example_lra.ltlt")


@pytest.fixture
def rng():
    return random.Random(20240517)


def boolean_spec_of(skeleton, table, vr, encoding=Encoding.ONEHOT) -> BooleanSpec:
    return assemble(skeleton, table, [(table, vr)], encoding)
