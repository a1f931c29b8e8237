import json

from conftest import RUNNING_LIA_REGIONS, boolean_spec_of
from models import Algorithm, BoolConst, ClusterStats, Heuristics, RunStats, ValidReactionSet
from services.abstraction import assemble
from services.emitter import emit_boolean_spec, emit_stats, format_formula, format_literal
from services.literals import collect_literals, substitute
from services.spec_parser import parse_boolean_spec, parse_spec

SKELETON = "G ((s0 -> X s1) & (!s0 -> s2))"
D0_BODY = "((((s0 & !s1) & !s2) | ((s0 & s1) & !s2)) | ((s0 & !s1) & s2))"
D1_BODY = "(((!s0 & s1) & !s2) | ((!s0 & !s1) & s2))"


def _literal_texts(lines: str) -> list[str]:
    spec = parse_spec("theory LRA\nenv a:Real, b:Real, x:Real\nsys y:Real\n" + lines)
    return [format_literal(entry.literal) for entry in collect_literals(spec).entries]


def test_terms_use_minimal_parentheses():
    assert _literal_texts(
        "lit 1 : y > x - (x - 1)\n"
        "lit 2 : a > b - b / 10\n"
        "lit 3 : (a + b) * 2 < y\n"
        "lit 4 : y > -2\n"
        "lit 5 : y <= 0.8 * 1\n"
        "lit 6 : all(y >= 0, y != 4)\n"
    ) == ["y > x - (x - 1)", "a > b - b / 10", "(a + b) * 2 < y", "y > -2", "y <= 4/5", "all(y >= 0, y != 4)"]


def test_two_reaction_document(running_lia):
    table, skeleton = running_lia
    vr = ValidReactionSet(8, RUNNING_LIA_REGIONS[:2])
    text = emit_boolean_spec(boolean_spec_of(skeleton, table, vr))

    assumption = "((d0 <-> !d1) & (d0 | d1))"
    extra = f"((d0 -> {D0_BODY}) & (d1 -> {D1_BODY}))"
    assert text == (
        ".inputs d0 d1\n"
        ".outputs s0 s1 s2\n"
        '.map s0 "x < 2"\n'
        '.map s1 "y > 1"\n'
        '.map s2 "y < x"\n'
        f"spec: ({SKELETON} & G ({assumption} -> {extra}))\n"
    )


def test_round_trip_is_a_fixed_point(running_lia):
    table, skeleton = running_lia
    spec = boolean_spec_of(skeleton, table, ValidReactionSet(8, list(RUNNING_LIA_REGIONS)))
    text = emit_boolean_spec(spec)
    parsed = parse_boolean_spec(text)
    assert parsed == spec
    assert emit_boolean_spec(parsed) == text


def test_zero_literals_reproduce_skeleton():
    spec = parse_spec("theory LIA\nenv x:Int\nspec: G true")
    table = collect_literals(spec)
    boolean = assemble(substitute(spec, table), table, [])
    assert boolean.extra == BoolConst(True)
    text = emit_boolean_spec(boolean)
    assert text == ".inputs\n.outputs\nspec: G true\n"
    assert parse_boolean_spec(text) == boolean


def test_formula_operators():
    spec = parse_boolean_spec(".inputs a\n.outputs b\nspec: G (a U b) & F !b | (a R X b) <-> b\n")
    assert format_formula(spec.formula) == "(((G (a U b) & F !b) | (a R X b)) <-> b)"


def test_stats_keys_in_order():
    stats = RunStats(
        algorithm=Algorithm.NESTED,
        clusters=[ClusterStats(vars=2, lits=3, outer_queries=5, valid_reactions=3)],
        outer_queries=5,
        heuristics=Heuristics(),
    )
    record = json.loads(emit_stats(stats))
    assert list(record) == [
        "algorithm", "clusters", "outer_queries", "inner_queries", "smt_ms", "wall_ms", "valid_reactions",
        "heuristics", "seed",
    ]
    assert record["algorithm"] == "nested"
    assert record["heuristics"] == {"mxi": 10, "md": 2, "dc": 0, "acore": True}
    assert record["clusters"][0]["lits"] == 3


def test_stats_without_clusters():
    stats = RunStats(algorithm=Algorithm.BRUTE_FORCE, heuristics=Heuristics())
    assert json.loads(emit_stats(stats))["clusters"] == []
    assert emit_stats(stats).endswith("}\n")
