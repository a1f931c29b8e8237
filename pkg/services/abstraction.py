import math

from config import BF_QUERY_CAP, CHOICE_LITERAL_LIMIT
from models import (
    And, Atom, BooleanSpec, Encoding, Iff, Implies, LiteralTable, LtlFormula, Not, Or, Prop, QuasiReaction,
    TheoryAtom, ValidityOracle, ValidReactionSet, bit_members, conjoin, disjoin,
)
from services.emitter import format_literal
from utils.errors import CapacityError, InvariantViolation, LatticeError
from utils.logger import logger


def enumerate_choices(n: int) -> range:
    if n > CHOICE_LITERAL_LIMIT:
        raise CapacityError(f"{n} literals exceed the choice limit {CHOICE_LITERAL_LIMIT}")
    return range(1 << n)


def choice_formula(choice: int, table: LiteralTable) -> LtlFormula:
    # f(c): литералы c утверждаются, остальные отрицаются
    parts = []
    for i, entry in enumerate(table.entries):
        literal = entry.literal
        if choice >> i & 1:
            parts.append(TheoryAtom(literal))
        elif isinstance(literal, Atom):
            parts.append(TheoryAtom(literal.negated()))
        else:
            parts.append(Not(TheoryAtom(literal)))
    return conjoin(parts)


def meet(q: QuasiReaction, r: QuasiReaction) -> QuasiReaction:
    return QuasiReaction(q.potentials & r.potentials, q.antipotentials & r.antipotentials)


def join(q: QuasiReaction, r: QuasiReaction) -> QuasiReaction:
    if q.potentials & r.antipotentials or r.potentials & q.antipotentials:
        raise LatticeError("quasi-reactions have no common upper reaction")
    return QuasiReaction(q.potentials | r.potentials, q.antipotentials | r.antipotentials)


def leq(q: QuasiReaction, r: QuasiReaction) -> bool:
    return q.potentials & ~r.potentials == 0 and q.antipotentials & ~r.antipotentials == 0


def brute_force_queries(n: int) -> int:
    return 1 << (1 << n)


def admit(vr: ValidReactionSet, potentials: int):
    # В VR не бывает реакций с пустым P
    if potentials == 0:
        raise InvariantViolation("valid reaction with empty potential set")
    vr.add(potentials)


async def brute_force(table: LiteralTable, oracle: ValidityOracle, force: bool = False) -> ValidReactionSet:
    # Ровно 2^(2^n) запросов
    width = len(enumerate_choices(len(table)))
    total = brute_force_queries(len(table))
    if total > BF_QUERY_CAP and not force:
        raise CapacityError(f"brute force needs {total} queries, cap is {BF_QUERY_CAP} (use --force)")

    vr = ValidReactionSet(width)
    for potentials in range(total):
        verdict = await oracle.check(QuasiReaction.reaction(potentials, width), "outer")
        if verdict.valid:
            admit(vr, potentials)
    logger.info(f"[BF] {len(table)} literals, {total} queries, |VR|={len(vr)}")
    return vr


async def pointwise_reaction(table: LiteralTable, gateway, env_values: dict) -> int:
    potentials = 0
    for choice in enumerate_choices(len(table)):
        if await gateway.probe_choice(choice, env_values):
            potentials |= 1 << choice
    return potentials


def minterm(choice: int, table: LiteralTable) -> LtlFormula:
    return conjoin([
        Prop(table.proposition(i)) if choice >> i & 1 else Not(Prop(table.proposition(i)))
        for i in range(len(table))
    ])


def get_extra(vr: ValidReactionSet, table: LiteralTable, decisions: list[LtlFormula] | None = None) -> LtlFormula:
    # /\ (e_k -> \/ минтермы P_k) в порядке VR
    if len(table) and not len(vr):
        raise InvariantViolation("empty VR for a non-empty literal table")
    if decisions is None:
        decisions = [Prop(f"d{k}") for k in range(len(vr))]
    parts = []
    for decision, potentials in zip(decisions, vr):
        body = disjoin([minterm(c, table) for c in bit_members(potentials)])
        parts.append(Implies(decision, body))
    return conjoin(parts)


def exactly_one(names: list[str]) -> LtlFormula:
    props = [Prop(name) for name in names]
    if len(props) == 1:
        return props[0]
    if len(props) == 2:
        return And(Iff(props[0], Not(props[1])), Or(props[0], props[1]))
    exclusions = [Not(And(props[i], props[j])) for i in range(len(props)) for j in range(i + 1, len(props))]
    return And(disjoin(props), conjoin(exclusions))


def _code(value: int, names: list[str]) -> LtlFormula:
    return conjoin([Prop(name) if value >> i & 1 else Not(Prop(name)) for i, name in enumerate(names)])


def _decisions(count: int, encoding: Encoding, prefix: str) -> tuple[list[str], list[LtlFormula], LtlFormula]:
    if encoding is Encoding.ONEHOT:
        names = [f"{prefix}{i}" for i in range(count)]
        return names, [Prop(name) for name in names], exactly_one(names)
    width = max(1, math.ceil(math.log2(count)))
    names = [f"{prefix}{i}" for i in range(width)]
    unused = [Not(_code(value, names)) for value in range(count, 1 << width)]
    return names, [_code(value, names) for value in range(count)], conjoin(unused)


def assemble(
    skeleton: LtlFormula,
    table: LiteralTable,
    clusters: list[tuple[LiteralTable, ValidReactionSet]],
    encoding: Encoding = Encoding.ONEHOT,
) -> BooleanSpec:
    # phi_B = phi' & G(A_B -> phi_extra), у каждого кластера свои решения
    outputs = tuple(table.proposition(i) for i in range(len(table)))
    literal_map = tuple((table.proposition(i), format_literal(e.literal)) for i, e in enumerate(table.entries))
    if not len(table):
        return BooleanSpec(skeleton, conjoin([]), conjoin([]), (), outputs, literal_map)

    inputs, assumptions, extras = [], [], []
    letter = "d" if encoding is Encoding.ONEHOT else "b"
    for k, (sub_table, vr) in enumerate(clusters):
        if not len(vr):
            raise InvariantViolation(f"empty VR for cluster {k}")
        prefix = f"{letter}{k}_" if len(clusters) > 1 else letter
        names, decisions, assumption = _decisions(len(vr), encoding, prefix)
        inputs.extend(names)
        assumptions.append(assumption)
        extras.append(get_extra(vr, sub_table, decisions))
    logger.debug(f"[ASSEMBLE] {len(clusters)} clusters, {len(inputs)} decision inputs ({encoding.value})")
    return BooleanSpec(skeleton, conjoin(extras), conjoin(assumptions), tuple(inputs), outputs, literal_map)
