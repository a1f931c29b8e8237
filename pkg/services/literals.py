from dataclasses import fields, is_dataclass

from models import (
    Atom, AtomConjunction, Cluster, Const, Div, LiteralEntry, LiteralTable, LtlFormula, Mul, Neg,
    Not, Prop, Sort, Term, Theory, TheoryAtom, TheoryLiteral, TheorySpec, Var, Variable,
)
from utils.errors import SortError
from utils.logger import logger


def term_variables(term: Term) -> frozenset[str]:
    if isinstance(term, Var):
        return frozenset({term.name})
    if isinstance(term, Const):
        return frozenset()
    if isinstance(term, Neg):
        return term_variables(term.operand)
    return term_variables(term.left) | term_variables(term.right)


def literal_variables(literal: TheoryLiteral) -> frozenset[str]:
    if isinstance(literal, AtomConjunction):
        names = frozenset()
        for part in literal.parts:
            names |= literal_variables(part)
        return names
    return term_variables(literal.lhs) | term_variables(literal.rhs)


def _check_term(term: Term, theory: Theory, variables: dict[str, Variable]):
    if isinstance(term, Var):
        if theory is Theory.LIA and variables[term.name].sort is Sort.REAL:
            raise SortError(f"real variable '{term.name}' under LIA")
        return
    if isinstance(term, Const):
        if theory is Theory.LIA and term.value.denominator != 1:
            raise SortError(f"non-integer constant {term.value} under LIA")
        return
    if isinstance(term, Neg):
        _check_term(term.operand, theory, variables)
        return
    _check_term(term.left, theory, variables)
    _check_term(term.right, theory, variables)
    if isinstance(term, Mul) and theory is not Theory.NRA \
            and term_variables(term.left) and term_variables(term.right):
        raise SortError(f"nonlinear product under {theory.value}")
    if isinstance(term, Div):
        if isinstance(term.right, Const) and term.right.value == 0:
            raise SortError("division by zero")
        if term_variables(term.right) and theory is not Theory.NRA:
            raise SortError(f"variable divisor under {theory.value}")


def check_literal_sorts(literal: TheoryLiteral, theory: Theory, variables: dict[str, Variable]):
    # Термы вне фрагмента теории отклоняются; Int повышается до Real в LRA/NRA
    if isinstance(literal, AtomConjunction):
        for part in literal.parts:
            check_literal_sorts(part, theory, variables)
        return
    _check_term(literal.lhs, theory, variables)
    _check_term(literal.rhs, theory, variables)


def canonicalize_atom(literal: TheoryLiteral, table: LiteralTable) -> tuple[int, bool]:
    # (индекс, знак); литерал добавляется, если нет ни его, ни дополнения
    index = table.lookup(literal)
    if index is not None:
        return index, True
    if isinstance(literal, Atom):
        index = table.lookup(literal.negated())
        if index is not None:
            return index, False
    names = literal_variables(literal)
    owners = frozenset(table.variables[name].owner for name in names)
    return table.append(LiteralEntry(literal, names, owners)), True


def children_of(node) -> list:
    return [getattr(node, f.name) for f in fields(node)]


def atoms_in_order(formula: LtlFormula):
    if isinstance(formula, TheoryAtom):
        yield formula.literal
        return
    for child in children_of(formula):
        if is_dataclass(child):
            yield from atoms_in_order(child)


def collect_literals(spec: TheorySpec) -> LiteralTable:
    variables = {v.name: v for v in spec.variables}
    table = LiteralTable(spec.theory, variables)
    for literal in atoms_in_order(spec.formula):
        check_literal_sorts(literal, spec.theory, variables)
        canonicalize_atom(literal, table)
    logger.debug(f"[LITERALS] collected {len(table)} literals")
    return table


def _rebuild(formula: LtlFormula, leaf):
    # Замена листьев с сохранением временной структуры
    if isinstance(formula, (TheoryAtom, Prop)):
        return leaf(formula)
    values = [_rebuild(c, leaf) if is_dataclass(c) else c for c in children_of(formula)]
    return type(formula)(*values)


def substitute(spec: TheorySpec, table: LiteralTable) -> LtlFormula:
    def leaf(node):
        if isinstance(node, Prop):
            return node
        index, positive = canonicalize_atom(node.literal, table)
        prop = Prop(table.proposition(index))
        return prop if positive else Not(prop)

    return _rebuild(spec.formula, leaf)


def restore_literals(formula: LtlFormula, table: LiteralTable) -> LtlFormula:
    # Обратная к substitute
    by_name = {table.proposition(i): entry.literal for i, entry in enumerate(table.entries)}

    def leaf(node):
        if isinstance(node, Prop) and node.name in by_name:
            return TheoryAtom(by_name[node.name])
        return node

    return _rebuild(formula, leaf)


def cluster_literals(table: LiteralTable) -> list[Cluster]:
    # Компоненты связности по общим переменным теории
    parent = list(range(len(table)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner_of: dict[str, int] = {}
    for i, entry in enumerate(table.entries):
        for name in sorted(entry.variables):
            if name in owner_of:
                a, b = find(owner_of[name]), find(i)
                if a != b:
                    parent[max(a, b)] = min(a, b)
            else:
                owner_of[name] = i

    groups: dict[int, list[int]] = {}
    for i in range(len(table)):
        groups.setdefault(find(i), []).append(i)

    clusters = []
    for members in groups.values():
        names = frozenset().union(*(table.entries[i].variables for i in members))
        clusters.append(Cluster(tuple(members), names))
    clusters.sort(key=lambda c: c.literals[0])
    logger.debug(f"[LITERALS] {len(clusters)} clusters: {[c.size for c in clusters]}")
    return clusters
