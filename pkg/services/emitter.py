import json

from models import (
    Add, Always, And, Atom, AtomConjunction, BoolConst, BooleanSpec, Const, Div, Eventually, Iff,
    Implies, LtlFormula, Mul, Neg, Next, Not, Or, Prop, Release, RunStats, Sub, Term, TheoryAtom,
    TheoryLiteral, Until, Var,
)

_BINARY_SYMBOLS = {And: "&", Or: "|", Implies: "->", Iff: "<->", Until: "U", Release: "R"}
_UNARY_SYMBOLS = {Next: "X ", Always: "G ", Eventually: "F "}

# Приоритет арифметики для минимальных скобок
_TERM_LEVEL = {Add: 1, Sub: 1, Mul: 2, Div: 2}
_TERM_SYMBOLS = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _const_text(value) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _term_level(term: Term) -> int:
    if isinstance(term, Neg):
        return 3
    if isinstance(term, Const):
        return 3 if _plain_const(term) else 2
    return _TERM_LEVEL.get(type(term), 4)


def _plain_const(term: Const) -> bool:
    return term.value.denominator == 1 and term.value >= 0


def format_term(term: Term) -> str:
    if isinstance(term, Var):
        return term.name
    if isinstance(term, Const):
        return _const_text(term.value)
    if isinstance(term, Neg):
        inner = format_term(term.operand)
        return f"-{inner}" if _term_level(term.operand) >= 3 else f"-({inner})"
    level = _TERM_LEVEL[type(term)]
    left = format_term(term.left)
    right = format_term(term.right)
    if _term_level(term.left) < level:
        left = f"({left})"
    if _term_level(term.right) <= level:
        right = f"({right})"
    return f"{left} {_TERM_SYMBOLS[type(term)]} {right}"


def format_literal(literal: TheoryLiteral) -> str:
    if isinstance(literal, AtomConjunction):
        return "all(" + ", ".join(format_literal(part) for part in literal.parts) + ")"
    return f"{format_term(literal.lhs)} {literal.relop.value} {format_term(literal.rhs)}"


def format_formula(formula: LtlFormula) -> str:
    # Бинарные операции и атомы теории всегда в скобках
    if isinstance(formula, BoolConst):
        return "true" if formula.value else "false"
    if isinstance(formula, Prop):
        return formula.name
    if isinstance(formula, TheoryAtom):
        if isinstance(formula.literal, Atom):
            return f"({format_literal(formula.literal)})"
        return format_literal(formula.literal)
    if isinstance(formula, Not):
        return "!" + format_formula(formula.operand)
    if type(formula) in _UNARY_SYMBOLS:
        return _UNARY_SYMBOLS[type(formula)] + format_formula(formula.operand)
    symbol = _BINARY_SYMBOLS[type(formula)]
    return f"({format_formula(formula.left)} {symbol} {format_formula(formula.right)})"


def emit_boolean_spec(spec: BooleanSpec) -> str:
    lines = [
        " ".join([".inputs", *spec.inputs]),
        " ".join([".outputs", *spec.outputs]),
    ]
    for name, text in spec.literal_map:
        lines.append(f".map {name} {json.dumps(text)}")
    lines.append(f"spec: {format_formula(spec.formula)}")
    return "\n".join(lines) + "\n"


def emit_stats(stats: RunStats) -> str:
    return stats.model_dump_json(indent=2) + "\n"
