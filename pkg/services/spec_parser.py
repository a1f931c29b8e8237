import json
from dataclasses import is_dataclass
from fractions import Fraction

from lark import Lark, Transformer, Tree
from lark.exceptions import UnexpectedEOF, UnexpectedInput, VisitError

from models import (
    Add, Always, And, Atom, AtomConjunction, BoolConst, BooleanSpec, Const, Div, Eventually, Iff,
    Implies, LtlFormula, Mul, Neg, Next, Not, Or, Owner, Prop, Release, Relop, Sort, Sub, Theory,
    TheoryAtom, TheorySpec, Until, Var, Variable, conjoin,
)
from services.literals import atoms_in_order, check_literal_sorts, children_of
from utils.errors import SpecSyntaxError, SortError, UndeclaredVariableError, UnknownTheoryError
from utils.logger import logger

# Общая часть грамматики: временные и булевы операторы
# Приоритет: ! X G F > U R > & > | > -> > <->
_FORMULA_RULES = r"""
?formula: iff
?iff: imp
    | iff "<->" imp                 -> iff
?imp: disj
    | disj "->" imp                 -> implies
?disj: conj
    | disj "|" conj                 -> or_
?conj: temporal
    | conj "&" temporal             -> and_
?temporal: unary
    | unary "U" temporal            -> until
    | unary "R" temporal            -> release
?unary: primary
    | "!" unary                     -> not_
    | "X" unary                     -> next
    | "G" unary                     -> always
    | "F" unary                     -> eventually

NAME: /(?!(X|G|F|U|R|true|false|all|spec|lit|theory|env|sys)\b)[A-Za-z_][A-Za-z0-9_]*/
COMMENT: /#[^\n]*/
%import common.WS
%import common.ESCAPED_STRING
%ignore WS
%ignore COMMENT
"""

THEORY_GRAMMAR = r"""
start: header+ body

header: "theory" NAME               -> theory_decl
      | "env" decl ("," decl)*      -> env_decl
      | "sys" decl ("," decl)*      -> sys_decl
decl: NAME ":" NAME

body: "spec" ":" formula            -> spec_body
    | lit_line+                     -> lit_body
lit_line: "lit" INT ":" literal

?primary: "true"                    -> true
    | "false"                       -> false
    | NAME                          -> prop
    | literal                       -> theory_atom
    | "(" formula ")"

?literal: comparison
    | "all" "(" literal ("," literal)* ")" -> conjunction
comparison: term RELOP term

?term: product
    | term "+" product              -> add
    | term "-" product              -> sub
?product: factor
    | product "*" factor            -> mul
    | product "/" factor            -> div
?factor: power
    | "-" factor                    -> neg
?power: base
    | base "^" INT                  -> pow
?base: NUMBER                       -> number
    | NAME                          -> var
    | "(" term ")"

RELOP: "<=" | ">=" | "!=" | "<" | ">" | "="
NUMBER: /\d+(\.\d+)?/
INT: /\d+/
""" + _FORMULA_RULES

BOOLEAN_GRAMMAR = r"""
start: inputs outputs map_line* "spec" ":" formula

inputs: ".inputs" NAME*
outputs: ".outputs" NAME*
map_line: ".map" NAME ESCAPED_STRING

?primary: "true"                    -> true
    | "false"                       -> false
    | NAME                          -> prop
    | "(" formula ")"
""" + _FORMULA_RULES

_theory_parser = Lark(THEORY_GRAMMAR, parser="earley", propagate_positions=True)
_boolean_parser = Lark(BOOLEAN_GRAMMAR, parser="lalr")


def _fold(node):
    # Свёртка констант: дерево термов сравнивается после неё
    if isinstance(node, (Add, Sub, Mul, Div)) and isinstance(node.left, Const) and isinstance(node.right, Const):
        a, b = node.left.value, node.right.value
        if isinstance(node, Add):
            return Const(a + b)
        if isinstance(node, Sub):
            return Const(a - b)
        if isinstance(node, Mul):
            return Const(a * b)
        if b != 0:
            return Const(a / b)
    if isinstance(node, Neg) and isinstance(node.operand, Const):
        return Const(-node.operand.value)
    return node


class _FormulaBuilder(Transformer):
    def true(self, _):
        return BoolConst(True)

    def false(self, _):
        return BoolConst(False)

    def prop(self, children):
        return Prop(str(children[0]))

    def not_(self, children):
        return Not(children[0])

    def next(self, children):
        return Next(children[0])

    def always(self, children):
        return Always(children[0])

    def eventually(self, children):
        return Eventually(children[0])

    def until(self, children):
        return Until(children[0], children[1])

    def release(self, children):
        return Release(children[0], children[1])

    def and_(self, children):
        return And(children[0], children[1])

    def or_(self, children):
        return Or(children[0], children[1])

    def implies(self, children):
        return Implies(children[0], children[1])

    def iff(self, children):
        return Iff(children[0], children[1])


class _TheoryBuilder(_FormulaBuilder):
    def __init__(self, variables: dict[str, Variable]):
        super().__init__()
        self.variables = variables

    def prop(self, children):
        token = children[0]
        if token in self.variables:
            raise SpecSyntaxError(f"variable '{token}' used as a formula", token.line, token.column)
        raise SpecSyntaxError(
            f"proposition '{token}' is not allowed in a theory specification", token.line, token.column
        )

    def theory_atom(self, children):
        return TheoryAtom(children[0])

    def comparison(self, children):
        lhs, relop, rhs = children
        return Atom(lhs, Relop(str(relop)), rhs)

    def conjunction(self, children):
        return AtomConjunction(tuple(children))

    def number(self, children):
        return Const(Fraction(str(children[0])))

    def var(self, children):
        token = children[0]
        if token not in self.variables:
            raise UndeclaredVariableError(f"undeclared variable '{token}'", token.line, token.column)
        return Var(str(token))

    def add(self, children):
        return _fold(Add(children[0], children[1]))

    def sub(self, children):
        return _fold(Sub(children[0], children[1]))

    def mul(self, children):
        return _fold(Mul(children[0], children[1]))

    def div(self, children):
        return _fold(Div(children[0], children[1]))

    def neg(self, children):
        return _fold(Neg(children[0]))

    def pow(self, children):
        base, exponent = children[0], int(children[1])
        result = Const(Fraction(1))
        for _ in range(exponent):
            result = base if result == Const(Fraction(1)) else _fold(Mul(result, base))
        return result


def _end_position(text: str) -> tuple[int, int]:
    lines = text.split("\n")
    return len(lines), len(lines[-1]) + 1


def _parse_tree(parser: Lark, text: str) -> Tree:
    try:
        return parser.parse(text)
    except UnexpectedEOF:
        line, column = _end_position(text)
        raise SpecSyntaxError("unexpected end of input", line, column)
    except UnexpectedInput as e:
        raise SpecSyntaxError("syntax error", e.line, e.column)


def _transform(builder: Transformer, tree):
    try:
        return builder.transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, SpecSyntaxError):
            raise e.orig_exc
        raise


def _declarations(tree: Tree, owner: Owner, variables: dict[str, Variable]):
    for decl in tree.children:
        name, sort = decl.children
        if name in variables:
            raise SpecSyntaxError(f"variable '{name}' declared twice", name.line, name.column)
        if str(sort) not in ("Int", "Real"):
            raise SortError(f"unknown sort '{sort}'", sort.line, sort.column)
        variables[str(name)] = Variable(str(name), Sort(str(sort)), owner)


def parse_spec(text: str) -> TheorySpec:
    tree = _parse_tree(_theory_parser, text)
    theory = None
    variables: dict[str, Variable] = {}
    body = None
    for child in tree.children:
        if child.data == "theory_decl":
            tag = child.children[0]
            if theory is not None:
                raise SpecSyntaxError("theory declared twice", tag.line, tag.column)
            if str(tag) not in Theory.__members__:
                raise UnknownTheoryError(f"unknown theory tag '{tag}'", tag.line, tag.column)
            theory = Theory(str(tag))
        elif child.data == "env_decl":
            _declarations(child, Owner.ENVIRONMENT, variables)
        elif child.data == "sys_decl":
            _declarations(child, Owner.SYSTEM, variables)
        else:
            body = child
    if theory is None:
        raise UnknownTheoryError("missing theory declaration", 1, 1)
    if not variables:
        raise SpecSyntaxError("no variables declared", 1, 1)

    builder = _TheoryBuilder(variables)
    if body.data == "spec_body":
        formula = _transform(builder, body.children[0])
        spec = TheorySpec(theory, tuple(variables.values()), formula)
    else:
        literals, names = [], []
        for line in body.children:
            index, literal = line.children
            literals.append(_transform(builder, literal))
            names.append(f"l_{index}")
        # Синтетическая формула G(/\ (l_i | !l_i)) для списков литералов
        formula = Always(conjoin([Or(TheoryAtom(l), Not(TheoryAtom(l))) for l in literals]))
        spec = TheorySpec(theory, tuple(variables.values()), formula, True, tuple(names))

    _check_sorts(spec.formula, theory, variables)
    logger.debug(f"[PARSE] theory={theory.value} variables={len(variables)} literal_mode={spec.literal_mode}")
    return spec


def _check_sorts(formula: LtlFormula, theory: Theory, variables: dict[str, Variable]):
    for literal in atoms_in_order(formula):
        check_literal_sorts(literal, theory, variables)


def parse_boolean_spec(text: str) -> BooleanSpec:
    # Документ в формате emit_boolean_spec
    tree = _parse_tree(_boolean_parser, text)
    inputs_tree, outputs_tree, *rest = tree.children
    inputs = tuple(str(t) for t in inputs_tree.children)
    outputs = tuple(str(t) for t in outputs_tree.children)
    literal_map = tuple(
        (str(line.children[0]), json.loads(line.children[1])) for line in rest[:-1]
    )
    formula = _transform(_FormulaBuilder(), rest[-1])

    declared = set(inputs) | set(outputs)
    undeclared = sorted(_propositions(formula) - declared)
    if undeclared:
        raise UndeclaredVariableError(f"undeclared propositions: {', '.join(undeclared)}")

    # phi' & G(A_B -> phi_extra), если есть входы-решения
    if inputs and isinstance(formula, And) and isinstance(formula.right, Always) \
            and isinstance(formula.right.operand, Implies):
        guard = formula.right.operand
        return BooleanSpec(formula.left, guard.right, guard.left, inputs, outputs, literal_map)
    return BooleanSpec(formula, BoolConst(True), BoolConst(True), inputs, outputs, literal_map)


def _propositions(formula: LtlFormula) -> set[str]:
    if isinstance(formula, Prop):
        return {formula.name}
    names = set()
    for child in children_of(formula):
        if is_dataclass(child):
            names |= _propositions(child)
    return names
