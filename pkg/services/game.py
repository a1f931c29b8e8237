from dataclasses import dataclass, field

from config import GAME_ATOM_CAP
from models import (
    Always, And, BooleanSpec, BoolConst, Eventually, Iff, Implies, LtlFormula, Next, Not, Or, Prop, Release,
    Until,
)
from services.literals import children_of
from utils.errors import CapacityError, FragmentError
from utils.logger import logger


# Ограничение на пары (текущее состояние, следующее состояние)
@dataclass(frozen=True)
class PairConstraint:
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    predicate: LtlFormula

    @property
    def atoms(self) -> tuple[str, ...]:
        return self.inputs + self.outputs


@dataclass
class GameVerdict:
    realizable: bool
    winning: frozenset[int]
    initial: dict[int, int] = field(default_factory=dict)
    strategy: dict[tuple[int, int], int] | None = None


def _conjuncts(formula: LtlFormula) -> list[LtlFormula]:
    if isinstance(formula, And):
        return _conjuncts(formula.left) + _conjuncts(formula.right)
    return [formula]


def _check_body(formula: LtlFormula, under_next: bool = False):
    if isinstance(formula, (Until, Release, Eventually, Always)):
        raise FragmentError(f"operator {type(formula).__name__} is outside the G/X fragment")
    if isinstance(formula, Next):
        if under_next:
            raise FragmentError("nested X is outside the G/X fragment")
        _check_body(formula.operand, True)
        return
    if isinstance(formula, (Prop, BoolConst)):
        return
    for child in children_of(formula):
        _check_body(child, under_next)


def _propositions(formula: LtlFormula, found: list[str]):
    if isinstance(formula, Prop):
        if formula.name not in found:
            found.append(formula.name)
        return
    for child in children_of(formula):
        if not isinstance(child, bool):
            _propositions(child, found)


def to_pair_form(spec: BooleanSpec) -> PairConstraint:
    # Верхние конъюнкции G(...) с глубиной X <= 1 сливаются в один предикат пары
    bodies = []
    for conjunct in _conjuncts(spec.formula):
        if isinstance(conjunct, BoolConst):
            if not conjunct.value:
                bodies.append(conjunct)
            continue
        if not isinstance(conjunct, Always):
            raise FragmentError(f"top-level conjunct {type(conjunct).__name__} is not G-guarded")
        _check_body(conjunct.operand)
        bodies.append(conjunct.operand)

    predicate = BoolConst(True)
    for body in bodies:
        predicate = body if predicate == BoolConst(True) else And(predicate, body)

    names: list[str] = []
    _propositions(predicate, names)
    declared = set(spec.inputs) | set(spec.outputs)
    extra = tuple(sorted(n for n in names if n not in declared))
    return PairConstraint(tuple(spec.inputs), tuple(spec.outputs) + extra, predicate)


def _split_atoms(formula: LtlFormula, current: list[str], upcoming: list[str], under_next: bool = False):
    if isinstance(formula, Prop):
        target = upcoming if under_next else current
        if formula.name not in target:
            target.append(formula.name)
        return
    if isinstance(formula, Next):
        _split_atoms(formula.operand, current, upcoming, True)
        return
    for child in children_of(formula):
        if not isinstance(child, bool):
            _split_atoms(child, current, upcoming, under_next)


def _evaluate(formula: LtlFormula, cur: int, nxt: int, cur_pos: dict, nxt_pos: dict, under_next=False) -> bool:
    if isinstance(formula, BoolConst):
        return formula.value
    if isinstance(formula, Prop):
        if under_next:
            return bool(nxt >> nxt_pos[formula.name] & 1)
        return bool(cur >> cur_pos[formula.name] & 1)
    if isinstance(formula, Next):
        return _evaluate(formula.operand, cur, nxt, cur_pos, nxt_pos, True)
    if isinstance(formula, Not):
        return not _evaluate(formula.operand, cur, nxt, cur_pos, nxt_pos, under_next)
    left = _evaluate(formula.left, cur, nxt, cur_pos, nxt_pos, under_next)
    right = _evaluate(formula.right, cur, nxt, cur_pos, nxt_pos, under_next)
    if isinstance(formula, And):
        return left and right
    if isinstance(formula, Or):
        return left or right
    if isinstance(formula, Implies):
        return not left or right
    if isinstance(formula, Iff):
        return left == right
    raise FragmentError(f"unexpected operator {type(formula).__name__}")


# Явная игра безопасности; входы в младших битах состояния
class SafetyGame:
    def __init__(self, constraint: PairConstraint, cap: int = GAME_ATOM_CAP):
        atoms = constraint.atoms
        if len(atoms) > cap:
            raise CapacityError(f"{len(atoms)} propositions exceed the game cap {cap}")
        self.constraint = constraint
        self.input_count = len(constraint.inputs)
        self.size = 1 << len(atoms)
        position = {name: i for i, name in enumerate(atoms)}

        current, upcoming = [], []
        _split_atoms(constraint.predicate, current, upcoming)
        self._cur_bits = [position[n] for n in current]
        self._nxt_bits = [position[n] for n in upcoming]
        cur_pos = {name: k for k, name in enumerate(current)}
        nxt_pos = {name: k for k, name in enumerate(upcoming)}

        # allowed[pc]: битовая маска допустимых проекций следующего состояния
        self.allowed = []
        for pc in range(1 << len(current)):
            mask = 0
            for pn in range(1 << len(upcoming)):
                if _evaluate(constraint.predicate, pc, pn, cur_pos, nxt_pos):
                    mask |= 1 << pn
            self.allowed.append(mask)
        self.cur_of = [self._project(v, self._cur_bits) for v in range(self.size)]
        self.nxt_of = [self._project(v, self._nxt_bits) for v in range(self.size)]

    @staticmethod
    def _project(state: int, bits: list[int]) -> int:
        value = 0
        for k, bit in enumerate(bits):
            value |= (state >> bit & 1) << k
        return value

    def input_of(self, state: int) -> int:
        return state & ((1 << self.input_count) - 1)

    def holds(self, state: int, successor: int) -> bool:
        return bool(self.allowed[self.cur_of[state]] >> self.nxt_of[successor] & 1)

    def predecessor(self, winning: frozenset[int]) -> frozenset[int]:
        # Состояния, где на любой вход есть ответ, остающийся в winning
        reach = [0] * (1 << self.input_count)
        for state in winning:
            reach[self.input_of(state)] |= 1 << self.nxt_of[state]
        good = [all(r & allowed for r in reach) for allowed in self.allowed]
        return frozenset(v for v in winning if good[self.cur_of[v]])

    def solve(self, with_strategy: bool = False) -> GameVerdict:
        winning = frozenset(range(self.size))
        rounds = 0
        while True:
            rounds += 1
            shrunk = self.predecessor(winning)
            if shrunk == winning:
                break
            winning = shrunk

        initial = {}
        for i0 in range(1 << self.input_count):
            answers = sorted(v for v in winning if self.input_of(v) == i0)
            if answers:
                initial[i0] = answers[0] >> self.input_count
        realizable = len(initial) == 1 << self.input_count
        logger.debug(f"[GAME] fixpoint after {rounds} rounds, |W|={len(winning)}, realizable={realizable}")

        strategy = None
        if with_strategy and realizable:
            strategy = {}
            for state in sorted(winning):
                for i in range(1 << self.input_count):
                    for o in range(1 << (len(self.constraint.atoms) - self.input_count)):
                        successor = i | o << self.input_count
                        if successor in winning and self.holds(state, successor):
                            strategy[(state, i)] = o
                            break
        return GameVerdict(realizable, winning, initial if realizable else {}, strategy)


def solve(constraint: PairConstraint, with_strategy: bool = False) -> GameVerdict:
    return SafetyGame(constraint).solve(with_strategy)
