# models.py
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Protocol, Union

from pydantic import BaseModel, Field

from config import QUERY_TIMEOUT_MS, SOLVER_CMD


class Theory(str, Enum):
    LIA = "LIA"
    LRA = "LRA"
    NRA = "NRA"


class Sort(str, Enum):
    INT = "Int"
    REAL = "Real"


class Owner(str, Enum):
    ENVIRONMENT = "env"
    SYSTEM = "sys"


# Модель переменной теории
@dataclass(frozen=True)
class Variable:
    name: str
    sort: Sort
    owner: Owner


# Термы теории
@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Sub:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Neg:
    operand: "Term"


@dataclass(frozen=True)
class Mul:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Div:
    left: "Term"
    right: "Term"


Term = Union[Const, Var, Add, Sub, Neg, Mul, Div]


class Relop(str, Enum):
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    EQ = "="
    NE = "!="

    @property
    def negated(self) -> "Relop":
        return _RELOP_NEGATION[self]


_RELOP_NEGATION = {
    Relop.LT: Relop.GE,
    Relop.GE: Relop.LT,
    Relop.LE: Relop.GT,
    Relop.GT: Relop.LE,
    Relop.EQ: Relop.NE,
    Relop.NE: Relop.EQ,
}


# Модель атома: сравнение двух термов
@dataclass(frozen=True)
class Atom:
    lhs: Term
    relop: Relop
    rhs: Term

    def negated(self) -> "Atom":
        return Atom(self.lhs, self.relop.negated, self.rhs)


# Конъюнкция сравнений внутри одного литерала, например all(v0 >= 0, v0 <= 4)
@dataclass(frozen=True)
class AtomConjunction:
    parts: tuple["TheoryLiteral", ...]


TheoryLiteral = Union[Atom, AtomConjunction]


# Формулы LTL
@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class TheoryAtom:
    literal: TheoryLiteral


@dataclass(frozen=True)
class Prop:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "LtlFormula"


@dataclass(frozen=True)
class And:
    left: "LtlFormula"
    right: "LtlFormula"


@dataclass(frozen=True)
class Or:
    left: "LtlFormula"
    right: "LtlFormula"


@dataclass(frozen=True)
class Implies:
    left: "LtlFormula"
    right: "LtlFormula"


@dataclass(frozen=True)
class Iff:
    left: "LtlFormula"
    right: "LtlFormula"


@dataclass(frozen=True)
class Next:
    operand: "LtlFormula"


@dataclass(frozen=True)
class Until:
    left: "LtlFormula"
    right: "LtlFormula"


@dataclass(frozen=True)
class Release:
    left: "LtlFormula"
    right: "LtlFormula"


@dataclass(frozen=True)
class Eventually:
    operand: "LtlFormula"


@dataclass(frozen=True)
class Always:
    operand: "LtlFormula"


LtlFormula = Union[
    BoolConst, TheoryAtom, Prop, Not, And, Or, Implies, Iff, Next, Until, Release, Eventually, Always
]


def conjoin(parts: list[LtlFormula]) -> LtlFormula:
    # Левая вложенность; пустая конъюнкция - true
    if not parts:
        return BoolConst(True)
    result = parts[0]
    for part in parts[1:]:
        result = And(result, part)
    return result


def disjoin(parts: list[LtlFormula]) -> LtlFormula:
    if not parts:
        return BoolConst(False)
    result = parts[0]
    for part in parts[1:]:
        result = Or(result, part)
    return result


# Модель спецификации LTL_T
@dataclass(frozen=True)
class TheorySpec:
    theory: Theory
    variables: tuple[Variable, ...]
    formula: LtlFormula
    literal_mode: bool = False
    literal_names: tuple[str, ...] = ()

    def variable(self, name: str) -> Variable:
        for var in self.variables:
            if var.name == name:
                return var
        raise KeyError(name)


@dataclass(frozen=True)
class LiteralEntry:
    literal: TheoryLiteral
    variables: frozenset[str]
    owners: frozenset[Owner]


# Таблица литералов: индекс i <-> булева переменная s_i
@dataclass
class LiteralTable:
    theory: Theory
    variables: dict[str, Variable]
    entries: list[LiteralEntry] = field(default_factory=list)
    ids: list[int] = field(default_factory=list)
    _index: dict[Atom | AtomConjunction, int] = field(default_factory=dict, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, literal: TheoryLiteral) -> int | None:
        return self._index.get(literal)

    def append(self, entry: LiteralEntry) -> int:
        position = len(self.entries)
        self.entries.append(entry)
        self.ids.append(position)
        self._index[entry.literal] = position
        return position

    def proposition(self, position: int) -> str:
        return f"s{self.ids[position]}"

    def restrict(self, positions: tuple[int, ...]) -> "LiteralTable":
        sub = LiteralTable(self.theory, self.variables)
        for position in positions:
            entry = self.entries[position]
            sub._index[entry.literal] = len(sub.entries)
            sub.entries.append(entry)
            sub.ids.append(self.ids[position])
        return sub

    def env_variables(self) -> list[Variable]:
        names = sorted({name for entry in self.entries for name in entry.variables})
        return [self.variables[n] for n in names if self.variables[n].owner is Owner.ENVIRONMENT]

    def sys_variables(self) -> list[Variable]:
        names = sorted({name for entry in self.entries for name in entry.variables})
        return [self.variables[n] for n in names if self.variables[n].owner is Owner.SYSTEM]


@dataclass(frozen=True)
class Cluster:
    literals: tuple[int, ...]
    variables: frozenset[str]

    @property
    def size(self) -> tuple[int, int]:
        return len(self.variables), len(self.literals)


# Квази-реакция (P, A): битовые множества над выборами
@dataclass(frozen=True)
class QuasiReaction:
    potentials: int
    antipotentials: int

    def __post_init__(self):
        if self.potentials & self.antipotentials:
            raise ValueError("potentials and antipotentials overlap")

    @classmethod
    def reaction(cls, potentials: int, width: int) -> "QuasiReaction":
        return cls(potentials, ((1 << width) - 1) & ~potentials)

    @property
    def key(self) -> tuple[int, int]:
        return self.potentials, self.antipotentials

    def potential_choices(self) -> list[int]:
        return bit_members(self.potentials)

    def antipotential_choices(self) -> list[int]:
        return bit_members(self.antipotentials)


def bit_members(bits: int) -> list[int]:
    members = []
    index = 0
    while bits:
        if bits & 1:
            members.append(index)
        bits >>= 1
        index += 1
    return members


# Множество валидных реакций (VR); антипотенциалы - дополнение P
@dataclass
class ValidReactionSet:
    width: int
    entries: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def add(self, potentials: int) -> bool:
        if potentials in self.entries:
            return False
        self.entries.append(potentials)
        return True

    def minimal(self) -> list[int]:
        return [
            p for p in self.entries
            if not any(q != p and q & p == q for q in self.entries)
        ]

    def dominates(self, potentials: int) -> bool:
        return any(p & potentials == p for p in self.entries)


# Итоговая булева спецификация
@dataclass(frozen=True)
class BooleanSpec:
    skeleton: LtlFormula
    extra: LtlFormula
    assumption: LtlFormula
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    literal_map: tuple[tuple[str, str], ...] = ()

    @property
    def has_extra(self) -> bool:
        return self.extra != BoolConst(True) or self.assumption != BoolConst(True)

    @property
    def formula(self) -> LtlFormula:
        if not self.has_extra:
            return self.skeleton
        return And(self.skeleton, Always(Implies(self.assumption, self.extra)))


class VerdictStatus(str, Enum):
    VALID = "valid"
    INVALID = "invalid"
    UNKNOWN = "unknown"


# Ответ решателя на запрос валидности
@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    elapsed_ms: float = 0.0

    @property
    def valid(self) -> bool:
        return self.status is VerdictStatus.VALID


@dataclass
class GatewayStats:
    outer_queries: int = 0
    inner_queries: int = 0
    probe_queries: int = 0
    cache_hits: int = 0
    solver_ms: float = 0.0

    def merge(self, other: "GatewayStats") -> "GatewayStats":
        return GatewayStats(
            self.outer_queries + other.outer_queries,
            self.inner_queries + other.inner_queries,
            self.probe_queries + other.probe_queries,
            self.cache_hits + other.cache_hits,
            self.solver_ms + other.solver_ms,
        )


class Algorithm(str, Enum):
    BRUTE_FORCE = "bf"
    MODEL_LOOP = "sat"
    NESTED = "nested"


class Encoding(str, Enum):
    ONEHOT = "onehot"
    BINARY = "binary"


class Heuristics(BaseModel):
    mxi: int = Field(10, ge=0)
    md: int = Field(2, ge=1)
    dc: int = Field(0, ge=0)
    acore: bool = True

    def label(self) -> str:
        return f"{self.mxi}/{self.md}/{self.dc}/{'✓' if self.acore else '×'}"


class RunConfig(BaseModel):
    command: str = "abstract"
    input_path: str | None = None
    output_path: str | None = None
    algorithm: Algorithm = Algorithm.NESTED
    heuristics: Heuristics | None = None
    theory: Theory | None = None
    solver_cmd: str = SOLVER_CMD
    timeout_ms: int = Field(QUERY_TIMEOUT_MS, gt=0)
    seed: int = 0
    clustering: bool = True
    encoding: Encoding = Encoding.ONEHOT
    repetitions: int = Field(1, ge=1)
    stats_path: str | None = None
    report_path: str | None = None
    force: bool = False
    workers: int = Field(1, ge=1)
    abort_on_unknown: bool = True


class ClusterStats(BaseModel):
    vars: int
    lits: int
    outer_queries: int = 0
    inner_queries: int = 0
    cache_hits: int = 0
    valid_reactions: int = 0
    smt_ms: float = 0.0


class RunStats(BaseModel):
    algorithm: Algorithm
    clusters: list[ClusterStats] = []
    outer_queries: int = 0
    inner_queries: int = 0
    smt_ms: float = 0.0
    wall_ms: float = 0.0
    valid_reactions: int = 0
    heuristics: Heuristics
    seed: int = 0


class BenchRow(BaseModel):
    fixture: str
    theory: Theory | None = None
    algorithm: Algorithm
    setup: str
    clusters: list[tuple[int, int]] = []
    wall_ms: float = 0.0
    outer_queries: float = 0.0
    inner_queries: float = 0.0
    valid_reactions: float = 0.0
    minimal_reactions: float = 0.0
    brute_force_queries: int = 0
    ratio: float | None = None
    verdict: str = "n/a"
    error: str | None = None


class BenchReport(BaseModel):
    repetitions: int
    rows: list[BenchRow] = []


# Всё, что решает валидность квази-реакций одной таблицы
class ValidityOracle(Protocol):
    stats: GatewayStats

    async def check(self, quasi: QuasiReaction, tag: str = "outer") -> Verdict:
        ...
