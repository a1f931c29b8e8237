import asyncio
import os
import shlex
import shutil
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from importlib.util import find_spec

from config import QUERY_TIMEOUT_MS, SOLVER_CMD
from models import (
    Add, And, AtomConjunction, BoolConst, Const, Div, GatewayStats, LiteralTable, LtlFormula, Mul, Neg, Not,
    QuasiReaction, Relop, Sort, Sub, Term, Theory, TheoryAtom, Var, Verdict, VerdictStatus,
)
from services.abstraction import choice_formula
from utils.errors import GatewayError, InvariantViolation, SolverUnknownError
from utils.logger import logger

_ARITH = {Add: "+", Sub: "-", Mul: "*"}


# Запрос валидности квази-реакции в виде скрипта SMT-LIB2
@dataclass(frozen=True)
class ValidityQuery:
    quasi: QuasiReaction
    theory: Theory
    logic: str
    body: str

    @property
    def script(self) -> str:
        return f"(set-logic {self.logic})\n{self.body}(check-sat)\n"


def solver_logic(table: LiteralTable) -> str:
    has_int = any(v.sort is Sort.INT for v in table.variables.values())
    if table.theory is Theory.LIA:
        return "LIA"
    if table.theory is Theory.LRA:
        return "LIRA" if has_int else "LRA"
    return "ALL" if has_int else "NRA"


def _quote(name: str) -> str:
    return f"|{name}|"


class _Renderer:
    def __init__(self, table: LiteralTable):
        self.table = table
        self.theory = table.theory

    def _is_real_term(self, term: Term) -> bool:
        if self.theory is Theory.LIA:
            return False
        if isinstance(term, Var):
            return self.table.variables[term.name].sort is Sort.REAL
        if isinstance(term, Const):
            return term.value.denominator != 1
        if isinstance(term, Neg):
            return self._is_real_term(term.operand)
        if isinstance(term, Div):
            return True
        return self._is_real_term(term.left) or self._is_real_term(term.right)

    def const(self, value: Fraction, real: bool) -> str:
        if real:
            text = f"{abs(value.numerator)}.0"
            if value.denominator != 1:
                text = f"(/ {text} {value.denominator}.0)"
        else:
            text = str(abs(value.numerator))
        return f"(- {text})" if value < 0 else text

    def term(self, term: Term, real: bool, rename: dict[str, str]) -> str:
        if isinstance(term, Var):
            name = _quote(rename.get(term.name, term.name))
            if real and self.table.variables[term.name].sort is Sort.INT:
                return f"(to_real {name})"
            return name
        if isinstance(term, Const):
            return self.const(term.value, real)
        if isinstance(term, Neg):
            return f"(- {self.term(term.operand, real, rename)})"
        left = self.term(term.left, real, rename)
        right = self.term(term.right, real, rename)
        if isinstance(term, Div):
            return f"({'/' if real else 'div'} {left} {right})"
        return f"({_ARITH[type(term)]} {left} {right})"

    def literal(self, literal, rename: dict[str, str]) -> str:
        if isinstance(literal, AtomConjunction):
            return "(and " + " ".join(self.literal(part, rename) for part in literal.parts) + ")"
        real = self._is_real_term(literal.lhs) or self._is_real_term(literal.rhs)
        lhs = self.term(literal.lhs, real, rename)
        rhs = self.term(literal.rhs, real, rename)
        if literal.relop is Relop.NE:
            return f"(distinct {lhs} {rhs})"
        return f"({literal.relop.value} {lhs} {rhs})"

    def formula(self, formula: LtlFormula, rename: dict[str, str]) -> str:
        if isinstance(formula, BoolConst):
            return "true" if formula.value else "false"
        if isinstance(formula, TheoryAtom):
            return self.literal(formula.literal, rename)
        if isinstance(formula, Not):
            return f"(not {self.formula(formula.operand, rename)})"
        if isinstance(formula, And):
            return f"(and {self.formula(formula.left, rename)} {self.formula(formula.right, rename)})"
        raise InvariantViolation(f"unexpected node {type(formula).__name__} in a choice formula")


def _smt_sort(table: LiteralTable, name: str) -> str:
    if table.theory is Theory.LIA:
        return "Int"
    return table.variables[name].sort.value


def build_query(quasi: QuasiReaction, table: LiteralTable) -> ValidityQuery:
    # exists x. /\_{c in P} f(c)(x, y_c) /\ /\_{c in A} forall y. !f(c)(x, y)
    width = 1 << len(table)
    if (quasi.potentials | quasi.antipotentials) >> width:
        raise InvariantViolation(f"quasi-reaction {quasi.key} out of range for {len(table)} literals")

    renderer = _Renderer(table)
    env = [v.name for v in table.env_variables()]
    system = [v.name for v in table.sys_variables()]
    lines = [f"(declare-const {_quote(name)} {_smt_sort(table, name)})" for name in env]

    for choice in quasi.potential_choices():
        rename = {name: f"{name}@{choice}" for name in system}
        for name in system:
            lines.append(f"(declare-const {_quote(rename[name])} {_smt_sort(table, name)})")
        lines.append(f"(assert {renderer.formula(choice_formula(choice, table), rename)})")

    bound = " ".join(f"({_quote(name)} {_smt_sort(table, name)})" for name in system)
    for choice in quasi.antipotential_choices():
        negated = f"(not {renderer.formula(choice_formula(choice, table), {})})"
        lines.append(f"(assert (forall ({bound}) {negated}))" if system else f"(assert {negated})")

    body = "".join(line + "\n" for line in lines)
    return ValidityQuery(quasi, table.theory, solver_logic(table), body)


def resolve_solver(command: str) -> list[str]:
    # Сначала PATH, затем бинарник из пакета z3-solver
    argv = shlex.split(command)
    if not argv:
        raise GatewayError("empty solver command")
    found = shutil.which(argv[0])
    if found is None and os.path.basename(argv[0]) == "z3":
        candidates = [os.path.join(os.path.dirname(sys.executable), "z3")]
        spec = find_spec("z3")
        if spec is not None and spec.origin:
            candidates.append(os.path.join(os.path.dirname(spec.origin), "bin", "z3"))
        found = next((c for c in candidates if os.access(c, os.X_OK)), None)
    if found is None:
        raise GatewayError(f"solver executable '{argv[0]}' not found")
    return [found, *argv[1:]]


# Одна сессия решателя на таблицу литералов
class SmtGateway:
    def __init__(
        self,
        table: LiteralTable,
        solver_cmd: str = SOLVER_CMD,
        timeout_ms: int = QUERY_TIMEOUT_MS,
        use_cache: bool = True,
        abort_on_unknown: bool = True,
    ):
        self.table = table
        self.solver_cmd = solver_cmd
        self.timeout = timeout_ms / 1000
        self.use_cache = use_cache
        self.abort_on_unknown = abort_on_unknown
        self.stats = GatewayStats()
        self._cache: dict[tuple[int, int], Verdict] = {}
        self._process: asyncio.subprocess.Process | None = None
        self._renderer = _Renderer(table)
        self._logic = solver_logic(table)

    async def __aenter__(self) -> "SmtGateway":
        await self.start()
        return self

    async def __aexit__(self, *exc):
        await self.close()

    async def start(self):
        if self._process is not None:
            return
        argv = resolve_solver(self.solver_cmd)
        try:
            self._process = await asyncio.create_subprocess_exec(
                *argv,
                stdin=asyncio.subprocess.PIPE,
                stdout=asyncio.subprocess.PIPE,
                stderr=asyncio.subprocess.DEVNULL,
            )
        except OSError as e:
            raise GatewayError(f"cannot start solver: {e}") from e
        logger.debug(f"[GATEWAY] started {argv[0]} pid={self._process.pid}")

    async def close(self):
        if self._process is None:
            return
        process, self._process = self._process, None
        try:
            process.stdin.write(b"(exit)\n")
            await process.stdin.drain()
            await asyncio.wait_for(process.wait(), 5)
        except (OSError, asyncio.TimeoutError):
            process.kill()
            await process.wait()

    async def _write(self, text: str):
        try:
            self._process.stdin.write(text.encode())
            await self._process.stdin.drain()
        except (OSError, AttributeError) as e:
            raise GatewayError(f"solver pipe closed: {e}") from e

    async def _read_answer(self) -> str:
        while True:
            raw = await self._process.stdout.readline()
            if not raw:
                raise GatewayError("solver exited unexpectedly")
            line = raw.decode().strip()
            if line in ("sat", "unsat", "unknown"):
                return line
            if line.startswith("(error"):
                raise GatewayError(f"solver error: {line}")
            if line:
                raise GatewayError(f"malformed solver reply: {line}")

    async def _run(self, body: str) -> tuple[str, float]:
        await self.start()
        started = time.perf_counter()
        # Свежий контекст на каждый запрос, без push/pop
        await self._write(f"(reset)\n(set-logic {self._logic})\n{body}(check-sat)\n")
        try:
            answer = await asyncio.wait_for(self._read_answer(), self.timeout)
        except asyncio.TimeoutError:
            # Сессия после таймаута не восстанавливается
            self._process.kill()
            await self._process.wait()
            self._process = None
            answer = "unknown"
        elapsed = (time.perf_counter() - started) * 1000
        self.stats.solver_ms += elapsed
        return answer, elapsed

    async def check(self, quasi: QuasiReaction, tag: str = "outer") -> Verdict:
        # Кэш по (P, A)
        if self.use_cache and quasi.key in self._cache:
            self.stats.cache_hits += 1
            return self._cache[quasi.key]

        query = build_query(quasi, self.table)
        answer, elapsed = await self._run(query.body)
        if tag == "inner":
            self.stats.inner_queries += 1
        else:
            self.stats.outer_queries += 1

        if answer == "unknown":
            if self.abort_on_unknown:
                raise SolverUnknownError(f"solver returned unknown for quasi-reaction {quasi.key}")
            logger.warning(f"[GATEWAY] unknown for {quasi.key}, counted as valid")
            verdict = Verdict(VerdictStatus.VALID, elapsed)
        else:
            status = VerdictStatus.VALID if answer == "sat" else VerdictStatus.INVALID
            verdict = Verdict(status, elapsed)
        logger.debug(f"[GATEWAY] {tag} P={quasi.potentials:#x} A={quasi.antipotentials:#x} -> {verdict.status.value}")
        if self.use_cache:
            self._cache[quasi.key] = verdict
        return verdict

    async def probe_choice(self, choice: int, env_values: dict[str, Fraction]) -> bool:
        env = self.table.env_variables()
        system = [v.name for v in self.table.sys_variables()]
        lines = []
        for var in env:
            sort = _smt_sort(self.table, var.name)
            value = self._renderer.const(Fraction(env_values[var.name]), sort == "Real")
            lines.append(f"(declare-const {_quote(var.name)} {sort})")
            lines.append(f"(assert (= {_quote(var.name)} {value}))")
        for name in system:
            lines.append(f"(declare-const {_quote(name)} {_smt_sort(self.table, name)})")
        lines.append(f"(assert {self._renderer.formula(choice_formula(choice, self.table), {})})")

        answer, _ = await self._run("".join(line + "\n" for line in lines))
        self.stats.probe_queries += 1
        if answer == "unknown":
            raise SolverUnknownError(f"solver returned unknown for probe of choice {choice}")
        return answer == "sat"
