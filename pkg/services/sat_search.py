import random
from dataclasses import dataclass, field

from pysat.solvers import Solver

from models import Heuristics, LiteralTable, QuasiReaction, ValidityOracle, ValidReactionSet, bit_members
from services.abstraction import admit, enumerate_choices
from utils.logger import logger

SAT_BACKEND = "m22"


def _seeded_phases(count: int, seed: int, bias: bool | None = None) -> list[int]:
    # Подсказки ветвления; bias фиксирует все фазы
    rng = random.Random(seed)
    phases = []
    for var in range(1, count + 1):
        positive = bias if bias is not None else rng.random() < 0.5
        phases.append(var if positive else -var)
    return phases


# Состояние внешнего цикла: psi над z_0..z_{|C|-1}
@dataclass
class OuterSearchState:
    width: int
    seed: int = 0
    vr: ValidReactionSet = field(init=False)
    invalid_count: int = 0
    inner_entries: int = 0
    clauses: list[tuple[str, list[int]]] = field(default_factory=list)

    def __post_init__(self):
        self.vr = ValidReactionSet(self.width)
        self.solver = Solver(name=SAT_BACKEND)
        self.add_clause("init", [c + 1 for c in range(self.width)])
        if self.seed:
            self.solver.set_phases(_seeded_phases(self.width, self.seed))

    def add_clause(self, reason: str, clause: list[int]):
        self.clauses.append((reason, clause))
        self.solver.add_clause(clause)

    def next_reaction(self) -> QuasiReaction | None:
        if not self.solver.solve():
            return None
        model = self.solver.get_model()
        potentials = 0
        for literal in model[:self.width]:
            if literal > 0:
                potentials |= 1 << (literal - 1)
        return QuasiReaction.reaction(potentials, self.width)

    def block_valid(self, reaction: QuasiReaction):
        # Реакции с большим P не дают системе больше
        self.add_clause("valid", [-(c + 1) for c in reaction.potential_choices()])

    def block_core(self, core: QuasiReaction, reason: str = "core"):
        clause = [-(c + 1) for c in core.potential_choices()] + [c + 1 for c in core.antipotential_choices()]
        self.add_clause(reason, clause)

    def close(self):
        self.solver.delete()


async def _invalid_branch(state: OuterSearchState, reaction: QuasiReaction, oracle: ValidityOracle):
    main_core = QuasiReaction(0, reaction.antipotentials)
    verdict = await oracle.check(main_core, "outer")
    if verdict.valid:
        state.block_core(reaction, "invalid")
    else:
        state.block_core(main_core, "antipotential-core")


async def _record_valid(state: OuterSearchState, reaction: QuasiReaction):
    admit(state.vr, reaction.potentials)
    state.block_valid(reaction)


async def model_loop(table: LiteralTable, oracle: ValidityOracle, seed: int = 0) -> ValidReactionSet:
    state = OuterSearchState(len(enumerate_choices(len(table))), seed)
    try:
        while (reaction := state.next_reaction()) is not None:
            verdict = await oracle.check(reaction, "outer")
            if verdict.valid:
                await _record_valid(state, reaction)
            else:
                await _invalid_branch(state, reaction, oracle)
    finally:
        state.close()
    logger.info(f"[OUTER] model loop done: {len(state.vr)} valid reactions, {len(state.clauses)} clauses")
    return state.vr


def current_fatigue(state: OuterSearchState, h: Heuristics) -> int:
    if h.dc > 0:
        return max(0, h.mxi - state.inner_entries // h.dc)
    return h.mxi


async def heuristic_gate(
    state: OuterSearchState, h: Heuristics, reaction: QuasiReaction, oracle: ValidityOracle
) -> tuple[bool, int]:
    # Вход на каждой Md-й невалидной модели, если осталась усталость и главное ядро невалидно
    fatigue = current_fatigue(state, h)
    if state.invalid_count % h.md != 0 or fatigue == 0:
        return False, fatigue
    if h.acore:
        verdict = await oracle.check(QuasiReaction(0, reaction.antipotentials), "outer")
        if verdict.valid:
            return False, fatigue
    return True, fatigue


async def nested_loop(
    table: LiteralTable, oracle: ValidityOracle, h: Heuristics, seed: int = 0
) -> ValidReactionSet:
    state = OuterSearchState(len(enumerate_choices(len(table))), seed)
    try:
        while (reaction := state.next_reaction()) is not None:
            verdict = await oracle.check(reaction, "outer")
            if verdict.valid:
                await _record_valid(state, reaction)
                continue

            enter, fatigue = await heuristic_gate(state, h, reaction, oracle)
            state.invalid_count += 1
            if not enter:
                await _invalid_branch(state, reaction, oracle)
                continue

            state.inner_entries += 1
            cores = await inner_loop(reaction, fatigue, oracle, seed)
            if h.acore:
                cores.append(QuasiReaction(0, reaction.antipotentials))
            for core in cores:
                state.block_core(core)
            logger.debug(f"[OUTER] inner loop #{state.inner_entries} fatigue={fatigue} cores={len(cores)}")
    finally:
        state.close()
    logger.info(
        f"[OUTER] nested loop done ({h.label()}): {len(state.vr)} valid reactions, "
        f"{state.inner_entries} inner loops"
    )
    return state.vr


def _masked(reaction: QuasiReaction, kept: int) -> QuasiReaction:
    return QuasiReaction(reaction.potentials & kept, reaction.antipotentials & kept)


# Состояние внутреннего цикла: w_i = выбор i сохранён
class InnerSearchState:
    def __init__(self, reaction: QuasiReaction, fatigue: int, seed: int = 0):
        self.reaction = reaction
        self.members = bit_members(reaction.potentials | reaction.antipotentials)
        self.full = reaction.potentials | reaction.antipotentials
        self.budget = fatigue
        self.cores: list[int] = []
        self.valid: list[int] = []
        self.solver = Solver(name=SAT_BACKEND)
        # Хотя бы один выбор замаскирован; пустая маска валидна тривиально
        self.solver.add_clause([-self._var(c) for c in self.members])
        self.solver.add_clause([self._var(c) for c in self.members])
        self.solver.set_phases(_seeded_phases(len(self.members), seed, bias=True))

    def _var(self, choice: int) -> int:
        return self.members.index(choice) + 1

    def known_invalid(self, kept: int) -> bool:
        return any(core & ~kept == 0 for core in self.cores)

    def known_valid(self, kept: int) -> bool:
        return kept == 0 or any(kept & ~valid == 0 for valid in self.valid)

    async def query(self, kept: int, oracle: ValidityOracle) -> bool:
        self.budget -= 1
        verdict = await oracle.check(_masked(self.reaction, kept), "inner")
        if verdict.valid:
            self.valid.append(kept)
            masked = [self._var(c) for c in self.members if not kept >> c & 1]
            self.solver.add_clause(masked)
        else:
            self.cores.append(kept)
            self.solver.add_clause([-self._var(c) for c in self.members if kept >> c & 1])
        return verdict.valid

    def deletion_order(self) -> list[int]:
        # Сначала антипотенциалы: ядра вида (P', 0) отсекают больше моделей psi
        return self.reaction.antipotential_choices() + self.reaction.potential_choices()

    async def try_drop(self, kept: int, dropped: int, oracle: ValidityOracle) -> int:
        candidate = kept & ~dropped
        if self.known_invalid(candidate):
            return candidate
        if self.known_valid(candidate):
            return kept
        return kept if await self.query(candidate, oracle) else candidate

    async def shrink(self, oracle: ValidityOracle) -> int:
        # Удаление половинными блоками; сохранённое множество всегда невалидно
        kept = self.full
        if self.reaction.potentials and self.reaction.antipotentials:
            kept = await self.try_drop(kept, self.reaction.antipotentials, oracle)
        order = [c for c in self.deletion_order() if kept >> c & 1]
        size = max(1, len(order) // 2)
        while self.budget > 0:
            i = 0
            while i < len(order) and self.budget > 0:
                chunk = order[i:i + size]
                dropped = sum(1 << c for c in chunk)
                smaller = await self.try_drop(kept, dropped, oracle)
                if smaller != kept:
                    kept = smaller
                    order = order[:i] + order[i + size:]
                else:
                    i += size
            if size == 1:
                break
            size = max(1, size // 2)
        return kept

    def next_seed(self) -> int | None:
        if not self.solver.solve():
            return None
        kept = 0
        for literal in self.solver.get_model()[:len(self.members)]:
            if literal > 0:
                kept |= 1 << self.members[literal - 1]
        return kept

    def minimal_cores(self) -> list[QuasiReaction]:
        cores = [
            core for core in dict.fromkeys(self.cores)
            if not any(other != core and other & ~core == 0 for other in self.cores)
        ]
        return [_masked(self.reaction, core) for core in cores]

    def close(self):
        self.solver.delete()


async def inner_loop(reaction: QuasiReaction, fatigue: int, oracle: ValidityOracle, seed: int = 0) -> list[QuasiReaction]:
    if fatigue <= 0:
        return [reaction]
    state = InnerSearchState(reaction, fatigue, seed)
    try:
        await state.shrink(oracle)

        # Поиск других ядер по семенам карты
        while state.budget > 0:
            candidate = state.next_seed()
            if candidate is None:
                break
            await state.query(candidate, oracle)

        cores = state.minimal_cores()
    finally:
        state.close()
    logger.debug(f"[INNER] {len(cores)} cores from P={reaction.potentials:#x} A={reaction.antipotentials:#x}")
    return cores or [reaction]
