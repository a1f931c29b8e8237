# Коды выхода CLI: 2 разбор, 3 решатель, 4 ёмкость/фрагмент
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_CAPACITY = 4


class AbstractionError(Exception):
    exit_code = 1


class SpecSyntaxError(AbstractionError):
    exit_code = EXIT_PARSE

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class UndeclaredVariableError(SpecSyntaxError):
    pass


class SortError(SpecSyntaxError):
    pass


class UnknownTheoryError(SpecSyntaxError):
    pass


class GatewayError(AbstractionError):
    exit_code = EXIT_SOLVER


class SolverUnknownError(GatewayError):
    pass


class InvariantViolation(AbstractionError):
    exit_code = EXIT_SOLVER


class CapacityError(AbstractionError):
    exit_code = EXIT_CAPACITY


class FragmentError(AbstractionError):
    exit_code = EXIT_CAPACITY


class LatticeError(AbstractionError):
    exit_code = EXIT_CAPACITY
