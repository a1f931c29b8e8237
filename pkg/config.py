import os
from dotenv import load_dotenv

load_dotenv()

# Внешний SMT-решатель (SMT-LIB2 через stdin/stdout)
SOLVER_CMD = os.getenv("SOLVER_CMD", "z3 -in -smt2")
QUERY_TIMEOUT_MS = int(os.getenv("QUERY_TIMEOUT_MS", "60000"))

# Ограничения размера задачи
CHOICE_LITERAL_LIMIT = int(os.getenv("CHOICE_LITERAL_LIMIT", "16"))
BF_QUERY_CAP = int(os.getenv("BF_QUERY_CAP", "256"))
GAME_ATOM_CAP = int(os.getenv("GAME_ATOM_CAP", "24"))

# Бенчмарки
BENCH_REPS = int(os.getenv("BENCH_REPS", "5"))
BENCH_WORKERS = int(os.getenv("BENCH_WORKERS", "2"))

LOG_DIR = os.getenv("LOG_DIR", "logs")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE", "app.log")

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
BENCH_SETUPS_PATH = os.getenv("BENCH_SETUPS_PATH", os.path.join(BASE_DIR, "bench_setups.json"))
TEMPLATES_DIR = os.path.join(BASE_DIR, "templates")
