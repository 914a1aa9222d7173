"""Configuration from environment variables."""
import logging
import os
from dotenv import load_dotenv

load_dotenv()

# Server
HOST = os.getenv("HOST", "0.0.0.0")
PORT = int(os.getenv("PORT", "8000"))

# Database
DATABASE_URL = os.getenv("DATABASE_URL", "sqlite:///./packflow.db")
RECORD_RUNS = os.getenv("RECORD_RUNS", "false").lower() == "true"

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

# Geometry
BOUNDARY_EPS = float(os.getenv("BOUNDARY_EPS", "1e-12"))  # I in (1, 1+eps] is rejected
FLIP_TOL = float(os.getenv("FLIP_TOL", "1e-12"))  # relative to the local slack scale
FLIP_BUDGET_FACTOR = int(os.getenv("FLIP_BUDGET_FACTOR", "100"))  # flips allowed per edge
SEARCH_CAP = int(os.getenv("SEARCH_CAP", "20000"))  # flip-graph BFS states

# Flow
FLOW_METHOD = os.getenv("FLOW_METHOD", "newton")
EULER_STEP = float(os.getenv("EULER_STEP", "0.2"))
CURVATURE_TOL = float(os.getenv("CURVATURE_TOL", "1e-10"))
MAX_ITERS = int(os.getenv("MAX_ITERS", "200"))
ARMIJO_C = float(os.getenv("ARMIJO_C", "1e-4"))
MAX_HALVINGS = int(os.getenv("MAX_HALVINGS", "40"))


def setup_logging(level: str | None = None):
    """Configure the packflow loggers once."""
    logging.basicConfig(format="[%(name)s] %(message)s")
    logging.getLogger("packflow").setLevel((level or LOG_LEVEL).upper())
