import os
from dotenv import load_dotenv

load_dotenv()

# ===== RUNTIME =====
FQW_THREADS = int(os.getenv("FQW_THREADS", "1"))
FQW_SEED = int(os.getenv("FQW_SEED", "20240521"))
FQW_LOG_LEVEL = os.getenv("FQW_LOG_LEVEL", "WARNING")

# ===== WALK GROUP =====
FQW_GROUP_CAP = int(os.getenv("FQW_GROUP_CAP", "30"))
FQW_GROUP_TRIALS = int(os.getenv("FQW_GROUP_TRIALS", "5"))
FQW_GROUP_Z_LEVELS = 3

# ===== NUMERICS =====
FQW_QUAD_ABS_TOL = float(os.getenv("FQW_QUAD_ABS_TOL", "1e-12"))
FQW_QUAD_MAX_REFINEMENT = int(os.getenv("FQW_QUAD_MAX_REFINEMENT", "200"))
FQW_ROOT_TOL = float(os.getenv("FQW_ROOT_TOL", "1e-12"))
FQW_ZG_TOL = float(os.getenv("FQW_ZG_TOL", "1e-10"))

# ===== CRA =====
FQW_CRA_SERIES_ORDER = int(os.getenv("FQW_CRA_SERIES_ORDER", "40"))
FQW_CRA_WORD_TOL = float(os.getenv("FQW_CRA_WORD_TOL", "1e-14"))
FQW_CRA_NODES = int(os.getenv("FQW_CRA_NODES", "48"))
FQW_CRI_SLOT_CAP = int(os.getenv("FQW_CRI_SLOT_CAP", "1000000"))

# ===== SIMULATION =====
FQW_CTMC_WARMUP = float(os.getenv("FQW_CTMC_WARMUP", "0.2"))

DATA_DIR = os.getenv("FQW_DATA_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "data"))
