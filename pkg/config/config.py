# config/config.py
import os

# ==== BASE DIRECTORY & PATHS ====
BASE_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
OUTPUT_DIR = os.getenv('QLANCZOS_OUTPUT_DIR', os.path.join(BASE_DIR, 'output'))
PLANS_DIR = os.path.join(BASE_DIR, 'data', 'plans')

# ==== MODEL DEFAULTS ====
DEFAULT_SITES = 3
DEFAULT_COUPLING = 0.6
DEFAULT_FIELD = 1.0
MAX_QUBITS = 10

# ==== QITE ====
DEFAULT_DTAU = 0.1
DEFAULT_STEPS = 30
DEFAULT_SVD_CUTOFF = 1e-8
DEFAULT_C_EXPANSION_ORDER = 1
MEASURED_SVD_CUTOFF = 1e-2  # noisy S matrices need a coarser cutoff

# ==== QLANCZOS ====
DEFAULT_KRYLOV_DIM = 2
DEFAULT_ACCEPT_DELTA = 0.8
DEFAULT_SCAN_STOP = 1.0
KRYLOV_FLOOR = 1e-6
TIE_TOLERANCE = 1e-10

# ==== NOISE ====
DEFAULT_SHOTS = 8192
DEFAULT_RUNS = 3
DEFAULT_SEED = 2021
RICHARDSON_SCALES = (1, 2)

# ==== PIPELINE ====
DEDUPE_FIDELITY = 0.99
RANK_TOLERANCE = 0.1
GROUP_TOL_EXACT = 1e-6
GROUP_TOL_NOISY = 0.15
DEFLATION_WEIGHT = 10.0
LOWDIN_FLOOR = 1e-8
REALNESS_TOLERANCE = 1e-8

# ==== ORACLE ====
JACOBI_TOLERANCE = 1e-12
JACOBI_MAX_SWEEPS = 100
DEGENERACY_TOLERANCE = 1e-9

# ==== CSV ====
CSV_FLOAT_FORMAT = "%.17g"

# ==== LOGGING ====
LOGGING_LEVEL = os.getenv('QLANCZOS_LOG_LEVEL', "INFO")
