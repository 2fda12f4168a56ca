import re

VERSION = '1.0.0'

# Shot-noise variance of one quadrature in raw modulation units
N0 = 0.25

# Tolerance below which symplectic eigenvalues and G arguments are clamped
EPS_CLAMP = 1e-9

# Noise model names, in output order
MODEL_NAMES = ['trusted', 'untrusted', 'calibrated']

# Simulation defaults: 1550 nm fiber, InGaAs heterodyne receiver
DEFAULT_F_REC = 0.95
DEFAULT_ETA_B = 0.5
DEFAULT_NU_B = 0.01
DEFAULT_ATTENUATION_DB_PER_KM = 0.2
DEFAULT_XI_CONST = 0.01
DEFAULT_XI_SLOPE = 0.01

# Modulation-variance optimizer defaults
DEFAULT_V_MIN = 0.01
DEFAULT_V_MAX = 100.0
DEFAULT_GRID_SIZE = 200
MIN_GRID_SIZE = 16
DEFAULT_REFINE_ITERATIONS = 60
MIN_REFINE_ITERATIONS = 40
DEFAULT_REFINE_TOL = 1e-6
DEFAULT_WORKERS = 4

# Monte Carlo
MC_MIN_SAMPLES = 1000
MC_CHUNK_SIZE = 1 << 18
MC_RHO2_CAP = 1.0 - 1e-12
MC_ESTIMATOR = 'gaussian-correlation'

# Trace acquisition defaults: 125 MS/s scope, 500 MHz balanced receiver
DEFAULT_SAMPLING_RATE_HZ = 125e6
DEFAULT_BANDWIDTH_HZ = 500e6
DEFAULT_GAIN_V_PER_A = 5e3
DEFAULT_QUANTIZE_BITS = 12
DEFAULT_FULL_SCALE_SIGMAS = 5.0
DEFAULT_K_MAX = 100
DEFAULT_BINS = 200
STATS_CHUNK_SIZE = 1 << 20

# Trace file format
TRACE_MAGIC = '#cvqkd-trace v1'
TRACE_FORMATS = ['text', 'f64le']
SYNTHETIC_SOURCE = 'synthetic-ar1'

# Output
OUTPUT_FORMATS = ['csv', 'json']
SWEEP_COLUMNS = ['distance_km', 'model', 'optimal_va', 'i_ab', 'chi_be', 'rate_raw', 'rate']

# Config file syntax: "key = value", "#" starts a comment
CONFIG_LINE_RE = re.compile(r'^\s*(?P<key>[A-Za-z_][A-Za-z0-9_\-]*)\s*=\s*(?P<value>.*?)\s*$')
TRACE_META_RE = re.compile(r'^(?P<key>[A-Za-z_][A-Za-z0-9_]*)=(?P<value>.*)$')
RANGE_RE = re.compile(r'^\s*(?P<start>[^:]+):(?P<stop>[^:]+)(?::(?P<step>[^:]+))?\s*$')
SAMPLE_RE = re.compile(r'^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$')
SAMPLE_BYTES = b'0123456789+-.eE \t\r\n'
