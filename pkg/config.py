"""Default configuration for dailyyield.

Can be overridden with config.py in instance folder.
"""

LOG_LEVEL = "INFO"  # Log level for the application
LOG_DIR = ""        # Directory for dated log files (log to stderr if empty)

# Herd simulation settings
SIM_COWS = 3000           # Number of simulated cows
SIM_SEED = 1              # Default random seed
SIM_Y720_MEAN = 12.0      # Mean yield (kg) accumulated over a 720 minute interval
SIM_Y720_SD = 2.0
SIM_K_MEAN = 0.8          # Mean curve shape (half-saturation in 12 hour units)
SIM_K_SD = 0.1
SIM_INTERVAL_MEAN = 12.0  # AM milking interval (hours)
SIM_INTERVAL_SD = 1.12
SIM_INTERVAL_LO = 8.0     # Truncation bounds for the AM milking interval (hours)
SIM_INTERVAL_HI = 16.0
SIM_PARAM_LO_SD_MULT = 3.0  # Curve parameters are truncated at mean +/- this many SDs
MILKING_NOISE_SD = 0.45   # Milking-to-milking variation (kg) added to each partial yield
SIMULATED_DIM = 150       # Constant days in milk written to simulated records

# Interval grid and factor tables
GRID = "8:16:0.5"     # LO:HI:WIDTH in hours, symmetric about 12 h
MIN_BIN_RECORDS = 5   # Bins with fewer records fall back to neighbours or session-wide moments

# Benchmark settings
BENCH_REPLICATES = 30  # Number of random train/test splits
BENCH_TRAIN = 2000     # Number of training cows per split
BENCH_WORKERS = 1      # Threads used for replicates

# File formats
CSV_PRECISION = 6       # Significant digits written to CSV files
MODEL_FILE_VERSION = 1  # Version written to (and required in) model files
