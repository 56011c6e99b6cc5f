"""Default limits, bounds and exit codes.

Budgets count machine steps, never wall-clock time, so every verdict is
reproducible from its inputs.
"""

# =============================================================================
# EVALUATION
# =============================================================================

# Ghost-field unfoldings allowed while evaluating one expression
DEFAULT_GHOST_FUEL = 10_000

# =============================================================================
# STEP BUDGETS
# =============================================================================

# `run`: unscoped execution of a whole program
DEFAULT_RUN_BUDGET = 1_000_000

# `monitor`: per dynamic obligation (one conjunct, one instantiation)
DEFAULT_MONITOR_BUDGET = 100_000

# `fuzz`: per attack candidate
DEFAULT_FUZZ_BUDGET = 10_000

# =============================================================================
# INSTANTIATION AND SEARCH
# =============================================================================

# Upper bound on binder instantiation tuples tried per invariant
DEFAULT_INSTANTIATION_CAP = 256

# Integer literals offered to generated attackers (plus scalars found in the seed state)
ATTACK_INT_LITERALS = (0, 1, 1000)

# Attack bounds used when the CLI is given none
DEFAULT_MAX_STMTS = 3
DEFAULT_MAX_OBJECTS = 1
DEFAULT_MAX_DEPTH = 1
DEFAULT_MAX_CALLBACK_STMTS = 1
DEFAULT_EXTERNAL_CLASSES = 1

# =============================================================================
# LOGIC
# =============================================================================

# Per-query z3 timeout
DEFAULT_SOLVER_TIMEOUT_MS = 5_000

# =============================================================================
# EXIT CODES
# =============================================================================

EXIT_OK = 0
EXIT_FAILED = 1  # a Violated verdict, an open obligation, a counterexample
EXIT_STUCK = 2
EXIT_BUDGET = 3
EXIT_USAGE = 64
EXIT_DATA = 65  # malformed input file
