import os

def _levels(value):
  return tuple(int(x) for x in str(value).split(",") if x.strip())

DEFAULT_TOL = float(os.environ.get("FREESPEC_TOL", 1e-8))
DEFAULT_SEED = int(os.environ.get("FREESPEC_SEED", 0))
DEFAULT_BUDGET = int(os.environ.get("FREESPEC_BUDGET", 500))
DEFAULT_LEVELS = _levels(os.environ.get("FREESPEC_LEVELS", "1,2,3"))
DEFAULT_PARALLEL = int(os.environ.get("FREESPEC_PARALLEL", 1))

SCHEMA = "freespec/1"
DISC_MARGIN = 1e-12
