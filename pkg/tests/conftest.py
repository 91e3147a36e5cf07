import os

# stacked small GEMMs run faster single-threaded, and pinning the thread count
# keeps every numeric result exactly reproducible; must happen before numpy
# spins up its thread pools (pytest imports this file before the test modules)
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")
