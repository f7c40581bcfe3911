"""Physical constants (CODATA 2018, exact in the revised SI)."""

from scipy import constants as _c

HBAR = _c.hbar  # J s
K_B = _c.k  # J / K

DEFAULT_TAIL_TOL = 1e-10
MIN_CUTOFF_DIM = 16
