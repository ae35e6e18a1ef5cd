"""Dense forests: construction, visibility estimates and Diophantine certificates."""
import warnings

__version__ = "0.1.0"

# numba probes an outdated TBB on import of parallel kernels and falls back on its own
warnings.filterwarnings("ignore", message="The TBB threading layer")
