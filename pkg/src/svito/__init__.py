"""Set-valued stochastic calculus: Hukuhara algebra, set-valued integrals,
the set-valued Itô formula and a Picard solver for interval BSDEs."""

import os as _os

_threads = _os.environ.get("SVITO_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .convex import Box, Interval, SupportSet, hausdorff_distance, hukuhara_diff, minkowski_sum  # noqa: E402

__version__ = "0.1.0"
__all__ = ["Box", "Interval", "SupportSet", "hausdorff_distance", "hukuhara_diff", "minkowski_sum"]
