"""Global numerical tolerances.

Defaults sit roughly 100x above double-precision epsilon. The validation
tolerance can be overridden with the ``ACL_TOL`` environment variable.
"""

import dataclasses
import os
from contextlib import contextmanager


@dataclasses.dataclass
class Tolerance:
    hermitian: float = 1e-10   # ||M - M^*|| accepted as Hermitian
    psd_clamp: float = 1e-10   # eigenvalues above -psd_clamp are clamped to 0
    psd_reject: float = 1e-8   # eigenvalues below -psd_reject raise NotPsd
    gap: float = 1e-8          # half-width of the forbidden band around 1/2
    isometry: float = 1e-12
    unitary: float = 1e-10
    validate: float = 1e-10    # POVM positivity / sum checks

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"tolerance {f.name} must be nonnegative")


def _from_env():
    tol = Tolerance()
    raw = os.environ.get("ACL_TOL")
    if raw:
        tol.validate = float(raw)
    return tol


TOL = _from_env()


@contextmanager
def tolerances(**overrides):
    """Temporarily override fields of the global :data:`TOL`."""
    saved = dataclasses.replace(TOL)
    try:
        for k, v in overrides.items():
            if not hasattr(TOL, k):
                raise AttributeError(k)
            setattr(TOL, k, float(v))
        TOL.__post_init__()
        yield TOL
    finally:
        for f in dataclasses.fields(saved):
            setattr(TOL, f.name, getattr(saved, f.name))
