"""Airy function Ai and its iterated primitives Ai(1,.), Ai(2,.).

Ai(1, z) = -int_z^{inf e^{i pi/6}} Ai(t) dt and Ai(2, z) = -int Ai(1, t) dt along
the same ray, so that d/dz Ai(j, z) = Ai(j-1, z) and both vanish in the
direction of decay. The evaluation kernel is compiled (Cython) when the
extension is available and pure Python otherwise; set the environment
variable ``COMPSTAB_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from ..errors import DivisionByZeroNear, QuadratureFailure
from . import _kernel_py

RATIO_GUARD = 1e-300
BACKEND = "python"
_kernel = _kernel_py
if os.environ.get("COMPSTAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel_c
    except ImportError:
        pass
    else:
        _kernel = _kernel_c
        BACKEND = "cython"

__all__ = ["airy_ai", "airy_primitives", "airy_scaled", "airy_ratio", "zeta", "BACKEND"]


def zeta(z):
    """(2/3) z^(3/2) on the principal branch."""
    z = np.asarray(z, dtype=complex)
    return (2.0 / 3.0) * z * np.sqrt(z)


def airy_scaled(z, mode=0):
    """Scaled values ``exp(zeta(z)) * (Ai, Ai', Ai(1,.), Ai(2,.))``.

    Returns an array of shape ``(4,) + z.shape``. ``mode`` is 0 for the
    automatic evaluator, 1 for the raw Maclaurin sum and 2 for the asymptotic
    branch (diagnostic use only).
    """
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise QuadratureFailure("non-finite Airy argument")
    out = _kernel.airy_scaled_array(z.ravel(), mode)
    if not np.all(np.isfinite(out)):
        raise QuadratureFailure("Airy evaluation produced non-finite values")
    return out.reshape((4,) + z.shape)


def _unscale(z, vals):
    with np.errstate(over="ignore", invalid="ignore"):
        return vals * np.exp(-zeta(z))


def airy_ai(z, derivative=False):
    """Ai(z), or Ai'(z) when ``derivative`` is true."""
    s = airy_scaled(z)
    return _unscale(z, s[1 if derivative else 0])


def airy_primitives(z, order):
    """Ai(order, z) for order in {0, 1, 2}."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    s = airy_scaled(z)
    return _unscale(z, s[(0, 2, 3)[order]])


def airy_ratio(z, guard=RATIO_GUARD):
    """Ai(1, z) / Ai(2, z), free of overflow for large |z|.

    Raises DivisionByZeroNear when the scaled Ai(2, z) is below ``guard``.
    """
    s = airy_scaled(z)
    den = np.abs(s[3])
    if np.any(den < guard):
        raise DivisionByZeroNear(f"|Ai(2, z)| scaled value {float(np.min(den)):.3g} below guard")
    return s[2] / s[3]
