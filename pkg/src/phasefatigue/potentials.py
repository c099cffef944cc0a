"""Clamped damage potentials F, G and their derivatives.

All functions accept scalars or numpy arrays.  Scalars come back as
``float``; arrays come back as arrays of the same shape.  The clamp is a
hard truncation to [0, 1]: nothing here is smoothed.

At the breakpoints phi = 0 and phi = 1 the derivatives take their interior
values, so ``dG(1.0) == 1.5`` while ``dG(1.0 + eps) == 0``.
"""

import numpy as np

from .errors import InvalidArgument

G_SATURATION = 5.0 / 6.0


def _checked(phi):
    arr = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument("phase value must be finite")
    return arr


def _out(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


# Unchecked kernels used inside the time stepping loops.

def _clamp(phi):
    return np.minimum(np.maximum(phi, 0.0), 1.0)


def _G(phi):
    p = _clamp(phi)
    return p * p - p * p * p / 6.0


def _F(phi):
    return -_clamp(phi)


def _inside(phi):
    return (phi >= 0.0) & (phi <= 1.0)


def _dF(phi):
    return np.where(_inside(phi), -1.0, 0.0)


def _dG(phi):
    return np.where(_inside(phi), 2.0 * phi - 0.5 * phi * phi, 0.0)


# Public, validated surface.

def clamp_phase(phi):
    """Truncate ``phi`` to [0, 1]."""
    return _out(_clamp(_checked(phi)), phi)


def potential_F(phi):
    """F(phi) = -clamp(phi)."""
    return _out(_F(_checked(phi)), phi)


def potential_G(phi):
    """G(phi) = phi**2 - phi**3/6 on [0, 1], 5/6 above, 0 below.

    Evaluating the cubic on the clamped value gives both flat branches,
    since the cubic equals 5/6 at 1 and 0 at 0.
    """
    return _out(_G(_checked(phi)), phi)


def dF(phi):
    """-1 on the closed interval [0, 1], 0 elsewhere."""
    return _out(_dF(_checked(phi)), phi)


def dG(phi):
    """2 phi - phi**2/2 on the closed interval [0, 1], 0 elsewhere."""
    return _out(_dG(_checked(phi)), phi)
