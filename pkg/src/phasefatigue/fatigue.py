"""Fatigue functional: incremental history integral, elastic closed form
and the temperature-weighted variant.

Spatial derivatives of nodal fields are central differences in the
interior and first-order one-sided differences at the two boundary nodes
(the same stencil as ``numpy.gradient`` with ``edge_order=1``, written out
because this sits in the inner loop).
"""

import numpy as np

from .errors import InvalidArgument, SingularTemperatureError
from .model import FieldState, Grid1D, MaterialParams
from .potentials import _clamp


def nodal_gradient(f: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Derivative along the last axis of nodal values."""
    h = grid.h
    g = np.empty_like(f, dtype=float)
    g[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2.0 * h)
    g[..., 0] = (f[..., 1] - f[..., 0]) / h
    g[..., -1] = (f[..., -1] - f[..., -2]) / h
    return g


def mech_power_density(state: FieldState, params: MaterialParams, grid: Grid1D) -> np.ndarray:
    """(1 - clamp(phi)) * a * u_x * v_x at every node."""
    a = params.nodal("a")
    ux = nodal_gradient(state.u, grid)
    vx = nodal_gradient(state.v, grid)
    return (1.0 - _clamp(state.phi)) * a * ux * vx


def heat_flux_fatigue_density(state: FieldState, params: MaterialParams, grid: Grid1D) -> np.ndarray:
    """(1 - clamp(phi)) * q . grad(1/theta) with q = -k_q theta_x; never negative."""
    theta = _positive_theta(state)
    tx = nodal_gradient(theta, grid)
    return (1.0 - _clamp(state.phi)) * params.thermal.k_q * tx * tx / (theta * theta)


def thermal_fatigue_density(state: FieldState, params: MaterialParams, grid: Grid1D) -> np.ndarray:
    """Temperature-weighted fatigue integrand.

    (1 - clamp(phi)) * [a u_x v_x / theta + k_q theta_x**2 / theta**2]
    """
    if params.thermal is None:
        raise InvalidArgument("thermal_fatigue_density needs thermal material constants")
    theta = _positive_theta(state)
    mech = mech_power_density(state, params, grid) / theta
    return mech + heat_flux_fatigue_density(state, params, grid)


def _positive_theta(state: FieldState) -> np.ndarray:
    if state.theta is None:
        raise InvalidArgument("state carries no temperature field")
    if np.any(state.theta <= 0):
        raise SingularTemperatureError("temperature must stay > 0", time=state.t)
    return state.theta


def advance_fatigue(state: FieldState, p_old: np.ndarray, p_new: np.ndarray, dt: float) -> np.ndarray:
    """Trapezoidal update of the fatigue accumulator over one step."""
    if not dt > 0:
        raise InvalidArgument(f"dt must be > 0, got {dt!r}")
    return state.fatigue + 0.5 * dt * (p_old + p_new)


def strain_energy_density(state: FieldState, params: MaterialParams, grid: Grid1D) -> np.ndarray:
    """a * u_x**2 at every node (twice the virgin elastic energy density)."""
    ux = nodal_gradient(state.u, grid)
    return params.nodal("a") * ux * ux


def advance_history(hist_H: np.ndarray, phi_old: np.ndarray, phi_new: np.ndarray,
                    e_old: np.ndarray, e_new: np.ndarray) -> np.ndarray:
    """Trapezoidal update of H = int d(clamp(phi))/dt * a u_x**2 dt.

    The rate of the clamped phase is the difference of clamped values, so
    clamping and differentiation commute on the discrete level.
    """
    return hist_H + (_clamp(phi_new) - _clamp(phi_old)) * 0.5 * (e_old + e_new)


def fatigue_elastic_closed_form(state: FieldState, params: MaterialParams, grid: Grid1D) -> np.ndarray:
    """1/2 (1 - clamp(phi)) a u_x**2 + 1/2 H.

    Valid for runs that start from phi = 0 and u_x = 0.
    """
    e = strain_energy_density(state, params, grid)
    return 0.5 * (1.0 - _clamp(state.phi)) * e + 0.5 * state.hist_H
