"""Thermodynamic bookkeeping: internal powers, free energies, the discrete
dissipation residual and homogeneous energy landscapes.

Every integral is a trapezoidal sum over the nodes and every spatial
derivative uses :func:`phasefatigue.fatigue.nodal_gradient`.  Nothing here
reuses the solver's stencils, so the audit is an independent check of the
time stepping.  Energies are reported per unit cross-section (energy units
in 1D), i.e. the densities are not divided by rho.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .fatigue import nodal_gradient
from .model import FieldState, Grid1D, MaterialParams, cells_to_nodes
from .potentials import _F, _G, _clamp

LANDSCAPE_RANGE = (-0.2, 1.2)


@dataclass(frozen=True)
class EnergyReport:
    t: float
    psi: float
    psi_F: float
    P_m: float
    P_s: float
    dissipation_residual: float


class EnergyAudit:
    """Energy and power evaluations for one (params, grid) pair.

    Caches the nodal coefficient fields; the module-level functions are
    thin wrappers that build a throwaway instance.
    """

    def __init__(self, params: MaterialParams, grid: Grid1D):
        self.grid = grid
        self.w = grid.weights
        self.rho = params.nodal("rho")
        self.F0 = params.nodal("F0")
        self.a = params.nodal("a")
        self.a_cell = np.asarray(params.a, dtype=float)
        self.invk = cells_to_nodes(1.0 / np.asarray(params.kappa, dtype=float))

    def _int(self, density) -> float:
        return float(np.dot(self.w, density))

    def _grad(self, f):
        return nodal_gradient(f, self.grid)

    def kinetic(self, s: FieldState) -> float:
        return 0.5 * self._int(self.rho * s.v * s.v)

    def mechanical(self, s: FieldState) -> float:
        strain = np.diff(s.u) / self.grid.h
        d = (1.0 - _clamp(s.phi)) ** 2
        d_face = 0.5 * (d[:-1] + d[1:])
        elastic = 0.5 * self.grid.h * float(np.sum(d_face * self.a_cell * strain * strain))
        return self.kinetic(s) + elastic

    def stress_power(self, s: FieldState) -> float:
        c = 1.0 - _clamp(s.phi)
        return self._int(c * c * self.a * self._grad(s.u) * self._grad(s.v))

    def mechanical_power(self, s: FieldState, d_fatigue_dt) -> float:
        p = _clamp(s.phi)
        density = (1.0 - p) * self.a * self._grad(s.u) * self._grad(s.v) - p * d_fatigue_dt
        return self._int(density)

    def structural_power(self, s0: FieldState, s1: FieldState, fatigue, dt: float) -> float:
        if not dt > 0:
            raise InvalidArgument("dt must be > 0")
        rate = (s1.phi - s0.phi) / dt
        g0 = self._grad(s0.phi)
        g1 = self._grad(s1.phi)
        density = (self.rho * rate * rate
                   + 0.5 * self.invk * (g1 * g1 - g0 * g0) / dt
                   + self.F0 * (_G(s1.phi) - _G(s0.phi)) / dt
                   + fatigue * (_F(s1.phi) - _F(s0.phi)) / dt)
        return self._int(density)

    def pseudo_fatigue(self, s: FieldState) -> float:
        gx = self._grad(s.phi)
        density = 0.5 * self.invk * gx * gx + self.F0 * _G(s.phi) + s.fatigue * _F(s.phi)
        return self._int(density)

    def free_energy(self, s: FieldState) -> float:
        p = _clamp(s.phi)
        ux = self._grad(s.u)
        gx = self._grad(s.phi)
        density = 0.5 * ((1.0 - p + p * p) * self.a * ux * ux
                         - p * s.hist_H
                         + self.invk * gx * gx
                         + 2.0 * self.F0 * _G(s.phi))
        return self._int(density)

    def report(self, s0: FieldState, s1: FieldState, dt: float, psi0=None) -> EnergyReport:
        if psi0 is None:
            psi0 = self.free_energy(s0)
        psi1 = self.free_energy(s1)
        mid = midpoint_state(s0, s1, dt)
        p_m = self.mechanical_power(mid, (s1.fatigue - s0.fatigue) / dt)
        p_s = self.structural_power(s0, s1, mid.fatigue, dt)
        residual = p_m + p_s - (psi1 - psi0) / dt
        return EnergyReport(s1.t, psi1, self.pseudo_fatigue(s1), p_m, p_s, residual)


def kinetic_energy(state: FieldState, params: MaterialParams, grid: Grid1D) -> float:
    return EnergyAudit(params, grid).kinetic(state)


def mechanical_energy(state: FieldState, params: MaterialParams, grid: Grid1D) -> float:
    """Kinetic plus degraded elastic energy in the solver's own discrete form.

    Cell strains (u[i+1] - u[i]) / h and lumped nodal masses; this is the
    quadratic form that the leapfrog update conserves when phi is frozen
    and there is no load.
    """
    return EnergyAudit(params, grid).mechanical(state)


def stress_power(state: FieldState, params: MaterialParams, grid: Grid1D) -> float:
    """Integral of T . grad v with the damaged stress (1 - clamp(phi))**2 a u_x."""
    return EnergyAudit(params, grid).stress_power(state)


def internal_mechanical_power(state: FieldState, params: MaterialParams, grid: Grid1D,
                              d_fatigue_dt) -> float:
    """Integral of (1 - clamp(phi)) a u_x v_x - clamp(phi) dFatigue/dt."""
    return EnergyAudit(params, grid).mechanical_power(state, d_fatigue_dt)


def internal_structural_power(state_n: FieldState, state_n1: FieldState, params: MaterialParams,
                              grid: Grid1D, fatigue, dt: float) -> float:
    """Discrete structural power over one step [t_n, t_n+1].

    rho phi_dot**2 + d/dt[(1/2 kappa) phi_x**2] + F0 dG/dt + fatigue dF/dt,
    with every rate a forward difference over the step.
    """
    return EnergyAudit(params, grid).structural_power(state_n, state_n1, fatigue, dt)


def pseudo_fatigue_energy(state: FieldState, params: MaterialParams, grid: Grid1D) -> float:
    """Integral of (1/2 kappa) phi_x**2 + F0 G(phi) + fatigue F(phi)."""
    return EnergyAudit(params, grid).pseudo_fatigue(state)


def elastic_free_energy(state: FieldState, params: MaterialParams, grid: Grid1D) -> float:
    """Free energy of the damaged elastic material, integrated over the domain.

    1/2 [(1 - p + p**2) a u_x**2 - p H + (1/kappa) phi_x**2 + 2 F0 G(phi)],
    with p = clamp(phi) and H the stored history integral.
    """
    return EnergyAudit(params, grid).free_energy(state)


def midpoint_state(state_n: FieldState, state_n1: FieldState, dt: float) -> FieldState:
    """Average of two states with the secant velocity (u1 - u0) / dt.

    Pairing the averaged strain with the secant strain rate makes the
    virgin elastic power an exact discrete time derivative of 1/2 a u_x**2.
    """
    mid = lambda a, b: 0.5 * (a + b)
    theta = None
    if state_n.theta is not None and state_n1.theta is not None:
        theta = mid(state_n.theta, state_n1.theta)
    return FieldState(
        mid(state_n.t, state_n1.t),
        mid(state_n.u, state_n1.u),
        (state_n1.u - state_n.u) / dt,
        mid(state_n.phi, state_n1.phi),
        mid(state_n.fatigue, state_n1.fatigue),
        mid(state_n.hist_H, state_n1.hist_H),
        theta,
    )


def energy_report(state_n: FieldState, state_n1: FieldState, params: MaterialParams,
                  grid: Grid1D, dt: float, psi_n=None) -> EnergyReport:
    """Powers and energies for the step ending at ``state_n1``.

    The free-energy rate is the backward difference of
    :func:`elastic_free_energy` across the step.
    """
    return EnergyAudit(params, grid).report(state_n, state_n1, dt, psi_n)


def dissipation_residual(reports) -> float:
    """Worst (smallest) residual P_m + P_s - d(psi)/dt over a report stream.

    The dissipation principle asks for this to be >= 0 up to discretisation
    error.  An empty stream returns 0.
    """
    values = [r.dissipation_residual if isinstance(r, EnergyReport) else float(r) for r in reports]
    return min(values) if values else 0.0


def energy_landscape(F0: float, fatigue: float, samples: int):
    """Homogeneous pseudo fatigue energy density F0 G(phi) + fatigue F(phi).

    Returns ``(phi, density)`` on ``samples`` equispaced points of
    [-0.2, 1.2].
    """
    if int(samples) != samples or samples < 2:
        raise InvalidArgument("samples must be an integer >= 2")
    phi = np.linspace(*LANDSCAPE_RANGE, int(samples))
    return phi, F0 * _G(phi) + fatigue * _F(phi)


def landscape_minimizer(phi: np.ndarray, density: np.ndarray) -> float:
    """Clamped location of the sampled minimum.

    Outside [0, 1] the landscape is flat, so every sample there is
    equivalent to the nearest breakpoint; reporting clamp(phi) picks the
    physical phase.  Ties go to the smallest phi.
    """
    return float(_clamp(phi[int(np.argmin(density))]))
