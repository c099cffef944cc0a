"""Time integration of the coupled damage / elastodynamics / heat system.

Discretisation
--------------
Nodes carry u, v, phi, theta and the fatigue accumulators; cells carry the
coefficients.  Masses are lumped (trapezoidal), so the boundary nodes own
half a cell.

* Momentum: velocity Verlet on rho u_tt = d/dx[(1 - clamp(phi))**2 a u_x]
  + rho b, conservative face fluxes, u = 0 held at both ends.
* Phase: Lie splitting.  The clamped reaction -F0 G'(phi) - F'(phi) Fatigue
  is advanced explicitly from phi_n; the diffusion d/dx[(1/kappa) phi_x]
  with zero end flux is then advanced explicitly or by one tridiagonal
  backward-Euler solve.
* Heat (thermal runs): explicit conduction with zero end flux plus the
  dissipative sources of the phase evolution.

One step n -> n+1 runs phase -> momentum -> heat -> fatigue/history, so the
phase update always sees the fatigue completed at the end of the previous
step, and the trapezoidal fatigue increment straddles the momentum update.
"""

from dataclasses import dataclass, field
import math
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .energy import EnergyAudit, EnergyReport
from .errors import DivergenceError, InvalidArgument, PreconditionViolation, SingularTemperatureError
from .fatigue import advance_history, nodal_gradient
from .model import FieldState, Grid1D, LoadProgram, MaterialParams, cells_to_nodes, validate
from .potentials import _F, _clamp, _dF, _dG, _inside

PHASE_SCHEMES = ("explicit", "semi-implicit-diffusion")

COLUMNS = (
    "t", "phi_max", "phi_min", "phi_probe", "fatigue_probe", "kinetic_energy",
    "free_energy", "psi_F", "P_m", "P_s", "dissipation_residual",
)


@dataclass(frozen=True)
class StepControls:
    """Time-stepping controls.

    ``freeze_phase`` skips the phase update entirely (phi stays at its
    initial value); it is used for pure elastodynamics checks.
    """

    dt: float
    t_end: float
    cfl_safety: float = 0.5
    phase_scheme: str = "explicit"
    sample_every: int = 1
    freeze_phase: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidArgument(f"dt must be > 0, got {self.dt!r}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise InvalidArgument(f"t_end must be >= 0, got {self.t_end!r}")
        if not 0 < self.cfl_safety <= 1:
            raise InvalidArgument("cfl_safety must lie in (0, 1]")
        if self.phase_scheme not in PHASE_SCHEMES:
            raise InvalidArgument(f"phase_scheme must be one of {PHASE_SCHEMES}")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise InvalidArgument("sample_every must be an integer >= 1")

    @property
    def n_steps(self) -> int:
        # Tolerate t_end/dt landing a hair above an integer.
        return max(0, math.ceil(self.t_end / self.dt - 1e-9))

    @classmethod
    def auto(cls, params, grid, t_end, cfl_safety=0.5, **kwargs):
        """Largest admissible dt that divides t_end into whole steps."""
        scheme = kwargs.get("phase_scheme", "explicit")
        limit = cfl_safety * stable_dt(params, grid, include_phase=scheme == "explicit")
        n = max(1, math.ceil(t_end / limit)) if t_end > 0 else 1
        dt = t_end / n if t_end > 0 else limit
        return cls(dt=dt, t_end=t_end, cfl_safety=cfl_safety, **kwargs)


@dataclass
class Trajectory:
    """Sampled diagnostics of one run.

    ``rows`` follow :data:`COLUMNS`.  ``boundary_stress`` holds the damaged
    stress in the first cell at each sample.  ``worst_residual`` and
    ``min_flux_fatigue`` are tracked over every step, not just the samples.
    """

    probe_node: int
    rows: list = field(default_factory=list)
    boundary_stress: list = field(default_factory=list)
    fields: Optional[list] = None
    worst_residual: float = math.inf
    min_flux_fatigue: float = math.inf

    def column(self, name: str) -> np.ndarray:
        i = COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def __len__(self):
        return len(self.rows)


class _Operators:
    """Stencils and lumped masses for one (params, grid) pair."""

    def __init__(self, params: MaterialParams, grid: Grid1D):
        self.grid = grid
        self.h = h = grid.h
        self.vol = grid.weights
        self.rho = params.nodal("rho")
        self.F0 = params.nodal("F0")
        self.a_node = params.nodal("a")
        self.a_cell = np.asarray(params.a, dtype=float)
        self.invk_cell = 1.0 / np.asarray(params.kappa, dtype=float)
        self.mass = self.rho * self.vol
        self.thermal = params.thermal
        self._banded = {}

    # -- stability -------------------------------------------------------
    def _face_sum(self, face):
        s = np.zeros(face.size + 1)
        s[:-1] += face
        s[1:] += face
        return s

    def phase_limit(self):
        return float(np.min(self.mass * self.h / self._face_sum(self.invk_cell)))

    def wave_limit(self):
        interior = slice(1, -1)
        s = self._face_sum(self.a_cell)[interior]
        return float(np.min(np.sqrt(2.0 * self.mass[interior] * self.h / s)))

    def heat_limit(self):
        if self.thermal is None or self.thermal.k_q == 0:
            return math.inf
        cap = self.mass * self.thermal.c
        k_face = np.full(self.a_cell.size, self.thermal.k_q)
        return float(np.min(cap * self.h / self._face_sum(k_face)))

    # -- phase -----------------------------------------------------------
    def reaction(self, phi, fatigue, dt):
        rate = (-self.F0 * _dG(phi) - _dF(phi) * fatigue) / self.rho
        trial = phi + dt * rate
        # The clamped reaction vanishes outside [0, 1]; a trial step that
        # crosses a breakpoint stops there.
        return np.where(_inside(phi), _clamp(trial), phi)

    def divergence(self, f, coef):
        flux = coef * np.diff(f) / self.h
        div = np.zeros_like(f)
        div[:-1] += flux
        div[1:] -= flux
        return div

    def diffuse_explicit(self, phi, dt):
        return phi + dt * self.divergence(phi, self.invk_cell) / self.mass

    def diffuse_implicit(self, phi, dt):
        ab = self._banded.get(dt)
        if ab is None:
            off = -dt * self.invk_cell / self.h
            ab = np.zeros((3, phi.size))
            ab[0, 1:] = off
            ab[2, :-1] = off
            ab[1] = self.mass - self._face_sum(off)
            self._banded[dt] = ab
        return solve_banded((1, 1), ab, self.mass * phi)

    def phase(self, phi, fatigue, dt, scheme):
        star = self.reaction(phi, fatigue, dt)
        if scheme == "explicit":
            return self.diffuse_explicit(star, dt)
        return self.diffuse_implicit(star, dt)

    # -- momentum --------------------------------------------------------
    def acceleration(self, u, phi, theta, b):
        d = (1.0 - _clamp(phi)) ** 2
        sigma = 0.5 * (d[:-1] + d[1:]) * self.a_cell * np.diff(u) / self.h
        if theta is not None and self.thermal is not None:
            sigma = sigma + self.thermal.varkappa * 0.5 * (theta[:-1] + theta[1:])
        acc = np.zeros_like(u)
        acc[1:-1] = (sigma[1:] - sigma[:-1]) / self.mass[1:-1] + b[1:-1]
        return acc

    def boundary_stress(self, u, phi):
        d = (1.0 - _clamp(phi[:2])) ** 2
        return float(0.5 * (d[0] + d[1]) * self.a_cell[0] * (u[1] - u[0]) / self.h)

    def momentum(self, u, v, phi, theta, b0, b1, dt):
        acc0 = self.acceleration(u, phi, theta, b0)
        u1 = u + dt * v + 0.5 * dt * dt * acc0
        u1[0] = u1[-1] = 0.0
        acc1 = self.acceleration(u1, phi, theta, b1)
        v1 = v + 0.5 * dt * (acc0 + acc1)
        v1[0] = v1[-1] = 0.0
        return u1, v1

    # -- heat ------------------------------------------------------------
    def heat(self, theta, phi_old, phi_new, fatigue, r, dt):
        th = self.thermal
        phi_rate = (phi_new - phi_old) / dt
        F_rate = (_F(phi_new) - _F(phi_old)) / dt
        source = self.rho * phi_rate * phi_rate + fatigue * F_rate + self.rho * r
        conduction = self.divergence(theta, th.k_q) if th.k_q > 0 else 0.0
        return theta + dt * (conduction + self.vol * source) / (self.mass * th.c)

    # -- fatigue integrands ---------------------------------------------
    def mech_density(self, u, v, phi):
        ux = nodal_gradient(u, self.grid)
        vx = nodal_gradient(v, self.grid)
        return (1.0 - _clamp(phi)) * self.a_node * ux * vx

    def flux_density(self, theta, phi):
        tx = nodal_gradient(theta, self.grid)
        return (1.0 - _clamp(phi)) * self.thermal.k_q * tx * tx / (theta * theta)

    def strain_energy(self, u):
        ux = nodal_gradient(u, self.grid)
        return self.a_node * ux * ux


def stable_dt(params: MaterialParams, grid: Grid1D, include_phase: bool = True) -> float:
    """Largest stable step of the explicit parts of the scheme.

    Minimum of the explicit phase-diffusion limit (rho kappa h**2 / 2 for
    uniform coefficients), the leapfrog wave limit h sqrt(rho / a) and, for
    thermal materials with k_q > 0, the conduction limit rho c h**2 / (2 k_q).
    Heterogeneous coefficients are handled node by node with the lumped
    masses, which reduces to the formulas above when they are uniform.
    """
    ops = _Operators(params, grid)
    limits = [ops.wave_limit(), ops.heat_limit()]
    if include_phase:
        limits.append(ops.phase_limit())
    return min(limits)


def _finite_or_raise(state: FieldState):
    for name in ("u", "v", "phi", "fatigue", "hist_H"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise DivergenceError(f"non-finite {name}", time=state.t)
    if state.theta is not None and not np.all(np.isfinite(state.theta)):
        raise DivergenceError("non-finite theta", time=state.t)


def step_phase(state: FieldState, params: MaterialParams, grid: Grid1D, dt: float,
               scheme: str = "explicit") -> FieldState:
    """Advance phi by one step using the stored fatigue.

    Only ``phi`` changes; the history accumulator is advanced together with
    the fatigue once the momentum update is known (see :func:`run`).
    """
    if not dt > 0:
        raise InvalidArgument("dt must be > 0")
    if scheme not in PHASE_SCHEMES:
        raise InvalidArgument(f"unknown phase scheme {scheme!r}")
    phi = _Operators(params, grid).phase(state.phi, state.fatigue, dt, scheme)
    if not np.all(np.isfinite(phi)):
        raise DivergenceError("non-finite phi", time=state.t + dt)
    return state.replace(phi=phi)


def step_momentum(state: FieldState, params: MaterialParams, grid: Grid1D, load: LoadProgram,
                  dt: float) -> FieldState:
    """One velocity-Verlet step of the damaged momentum balance; advances t.

    Uses the phase field and temperature stored in ``state`` for both half
    steps.
    """
    ops = _Operators(params, grid)
    b0 = load.body_force(grid, state.t)
    b1 = load.body_force(grid, state.t + dt)
    u1, v1 = ops.momentum(state.u, state.v, state.phi, state.theta, b0, b1, dt)
    new = state.replace(t=state.t + dt, u=u1, v=v1)
    if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(v1))):
        raise DivergenceError("non-finite displacement or velocity", time=new.t)
    return new


def step_heat(state: FieldState, params: MaterialParams, grid: Grid1D, load: LoadProgram,
              dt: float, phi_old: np.ndarray) -> FieldState:
    """Explicit heat update driven by the phase change phi_old -> state.phi.

    rho c theta_dot = k_q theta_xx + rho phi_dot**2 + Fatigue d F(phi)/dt + rho r
    """
    if params.thermal is None or state.theta is None:
        raise InvalidArgument("step_heat needs thermal constants and a temperature field")
    if np.any(state.theta <= 0):
        raise SingularTemperatureError("temperature must stay > 0", time=state.t)
    ops = _Operators(params, grid)
    theta = ops.heat(state.theta, phi_old, state.phi, state.fatigue, load.heat_supply, dt)
    if not np.all(np.isfinite(theta)):
        raise DivergenceError("non-finite theta", time=state.t)
    if np.any(theta <= 0):
        raise SingularTemperatureError("temperature dropped to <= 0", time=state.t)
    return state.replace(theta=theta)


def _check_inputs(params, grid, controls, initial, thermal):
    problems = validate(params, grid, initial)
    if thermal:
        if params.thermal is None:
            problems.append("thermal run needs thermal material constants")
        if initial.theta is None:
            problems.append("thermal run needs an initial temperature field")
    if problems:
        raise PreconditionViolation("; ".join(problems))
    explicit = controls.phase_scheme == "explicit" and not controls.freeze_phase
    limit = controls.cfl_safety * stable_dt(params, grid, include_phase=explicit)
    # Allow the rounding introduced by StepControls.auto.
    if controls.dt > limit * (1 + 1e-12):
        raise InvalidArgument(
            f"dt = {controls.dt!r} exceeds the stability limit {limit!r} "
            f"(cfl_safety = {controls.cfl_safety})")


def run(params: MaterialParams, grid: Grid1D, load: LoadProgram, controls: StepControls,
        initial: FieldState, thermal: bool = False, probe_node: Optional[int] = None,
        keep_fields: bool = False):
    """Integrate from ``initial`` to ``controls.t_end``.

    Returns ``(trajectory, final_state)``.  With ``keep_fields`` every sampled
    FieldState is stored in ``trajectory.fields``.  In thermal runs the
    fatigue accumulator integrates the temperature-weighted integrand and the
    mechanical history H is still maintained for the energy audit.
    """
    _check_inputs(params, grid, controls, initial, thermal)
    ops = _Operators(params, grid)
    dt = controls.dt
    probe = grid.n_cells // 2 if probe_node is None else int(probe_node)
    if not 0 <= probe < grid.n_nodes:
        raise InvalidArgument(f"probe_node must lie in [0, {grid.n_nodes - 1}]")
    if not thermal and initial.theta is not None:
        initial = initial.replace(theta=None)

    traj = Trajectory(probe, fields=[] if keep_fields else None)
    r = load.heat_supply
    shape = load.shape_values(grid)

    def body(t):
        return load.amplitude * math.sin(load.omega * t) * shape

    def density(s):
        p = ops.mech_density(s.u, s.v, s.phi)
        if not thermal:
            return p, None
        flux = ops.flux_density(s.theta, s.phi)
        return p / s.theta + flux, flux

    def record(s, report):
        row = (
            s.t, float(np.max(s.phi)), float(np.min(s.phi)), float(s.phi[probe]),
            float(s.fatigue[probe]), audit.kinetic(s),
            report.psi, report.psi_F, report.P_m, report.P_s, report.dissipation_residual,
        )
        traj.rows.append(row)
        traj.boundary_stress.append(ops.boundary_stress(s.u, s.phi))
        if keep_fields:
            traj.fields.append(s.copy())

    audit = EnergyAudit(params, grid)
    state = initial
    psi = audit.free_energy(state)
    record(state, EnergyReport(state.t, psi, audit.pseudo_fatigue(state), 0.0, 0.0, 0.0))
    p_old, flux = density(state)
    if flux is not None:
        traj.min_flux_fatigue = float(np.min(flux))
    e_old = ops.strain_energy(state.u)

    n_steps = controls.n_steps
    for n in range(n_steps):
        t0 = n * dt
        t1 = (n + 1) * dt
        if controls.freeze_phase:
            phi1 = state.phi
        else:
            phi1 = ops.phase(state.phi, state.fatigue, dt, controls.phase_scheme)
        u1, v1 = ops.momentum(state.u, state.v, phi1, state.theta, body(t0), body(t1), dt)
        theta1 = None
        if thermal:
            theta1 = ops.heat(state.theta, state.phi, phi1, state.fatigue, r, dt)
            if not np.all(np.isfinite(theta1)):
                raise DivergenceError("non-finite theta", time=t1)
            if np.any(theta1 <= 0):
                raise SingularTemperatureError("temperature dropped to <= 0", time=t1)
        new = FieldState(t1, u1, v1, phi1, state.fatigue, state.hist_H, theta1)
        p_new, flux = density(new)
        e_new = ops.strain_energy(u1)
        new = new.replace(
            fatigue=state.fatigue + 0.5 * dt * (p_old + p_new),
            hist_H=advance_history(state.hist_H, state.phi, phi1, e_old, e_new),
        )
        _finite_or_raise(new)
        report = audit.report(state, new, dt, psi0=psi)
        traj.worst_residual = min(traj.worst_residual, report.dissipation_residual)
        if flux is not None:
            traj.min_flux_fatigue = min(traj.min_flux_fatigue, float(np.min(flux)))
        if (n + 1) % controls.sample_every == 0 or n + 1 == n_steps:
            record(new, report)
        state, p_old, e_old, psi = new, p_new, e_new, report.psi

    if n_steps == 0:
        traj.worst_residual = 0.0
    return traj, state


def weak_residual(fields, params: MaterialParams, grid: Grid1D, load: LoadProgram,
                  test_phi=None, test_u=None):
    """Space-time residuals of the weak phase and momentum equations.

    ``fields`` is a list of FieldState samples at uniformly spaced times
    (``run(..., keep_fields=True)`` with a fixed ``sample_every``).
    ``test_phi`` / ``test_u`` are arrays of shape (n_samples, n_nodes); they
    default to the solution itself.  Time derivatives are differences
    between samples, spatial ones use the nodal gradient and the space
    integral is trapezoidal, none of which is shared with the stepper.

    Phase form (evaluated on the sample midpoints):
        rho phi_t psi_t + (1/kappa) phi_x psi_tx + F'(phi) Fatigue psi_t
        + F0 G'(phi) psi_t
    Momentum form (evaluated at interior samples, central differences):
        rho u_tt w_t + (1 - clamp(phi))**2 a u_x w_tx - rho b w_t

    Returns ``(r_phase, r_momentum)``.
    """
    m = len(fields)
    if m < 3:
        raise InvalidArgument("weak_residual needs at least three samples")
    times = np.array([s.t for s in fields])
    steps = np.diff(times)
    dt = float(steps[0])
    if not np.allclose(steps, dt, rtol=1e-9, atol=0):
        raise InvalidArgument("samples must be uniformly spaced in time")
    phi = np.array([s.phi for s in fields])
    u = np.array([s.u for s in fields])
    fat = np.array([s.fatigue for s in fields])
    psi = phi if test_phi is None else np.asarray(test_phi, dtype=float)
    w = u if test_u is None else np.asarray(test_u, dtype=float)
    if psi.shape != phi.shape or w.shape != u.shape:
        raise InvalidArgument("test function histories must match the field history shape")

    rho = params.nodal("rho")
    F0 = params.nodal("F0")
    a = params.nodal("a")
    invk = cells_to_nodes(1.0 / np.asarray(params.kappa, dtype=float))
    wts = grid.weights
    grad = lambda f: nodal_gradient(f, grid)

    # Phase residual on [t_k, t_k+1] midpoints.
    phi_t = np.diff(phi, axis=0) / dt
    psi_t = np.diff(psi, axis=0) / dt
    phi_m = 0.5 * (phi[1:] + phi[:-1])
    fat_m = 0.5 * (fat[1:] + fat[:-1])
    integrand = (rho * phi_t * psi_t + invk * grad(phi_m) * grad(psi_t)
                 + _dF(phi_m) * fat_m * psi_t + F0 * _dG(phi_m) * psi_t)
    r_phase = float(dt * np.sum(integrand @ wts))

    # Momentum residual at interior samples.
    u_tt = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dt ** 2
    w_t = (w[2:] - w[:-2]) / (2.0 * dt)
    deg = (1.0 - _clamp(phi[1:-1])) ** 2
    shape = load.shape_values(grid)
    b = load.amplitude * np.sin(load.omega * times[1:-1])[:, None] * shape[None, :]
    integrand = rho * u_tt * w_t + deg * a * grad(u[1:-1]) * grad(w_t) - rho * b * w_t
    r_momentum = float(dt * np.sum(integrand @ wts))
    return r_phase, r_momentum
