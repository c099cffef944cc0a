"""Grid, material coefficients, field state and load program.

Material coefficients are stored per cell (``n_cells`` values) and are
constant inside a cell.  Nodal values, needed for lumped masses and for
pointwise energy densities, are the average of the adjacent cells; the two
boundary nodes take the value of their single neighbouring cell.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InvalidArgument, PreconditionViolation

LOAD_SHAPES = ("uniform", "half-sine", "gaussian")


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid on [0, L] with ``n_cells`` cells."""

    L: float
    n_cells: int

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise InvalidArgument(f"grid length must be > 0, got {self.L!r}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise InvalidArgument(f"n_cells must be an integer >= 4, got {self.n_cells!r}")

    @property
    def h(self) -> float:
        return self.L / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.n_nodes)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights over the nodes."""
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def cells_to_nodes(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    out = np.empty(values.size + 1)
    out[0] = values[0]
    out[-1] = values[-1]
    out[1:-1] = 0.5 * (values[:-1] + values[1:])
    return out


@dataclass(frozen=True)
class ThermalParams:
    """Constants for the non-isothermal model.

    c: specific heat, k_q: heat conductivity (Fourier law q = -k_q theta_x),
    varkappa: thermal-stress coupling, theta_ref: reference temperature.
    """

    c: float
    k_q: float
    varkappa: float
    theta_ref: float


@dataclass(frozen=True)
class MaterialParams:
    """Per-cell coefficient fields.

    ``kappa`` enters the phase flux as ``(1/kappa) * phi_x``.
    """

    rho: np.ndarray
    kappa: np.ndarray
    F0: np.ndarray
    a: np.ndarray
    thermal: Optional[ThermalParams] = None

    @classmethod
    def uniform(cls, grid: Grid1D, rho=1.0, kappa=1.0, F0=1.0, a=1.0, thermal=None):
        """Build params from scalars or per-cell sequences."""

        def expand(value):
            arr = np.asarray(value, dtype=float)
            if arr.ndim == 0:
                return np.full(grid.n_cells, float(arr))
            return arr.copy()

        return cls(expand(rho), expand(kappa), expand(F0), expand(a), thermal)

    def nodal(self, name: str) -> np.ndarray:
        return cells_to_nodes(getattr(self, name))

    def with_overrides(self, **values) -> "MaterialParams":
        n = self.rho.size
        fields = {k: np.full(n, float(v)) if np.ndim(v) == 0 else np.asarray(v, float)
                  for k, v in values.items()}
        return replace(self, **fields)


@dataclass(frozen=True)
class FieldState:
    """One time slice of the discrete fields, all sampled at the grid nodes.

    ``fatigue`` is the accumulated fatigue, ``hist_H`` the running integral
    of d(clamp(phi))/dt * a * u_x**2.  ``theta`` is present only in thermal
    runs.  Arrays are never mutated in place by the library.
    """

    t: float
    u: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    fatigue: np.ndarray
    hist_H: np.ndarray
    theta: Optional[np.ndarray] = None

    def replace(self, **changes) -> "FieldState":
        return replace(self, **changes)

    def copy(self) -> "FieldState":
        return FieldState(
            self.t, self.u.copy(), self.v.copy(), self.phi.copy(),
            self.fatigue.copy(), self.hist_H.copy(),
            None if self.theta is None else self.theta.copy(),
        )


@dataclass(frozen=True)
class LoadProgram:
    """Cyclic body force b(x, t) = amplitude * shape(x) * sin(omega t).

    ``amplitude`` is a force per unit mass; the momentum balance multiplies
    it by rho.  ``heat_supply`` is a constant r used only in thermal runs.
    """

    amplitude: float = 0.0
    omega: float = 0.0
    shape: str = "uniform"
    center: float = 0.5
    width: float = 0.1
    heat_supply: float = 0.0

    def __post_init__(self):
        if self.shape not in LOAD_SHAPES:
            raise InvalidArgument(f"unknown load shape {self.shape!r}; expected one of {LOAD_SHAPES}")
        if not np.isfinite(self.amplitude):
            raise InvalidArgument("load amplitude must be finite")
        if not (np.isfinite(self.omega) and self.omega >= 0):
            raise InvalidArgument("omega must be >= 0")
        if self.shape == "gaussian" and not self.width > 0:
            raise InvalidArgument("gaussian width must be > 0")

    def shape_values(self, grid: Grid1D) -> np.ndarray:
        x = grid.x
        if self.shape == "uniform":
            return np.ones_like(x)
        if self.shape == "half-sine":
            return np.sin(np.pi * x / grid.L)
        return np.exp(-0.5 * ((x - self.center) / self.width) ** 2)

    def body_force(self, grid: Grid1D, t: float) -> np.ndarray:
        return self.amplitude * np.sin(self.omega * t) * self.shape_values(grid)


def validate(params: MaterialParams, grid: Grid1D, state: Optional[FieldState] = None) -> list:
    """Return every admissibility violation found; an empty list means valid."""
    problems = []
    for name in ("rho", "kappa", "F0", "a"):
        arr = np.asarray(getattr(params, name), dtype=float)
        if arr.shape != (grid.n_cells,):
            problems.append(f"{name} must have {grid.n_cells} cell values, got shape {arr.shape}")
            continue
        if not np.all(np.isfinite(arr)):
            problems.append(f"{name} must be finite")
        elif name == "F0":
            if np.any(arr < 0):
                problems.append("F0 must be >= 0")
        elif np.any(arr <= 0):
            problems.append(f"{name} must be > 0")

    th = params.thermal
    if th is not None:
        for name in ("c", "theta_ref"):
            if not getattr(th, name) > 0:
                problems.append(f"thermal.{name} must be > 0")
        for name in ("k_q", "varkappa"):
            if not getattr(th, name) >= 0:
                problems.append(f"thermal.{name} must be >= 0")

    if state is None:
        return problems

    n = grid.n_nodes
    arrays = {"u": state.u, "v": state.v, "phi": state.phi,
              "fatigue": state.fatigue, "hist_H": state.hist_H}
    if state.theta is not None:
        arrays["theta"] = state.theta
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        if arr.shape != (n,):
            problems.append(f"{name} must have {n} nodal values, got shape {arr.shape}")
        elif not np.all(np.isfinite(arr)):
            problems.append(f"{name} must be finite")
    if not np.isfinite(state.t):
        problems.append("t must be finite")
    u = np.asarray(state.u)
    if u.shape == (n,) and (u[0] != 0.0 or u[-1] != 0.0):
        problems.append("boundary displacement must vanish")
    if state.theta is not None and np.asarray(state.theta).shape == (n,):
        if np.any(np.asarray(state.theta) <= 0):
            problems.append("theta must be > 0")
    return problems


def initial_state(grid: Grid1D, u0=0.0, v0=0.0, phi0=0.0, theta0=None) -> FieldState:
    """Build the t = 0 state with zero fatigue and zero history.

    Fields may be scalars or nodal arrays.  ``phi0`` must lie in [0, 1] and
    ``u0`` must vanish at both ends.
    """
    n = grid.n_nodes

    def nodal(value, name):
        arr = np.asarray(value, dtype=float)
        arr = np.full(n, float(arr)) if arr.ndim == 0 else arr.copy()
        if arr.shape != (n,):
            raise InvalidArgument(f"{name} must have {n} nodal values")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument(f"{name} must be finite")
        return arr

    u = nodal(u0, "u0")
    v = nodal(v0, "v0")
    phi = nodal(phi0, "phi0")
    if np.any(phi < 0) or np.any(phi > 1):
        raise PreconditionViolation("phi0 must satisfy 0 <= phi0 <= 1 at every node")
    if u[0] != 0.0 or u[-1] != 0.0:
        raise PreconditionViolation("u0 must vanish at the boundary nodes")
    # Dirichlet nodes do not move.
    v[0] = v[-1] = 0.0
    theta = None
    if theta0 is not None:
        theta = nodal(theta0, "theta0")
        if np.any(theta <= 0):
            raise PreconditionViolation("theta0 must be > 0")
    zeros = np.zeros(n)
    return FieldState(0.0, u, v, phi, zeros, zeros.copy(), theta)
