"""Evolution law, integrating-factor RK4 stepper and the Duhamel/Picard fixed point.

The equation is integrated in its nonlocal form

    u_t + d_x^{2j+1} u = N(u),
    N(u) = -1/2 d_x(u^2) - d_x (1 - d_x^2)^{-1} [u^2 + 1/2 u_x^2],

so each Fourier mode rotates freely as ``c(k, t) = exp(i omega(k) t) c(k, 0)`` with
``omega(k) = (-1)^(j+1) k^(2j+1)``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import simpson

from .spectral import (
    IMAG_RESIDUE_RTOL,
    Grid,
    RealField,
    _full_from_half,
    hermitian_defect,
)

log = logging.getLogger(__name__)

STIFFNESS_ADVISORY = 50.0


class BlowUpError(FloatingPointError):
    """A non-finite coefficient appeared during time stepping."""

    def __init__(self, step: int, time: float):
        super().__init__(f"non-finite coefficients at step {step} (t={time:.6g})")
        self.step = step
        self.time = time


class StiffnessWarning(UserWarning):
    """``dt * (n/2)^(2j+1)`` exceeds the advisory bound."""


@dataclass(frozen=True)
class EvolutionParams:
    j: int
    dt: float
    t_end: float
    dealias: bool = True
    nonlinear: bool = True

    def __post_init__(self):
        if self.j < 1:
            raise ValueError(f"j must be >= 1, got {self.j}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")

    def n_steps(self) -> int:
        """Number of uniform steps covering ``[0, t_end]`` with step at most ``dt``."""
        if self.t_end == 0:
            return 0
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))

    def stiffness(self, grid: Grid) -> float:
        return self.dt * (grid.n_points / 2) ** (2 * self.j + 1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Stored states of one run; ``coeffs[i]`` holds the state at ``times[i]``."""

    grid: Grid
    times: np.ndarray
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        times = np.array(self.times, dtype=np.float64)
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if times.ndim != 1 or coeffs.shape != (times.size, self.grid.n_points):
            raise ValueError("times and coeffs have inconsistent shapes")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("trajectory times must be strictly increasing")
        times.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coeffs", coeffs)

    def __len__(self) -> int:
        return self.times.size

    def state(self, i: int) -> RealField:
        return RealField(self.grid, self.coeffs[i])

    @property
    def states(self) -> list:
        return [self.state(i) for i in range(len(self))]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def uniform_step(self) -> float:
        """Common spacing of the stored times; raises if they are not uniform."""
        if len(self) < 2:
            return 0.0
        steps = np.diff(self.times)
        h = (self.times[-1] - self.times[0]) / (len(self) - 1)
        if np.max(np.abs(steps - h)) > 1e-9 * max(h, 1e-300):
            raise ValueError("trajectory time spacing is not uniform")
        return float(h)


# ---- symbols -----------------------------------------------------------------


def dispersion_phase(k, j: int):
    """``omega(k) = (-1)^(j+1) k^(2j+1)``; exact for integer input."""
    sign = 1 if j % 2 else -1
    if isinstance(k, np.ndarray):
        return sign * k.astype(np.float64) ** (2 * j + 1)
    return sign * int(k) ** (2 * j + 1)


class _Operators:
    """Half-spectrum symbols for one grid, shared by all stepping helpers."""

    def __init__(self, grid: Grid, dealias: bool = True, nonlinear: bool = True):
        n = grid.n_points
        self.grid = grid
        self.n = n
        k = np.arange(n // 2 + 1, dtype=np.float64)
        self.k = k
        self.omega = dispersion_phase(k, grid.j)
        ik = 1j * k
        ik[-1] = 0.0  # odd derivative of the Nyquist mode
        self.ik = ik
        self.nonlocal_sym = ik / (1.0 + k * k)
        self.mask = (k <= grid.k_dealias) if dealias else np.ones_like(k, dtype=bool)
        self.dealias = dealias
        self.nonlinear = nonlinear

    def nonlinear_half(self, c: np.ndarray) -> np.ndarray:
        """N(u) on half spectra; ``c`` may carry leading batch axes."""
        if not self.nonlinear:
            return np.zeros_like(c)
        n = self.n
        u = np.fft.irfft(c * n, n=n)
        ux = np.fft.irfft(self.ik * c * n, n=n)
        sq = np.fft.rfft(u * u) / n
        gsq = np.fft.rfft(ux * ux) / n
        if self.dealias:
            sq = sq * self.mask
            gsq = gsq * self.mask
        return -0.5 * self.ik * sq - self.nonlocal_sym * (sq + 0.5 * gsq)

    def propagator(self, t: float) -> np.ndarray:
        return np.exp(1j * self.omega * t)


def _half(fld: RealField) -> np.ndarray:
    defect = hermitian_defect(fld.coeffs)
    if defect > IMAG_RESIDUE_RTOL:
        from .spectral import SymmetryError

        raise SymmetryError(f"field is not real (Hermitian defect {defect:.3e})")
    return fld.coeffs[: fld.grid.n_points // 2 + 1].copy()


def nonlinear_term(u: RealField, dealias: bool = True) -> RealField:
    """``N(u) = -1/2 d_x(u^2) - d_x (1 - d_x^2)^{-1}[u^2 + 1/2 u_x^2]``."""
    ops = _Operators(u.grid, dealias=dealias)
    return RealField(u.grid, _full_from_half(ops.nonlinear_half(_half(u))))


def original_form_residual(u: RealField, u_t: RealField) -> float:
    """L^2 norm of the left-hand side of the original (local) form of the equation.

    Evaluates ``(1 - d^2) u_t + d^{2j+1}(1 - d^2) u + 3 u u_x - 2 u_x u_xx - u u_xxx``
    with products taken on the grid (no dealiasing).
    """
    if u.grid != u_t.grid:
        raise ValueError("u and u_t must share a grid")
    grid = u.grid
    n, j = grid.n_points, grid.j
    k = grid.modes.astype(np.float64)
    k[n // 2] = 0.0
    helm = 1.0 + k * k
    c = u.coeffs
    lin = helm * u_t.coeffs + (1j * k) ** (2 * j + 1) * helm * c

    def phys(sym):
        return np.fft.ifft(sym * c * n).real

    v, vx, vxx, vxxx = (phys((1j * k) ** m) for m in range(4))
    quad = 3 * v * vx - 2 * vx * vxx - v * vxxx
    total = lin + np.fft.fft(quad) / n
    return float(np.sqrt(np.sum(np.abs(total) ** 2)))


# ---- time stepping -----------------------------------------------------------


def _rk4_step(ops: _Operators, c: np.ndarray, dt: float, e_half: np.ndarray) -> np.ndarray:
    e_full = e_half * e_half
    k1 = ops.nonlinear_half(c)
    k2 = ops.nonlinear_half(e_half * (c + 0.5 * dt * k1))
    k3 = ops.nonlinear_half(e_half * c + 0.5 * dt * k2)
    k4 = ops.nonlinear_half(e_full * c + dt * e_half * k3)
    return e_full * c + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)


def _check_stiffness(grid: Grid, params: EvolutionParams) -> None:
    stiff = params.stiffness(grid)
    if stiff > STIFFNESS_ADVISORY:
        warnings.warn(
            f"dt*(n/2)^(2j+1) = {stiff:.3g} exceeds advisory bound {STIFFNESS_ADVISORY:g}",
            StiffnessWarning,
            stacklevel=3,
        )


def _check_order(u: RealField, params: EvolutionParams) -> None:
    if u.grid.j != params.j:
        raise ValueError(f"grid order j={u.grid.j} differs from params j={params.j}")


def step(u: RealField, params: EvolutionParams, step_index: int = 0) -> RealField:
    """Advance ``u`` by one integrating-factor RK4 step of size ``params.dt``."""
    _check_order(u, params)
    ops = _Operators(u.grid, params.dealias, params.nonlinear)
    c = _rk4_step(ops, _half(u), params.dt, ops.propagator(0.5 * params.dt))
    if not np.all(np.isfinite(c)):
        raise BlowUpError(step_index, (step_index + 1) * params.dt)
    return RealField(u.grid, _full_from_half(c))


def _march_interaction(ops, v, dt, n_steps, record_every, times, rows) -> None:
    p_now = np.ones_like(ops.omega, dtype=np.complex128)
    for i in range(n_steps):
        p_mid = ops.propagator((i + 0.5) * dt)
        p_next = ops.propagator((i + 1) * dt)
        k1 = np.conj(p_now) * ops.nonlinear_half(p_now * v)
        k2 = np.conj(p_mid) * ops.nonlinear_half(p_mid * (v + 0.5 * dt * k1))
        k3 = np.conj(p_mid) * ops.nonlinear_half(p_mid * (v + 0.5 * dt * k2))
        k4 = np.conj(p_next) * ops.nonlinear_half(p_next * (v + dt * k3))
        v = v + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        p_now = p_next
        if not np.all(np.isfinite(v)):
            raise BlowUpError(i, (i + 1) * dt)
        if (i + 1) % record_every == 0 or i + 1 == n_steps:
            times.append((i + 1) * dt)
            rows.append(p_next * v)


def evolve(u0: RealField, params: EvolutionParams, record_every: int = 1) -> Trajectory:
    """Integrate from ``t = 0`` to ``params.t_end``.

    The step is ``t_end / ceil(t_end / dt)`` so that the stored times are uniform.
    A state is stored every ``record_every`` steps and always at the final time.
    """
    _check_order(u0, params)
    if record_every < 1:
        raise ValueError("record_every must be a positive integer")
    if abs(u0.coeffs[0]) != 0.0:
        raise ValueError("initial data must have zero mean")
    grid = u0.grid
    n_steps = params.n_steps()
    v = _half(u0)
    times = [0.0]
    rows = [v.copy()]
    if n_steps:
        _check_stiffness(grid, params)
        dt = params.t_end / n_steps
        ops = _Operators(grid, params.dealias, params.nonlinear)
        # Stepping the interaction variable v = exp(-i omega t) c avoids compounding
        # the rounding of |exp(i omega dt)| into a systematic energy drift.
        with np.errstate(over="ignore", invalid="ignore"):  # blow-up is reported explicitly
            _march_interaction(ops, v, dt, n_steps, record_every, times, rows)
    return Trajectory(grid, np.array(times), _full_from_half(np.array(rows)))


def free_trajectory(u0: RealField, times) -> Trajectory:
    """Exact linear flow ``S(t) u0`` sampled at ``times``."""
    ops = _Operators(u0.grid)
    times = np.asarray(times, dtype=np.float64)
    c = _half(u0)[None, :] * np.exp(1j * np.outer(times, ops.omega))
    return Trajectory(u0.grid, times, _full_from_half(c))


# ---- Duhamel / Picard ----------------------------------------------------------


def _forcing(ops: _Operators, traj: Trajectory) -> np.ndarray:
    # exp(-i omega t') F[N(u(t'))] on every stored time
    c = traj.coeffs[:, : ops.n // 2 + 1]
    return np.exp(-1j * np.outer(traj.times, ops.omega)) * ops.nonlinear_half(c)


def _time_index(traj: Trajectory, t: float) -> int:
    i = int(np.argmin(np.abs(traj.times - t)))
    h = traj.uniform_step()
    if abs(traj.times[i] - t) > 1e-9 * max(h, abs(t), 1e-300):
        raise ValueError(f"t={t} is not one of the trajectory's stored times")
    return i


def _duhamel_rows(ops: _Operators, c0: np.ndarray, traj: Trajectory, idx) -> np.ndarray:
    h = traj.uniform_step()
    g = _forcing(ops, traj)
    out = np.empty((len(idx), c0.size), dtype=np.complex128)
    for r, i in enumerate(idx):
        integral = simpson(g[: i + 1], dx=h, axis=0) if i > 0 else 0.0
        out[r] = np.exp(1j * ops.omega * traj.times[i]) * (c0 + integral)
    return out


def duhamel_apply(
    u0: RealField, traj: Trajectory, t: float, params: Optional[EvolutionParams] = None
) -> RealField:
    """``S(t) u0 + int_0^t S(t - t') N(u(t')) dt'`` by composite Simpson on ``traj``.

    ``t`` must coincide with a stored time and the stored times must be uniform
    and start at zero.
    """
    if traj.grid != u0.grid:
        raise ValueError("trajectory and initial data live on different grids")
    traj.uniform_step()
    if traj.times[0] != 0.0:
        raise ValueError("trajectory must start at t = 0")
    if t > traj.t_end * (1 + 1e-12) or t < 0:
        raise ValueError(f"t={t} outside [0, {traj.t_end}]")
    i = _time_index(traj, t)
    if i == 0:
        return u0
    dealias, nonlinear = (params.dealias, params.nonlinear) if params else (True, True)
    ops = _Operators(u0.grid, dealias, nonlinear)
    row = _duhamel_rows(ops, _half(u0), traj, [i])[0]
    return RealField(u0.grid, _full_from_half(row))


def _sup_distance(a: Trajectory, b: Trajectory, s: float) -> float:
    weight = (1.0 + a.grid.modes.astype(np.float64) ** 2) ** s
    d = np.sum(weight * np.abs(a.coeffs - b.coeffs) ** 2, axis=1)
    return float(np.sqrt(np.max(d)))


@dataclass
class PicardResult:
    """Iterates of the Duhamel map and sup-in-time distances between consecutive ones.

    ``distances[m]`` is the distance between ``iterates[m + 1]`` and ``iterates[m]``.
    """

    iterates: list
    distances: list
    s: float
    converged: bool = False
    contracting: bool = True

    @property
    def ratios(self) -> list:
        d = self.distances
        return [d[m + 1] / d[m] for m in range(len(d) - 1) if d[m] > 0]

    @property
    def pairs(self) -> list:
        return list(zip(self.iterates[1:], self.distances))

    @property
    def fixed_point(self) -> Trajectory:
        return self.iterates[-1]


def default_picard_window(u0: RealField) -> float:
    """``min(0.05, 0.1 / ||u0||_{H^1})``."""
    from .diagnostics import sobolev_norm

    norm = sobolev_norm(u0, 1.0)
    return 0.05 if norm == 0 else min(0.05, 0.1 / norm)


def picard_iterate(
    u0: RealField,
    delta: float,
    n_iter: int,
    params: EvolutionParams,
    s: float = 1.0,
    floor: float = 1e-14,
) -> PicardResult:
    """Picard iteration of the Duhamel map on ``[0, delta]``.

    The time lattice has step ``delta / ceil(delta / params.dt)``. Iteration stops
    early once a distance drops below ``floor`` times the size of the iterate
    (``converged``). Three consecutive increases of the distance mark the run
    as non-contracting; this is reported, not raised.
    """
    _check_order(u0, params)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if n_iter < 1:
        raise ValueError("n_iter must be a positive integer")
    if abs(u0.coeffs[0]) != 0.0:
        raise ValueError("initial data must have zero mean")
    n_steps = max(2, math.ceil(delta / params.dt - 1e-9))
    times = np.arange(n_steps + 1) * (delta / n_steps)
    ops = _Operators(u0.grid, params.dealias, params.nonlinear)
    c0 = _half(u0)

    current = free_trajectory(u0, times)
    result = PicardResult(iterates=[current], distances=[], s=s)
    weight = (1.0 + u0.grid.modes.astype(np.float64) ** 2) ** s
    rising = 0
    for m in range(n_iter):
        rows = _duhamel_rows(ops, c0, current, range(len(times)))
        if not np.all(np.isfinite(rows)):
            raise BlowUpError(m, float(times[-1]))
        nxt = Trajectory(u0.grid, times, _full_from_half(rows))
        dist = _sup_distance(nxt, current, s)
        result.iterates.append(nxt)
        result.distances.append(dist)
        current = nxt
        if len(result.distances) > 1 and dist > result.distances[-2]:
            rising += 1
            if rising >= 3:
                result.contracting = False
                log.warning("Picard distances increased 3 times in a row; delta too large")
                break
        else:
            rising = 0
        size = float(np.sqrt(np.max(np.sum(weight * np.abs(nxt.coeffs) ** 2, axis=1))))
        if dist <= floor * max(size, 1e-300):
            result.converged = True
            break
    return result
