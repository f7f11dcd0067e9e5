"""The I-operator, the modified energy ``||Iu||_{H^1}^2`` and its commutator decomposition.

For a solution on ``[0, delta]`` the increment of the modified energy splits as

    E(delta) - E(0) = T1 + T2 + T3,
    T1 = int int (1 - d^2) d_x(Iu) [I(u^2) - (Iu)^2],
    T2 = 2 int int d_x(Iu) [I(u^2) - (Iu)^2],
    T3 = int int d_x(Iu) [I(u_x^2) - (d_x Iu)^2],

where the spatial integral uses the normalized measure ``dx / 2pi`` (the same one
that makes ``E = sum_k (1 + k^2) |c(k)|^2``). All three brackets vanish when ``I``
is the identity on the active modes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .diagnostics import h1_energy
from .dynamics import EvolutionParams, Trajectory, evolve
from .spectral import Grid, RealField, apply_symbol

log = logging.getLogger(__name__)

NOISE_FLOOR = 1e-14


@dataclass(frozen=True)
class IMultiplier:
    """Fourier multiplier ``m(k) = 1`` for ``|k| <= N`` and ``(N/|k|)^(1-s)`` beyond."""

    s: float
    n_cutoff: int

    def __post_init__(self):
        if not 0 < self.s <= 1:
            raise ValueError(f"s must lie in (0, 1], got {self.s}")
        if self.n_cutoff < 1:
            raise ValueError(f"N must be a positive integer, got {self.n_cutoff}")

    def __call__(self, k):
        return multiplier(k, self)

    def is_identity_on(self, grid: Grid, k_active: Optional[int] = None) -> bool:
        k_active = grid.n_points // 2 if k_active is None else k_active
        return self.s == 1 or self.n_cutoff >= k_active


def multiplier(k, im: IMultiplier):
    ak = np.abs(np.asarray(k, dtype=np.float64))
    safe = np.maximum(ak, 1.0)
    m = np.where(ak <= im.n_cutoff, 1.0, (im.n_cutoff / safe) ** (1.0 - im.s))
    return float(m) if np.ndim(m) == 0 else m


def apply_I(u: RealField, im: IMultiplier) -> RealField:
    return apply_symbol(u, multiplier(u.grid.modes, im))


def modified_energy(u: RealField, im: IMultiplier) -> float:
    return h1_energy(apply_I(u, im))


@dataclass(frozen=True)
class CommutatorTerms:
    t1: float
    t2: float
    t3: float

    @property
    def total(self) -> float:
        return self.t1 + self.t2 + self.t3

    def __iter__(self):
        return iter((self.t1, self.t2, self.t3))


def _half_weights(n: int) -> np.ndarray:
    # Parseval weights for a pairing of two real fields given by rfft halves
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def commutator_densities(traj: Trajectory, im: IMultiplier) -> np.ndarray:
    """Per-time spatial integrals of the three commutator terms, shape ``(n_times, 3)``."""
    grid = traj.grid
    n = grid.n_points
    c = traj.coeffs[:, : n // 2 + 1]
    k = np.arange(n // 2 + 1, dtype=np.float64)
    m = multiplier(k, im)
    ik = 1j * k
    ik[-1] = 0.0

    u = np.fft.irfft(c * n, n=n, axis=-1)
    ux = np.fft.irfft(ik * c * n, n=n, axis=-1)
    v_hat = m * c
    v = np.fft.irfft(v_hat * n, n=n, axis=-1)
    vx_hat = ik * v_hat
    vx = np.fft.irfft(vx_hat * n, n=n, axis=-1)

    bracket_a = m * np.fft.rfft(u * u, axis=-1) / n - np.fft.rfft(v * v, axis=-1) / n
    bracket_b = m * np.fft.rfft(ux * ux, axis=-1) / n - np.fft.rfft(vx * vx, axis=-1) / n

    w = _half_weights(n)

    def pair(f_hat, g_hat):
        return np.sum(w * (f_hat * np.conj(g_hat)).real, axis=-1)

    dens = np.empty((len(traj), 3))
    dens[:, 0] = pair((1.0 + k * k) * vx_hat, bracket_a)
    dens[:, 1] = 2.0 * pair(vx_hat, bracket_a)
    dens[:, 2] = pair(vx_hat, bracket_b)
    return dens


def commutator_terms(traj: Trajectory, im: IMultiplier) -> CommutatorTerms:
    """Space-time integrals T1, T2, T3; time integral by composite Simpson."""
    h = traj.uniform_step()
    if len(traj) < 2:
        return CommutatorTerms(0.0, 0.0, 0.0)
    dens = commutator_densities(traj, im)
    t1, t2, t3 = simpson(dens, dx=h, axis=0)
    return CommutatorTerms(float(t1), float(t2), float(t3))


def energy_increment(traj: Trajectory, im: IMultiplier) -> float:
    """``||I u(end)||_{H^1}^2 - ||I u(0)||_{H^1}^2`` measured directly."""
    return modified_energy(traj.state(-1), im) - modified_energy(traj.state(0), im)


@dataclass
class ScalingReport:
    s: float
    n_values: list
    increments: list
    slope: Optional[float]
    intercept: Optional[float]
    residual: Optional[float]
    excluded: list = field(default_factory=list)
    degenerate: bool = False

    def table_rows(self) -> list:
        return [
            (n, inc, abs(inc)) for n, inc in zip(self.n_values, self.increments)
        ]

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "excluded": list(self.excluded),
            "degenerate": self.degenerate,
        }


def fit_power_law(xs: Sequence[float], ys: Sequence[float]):
    """Least-squares slope, intercept and RMS residual of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(xs, dtype=np.float64))
    ly = np.log(np.asarray(ys, dtype=np.float64))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def increment_table(traj: Trajectory, im_list: Sequence[IMultiplier], workers: int = 1) -> list:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda im: energy_increment(traj, im), im_list))
    return [energy_increment(traj, im) for im in im_list]


def validate_ladder(u0: RealField, im_list: Sequence[IMultiplier]) -> None:
    """Check a cutoff ladder: at least 4 ascending distinct N, one s, each N in [k_lo, n/3]."""
    if len(im_list) < 4:
        raise ValueError("scaling study needs at least 4 values of N")
    ns = [im.n_cutoff for im in im_list]
    if len(set(ns)) != len(ns) or ns != sorted(ns):
        raise ValueError("N values must be distinct and ascending")
    if len({im.s for im in im_list}) != 1:
        raise ValueError("all multipliers must share one s")
    grid = u0.grid
    active = np.abs(grid.modes[np.abs(u0.coeffs) > 0])
    k_lo = int(active.min()) if active.size else 1
    for n_cut in ns:
        if n_cut > grid.n_points / 3 or n_cut < k_lo:
            raise ValueError(
                f"N={n_cut} outside [{k_lo}, {grid.n_points / 3:.1f}] (smallest active mode, n/3)"
            )


def scaling_study(
    u0: RealField,
    delta: float,
    im_list: Sequence[IMultiplier],
    params: EvolutionParams,
    workers: int = 1,
    traj: Optional[Trajectory] = None,
) -> ScalingReport:
    """Fit ``log |increment|`` against ``log N`` from one evolution over ``[0, delta]``."""
    validate_ladder(u0, im_list)
    ns = [im.n_cutoff for im in im_list]
    if traj is None:
        traj = evolve(u0, EvolutionParams(params.j, params.dt, delta, params.dealias, params.nonlinear))
    increments = increment_table(traj, im_list, workers)
    keep = [i for i, inc in enumerate(increments) if abs(inc) >= NOISE_FLOOR]
    excluded = [ns[i] for i in range(len(ns)) if i not in keep]
    if excluded:
        log.info("increments below noise floor for N=%s", excluded)
    s = im_list[0].s
    degenerate = s == 1 or len(keep) < 2
    slope = intercept = residual = None
    if not degenerate:
        slope, intercept, residual = fit_power_law(
            [ns[i] for i in keep], [abs(increments[i]) for i in keep]
        )
    return ScalingReport(
        s=s,
        n_values=ns,
        increments=[float(v) for v in increments],
        slope=slope,
        intercept=intercept,
        residual=residual,
        excluded=excluded,
        degenerate=degenerate,
    )
