"""Polynomial growth law for ``||u(T)||_{H^s}`` below the energy space and long-run monitoring."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import sobolev_norm
from .dynamics import EvolutionParams, evolve
from .imethod import fit_power_law
from .spectral import RealField


def s_threshold(j: int) -> float:
    """Lower end of the admissible range, ``(2j + 1 - j^2) / (2j + 1)`` (excluded)."""
    return (2 * j + 1 - j * j) / (2 * j + 1)


def default_epsilon(j: int) -> float:
    return 1e-6 / (2 * j + 1)


@dataclass(frozen=True)
class GrowthLaw:
    j: int
    s: float
    epsilon: float
    f_j: float
    exponent_T: float
    exponent_data: float

    def bound(self, t: float, data_norm: float, const: float = 1.0) -> float:
        return const * t**self.exponent_T * data_norm**self.exponent_data


def growth_exponents(j: int, s: float, epsilon: Optional[float] = None) -> GrowthLaw:
    """Exponents of ``C T^a ||u0||_{H^s}^b`` with ``f(j) = (2j+1) / (j - 3(2j+1) eps)``.

    ``a = (1 - s) / (j - f(j)(1 - s))`` and ``b = j / (j - f(j)(1 - s))``.
    """
    if j < 1:
        raise ValueError("j must be a positive integer")
    if epsilon is None:
        epsilon = default_epsilon(j)
    eps_max = 1.0 / (10000 * (2 * j + 1))
    if not 0 < epsilon < eps_max:
        raise ValueError(f"epsilon must lie in (0, {eps_max}), got {epsilon}")
    thr = s_threshold(j)
    if not thr < s <= 1:
        raise ValueError(f"s must satisfy {thr} < s <= 1 for j={j}, got {s}")
    f_j = (2 * j + 1) / (j - 3 * (2 * j + 1) * epsilon)
    denom = j - f_j * (1 - s)
    if denom <= 0:
        raise ValueError(f"law is vacuous: j - f(j)(1-s) = {denom} <= 0")
    return GrowthLaw(j, s, epsilon, f_j, (1 - s) / denom, j / denom)


@dataclass
class CampaignResult:
    law: GrowthLaw
    times: np.ndarray
    sup_hs: np.ndarray
    measured_exponent: float
    within_bound: bool

    def summary(self) -> dict:
        return {
            "j": self.law.j,
            "s": self.law.s,
            "epsilon": self.law.epsilon,
            "f_j": self.law.f_j,
            "exponent_T": self.law.exponent_T,
            "exponent_data": self.law.exponent_data,
            "measured_exponent": self.measured_exponent,
            "within_bound": self.within_bound,
            "t_end": float(self.times[-1]),
            "sup_hs_final": float(self.sup_hs[-1]),
        }


TOLERANCE = 0.1


def growth_campaign(
    u0: RealField,
    j: int,
    s: float,
    t_end: float,
    params: EvolutionParams,
    record_every: int = 100,
    epsilon: Optional[float] = None,
) -> CampaignResult:
    """Evolve to ``t_end`` and fit the running supremum of ``||u||_{H^s}`` against ``t``.

    The fit is a least-squares line in ``(log t, log sup)`` over recorded times ``t > 0``.
    Blow-up propagates as :class:`~hsw.dynamics.BlowUpError`.
    """
    law = growth_exponents(j, s, epsilon)
    p = EvolutionParams(j, params.dt, t_end, params.dealias, params.nonlinear)
    traj = evolve(u0, p, record_every=record_every)
    norms = np.array([sobolev_norm(traj.state(i), s) for i in range(len(traj))])
    sup = np.maximum.accumulate(norms)
    times = np.asarray(traj.times)
    pos = times > 0
    if np.count_nonzero(pos) >= 2 and np.ptp(sup[pos]) > 0:
        slope, _, _ = fit_power_law(times[pos], sup[pos])
    else:
        slope = 0.0
    return CampaignResult(law, times, sup, slope, slope <= law.exponent_T + TOLERANCE)
