"""Discrete Bourgain norms on a space-time lattice and random probes of L^4 / bilinear bounds.

A :class:`SpaceTimeField` stores ``F(k, tau)`` for ``-n/2 < k <= n/2`` and
``tau = (2pi / t_window) * m``, ``-n_time/2 < m <= n_time/2``, and represents

    v(x, t) = sum_k sum_tau exp(i k x + i tau t) F(k, tau) dtau,   dtau = 2pi / t_window,

on ``[0, 2pi) x [0, t_window)``. The modulation is ``sigma = tau - omega(k)`` so that
free solutions sit on ``sigma = 0``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import dispersion_phase
from .spectral import TWO_PI, Grid


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    grid: Grid
    n_time: int
    t_window: float
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        nt = self.n_time
        if nt < 2 or nt & (nt - 1):
            raise ValueError(f"n_time must be a power of two, got {nt}")
        if not self.t_window > 0:
            raise ValueError("t_window must be positive")
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n_points, nt):
            raise ValueError(f"coeffs must have shape {(self.grid.n_points, nt)}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid, n_time: int, t_window: float) -> "SpaceTimeField":
        return cls(grid, n_time, t_window, np.zeros((grid.n_points, n_time)))

    @property
    def dtau(self) -> float:
        return TWO_PI / self.t_window

    @property
    def tau_index(self) -> np.ndarray:
        nt = self.n_time
        m = np.fft.fftfreq(nt, d=1.0 / nt).astype(np.int64)
        m[nt // 2] = nt // 2
        return m

    @property
    def taus(self) -> np.ndarray:
        return self.tau_index * self.dtau

    def sigma(self) -> np.ndarray:
        omega = dispersion_phase(self.grid.modes, self.grid.j)
        return self.taus[None, :] - omega[:, None]

    def with_coeffs(self, coeffs) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.n_time, self.t_window, coeffs)

    def __mul__(self, scalar) -> "SpaceTimeField":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def reality_defect(self) -> float:
        c = self.coeffs
        scale = np.max(np.abs(c), initial=0.0)
        if scale == 0:
            return 0.0
        mirror = np.conj(np.roll(c[::-1, ::-1], 1, axis=(0, 1)))
        return float(np.max(np.abs(c - mirror)) / scale)


def japanese(x):
    return np.sqrt(1.0 + np.asarray(x, dtype=np.float64) ** 2)


def symmetrize(F: SpaceTimeField) -> SpaceTimeField:
    """Real part projection ``(F(k, tau) + conj F(-k, -tau)) / 2`` with mean and Nyquist rows removed."""
    c = F.coeffs
    mirror = np.conj(np.roll(c[::-1, ::-1], 1, axis=(0, 1)))
    out = 0.5 * (c + mirror)
    out[0, :] = 0.0
    out[F.grid.n_points // 2, :] = 0.0
    out[:, F.n_time // 2] = 0.0
    return F.with_coeffs(out)


def _k_weight(F: SpaceTimeField, s: float) -> np.ndarray:
    k = F.grid.modes.astype(np.float64)
    return (1.0 + k * k) ** s


def xsb_norm(F: SpaceTimeField, s: float, b: float) -> float:
    """``(sum <k>^{2s} <tau - omega(k)>^{2b} |F|^2 dtau)^(1/2)``."""
    w = _k_weight(F, s)[:, None] * japanese(F.sigma()) ** (2 * b)
    return float(np.sqrt(np.sum(w * np.abs(F.coeffs) ** 2) * F.dtau))


def _l2l1(F: SpaceTimeField, s: float, tau_weight: np.ndarray) -> float:
    inner = np.sum(np.abs(F.coeffs) * tau_weight, axis=1) * F.dtau
    return float(np.sqrt(np.sum(_k_weight(F, s) * inner**2)))


def ys_norm(F: SpaceTimeField, s: float) -> float:
    """``X_{s,1/2}`` norm plus the ``L^2(k) L^1(tau)`` norm of ``<k>^s F``."""
    return xsb_norm(F, s, 0.5) + _l2l1(F, s, 1.0)


def zs_norm(F: SpaceTimeField, s: float) -> float:
    """``X_{s,-1/2}`` norm plus the ``L^2(k) L^1(tau)`` norm of ``<k>^s <sigma>^{-1/2} F``."""
    return xsb_norm(F, s, -0.5) + _l2l1(F, s, japanese(F.sigma()) ** -0.5)


# ---- physical space ------------------------------------------------------------


def _has_nyquist(F: SpaceTimeField) -> bool:
    c = F.coeffs
    return bool(np.any(c[F.grid.n_points // 2, :]) or np.any(c[:, F.n_time // 2]))


def to_physical(F: SpaceTimeField, pad: int = 2) -> np.ndarray:
    """Samples of ``v`` on a ``(pad * n_points, pad * n_time)`` grid."""
    n, nt = F.grid.n_points, F.n_time
    big = np.zeros((pad * n, pad * nt), dtype=np.complex128)
    rows = F.grid.modes % (pad * n)
    cols = F.tau_index % (pad * nt)
    big[np.ix_(rows, cols)] = F.coeffs
    return np.fft.ifft2(big) * (big.size * F.dtau)


def from_physical(v: np.ndarray, grid: Grid, t_window: float) -> SpaceTimeField:
    """Inverse of :func:`to_physical` for an unpadded ``(n_points, n_time)`` sample array."""
    dtau = TWO_PI / t_window
    return SpaceTimeField(grid, v.shape[1], t_window, np.fft.fft2(v) / (v.size * dtau))


def l4_norm(F: SpaceTimeField) -> float:
    """``(int_0^{t_window} int_0^{2pi} |v|^4 dx dt)^(1/4)``, exact for the lattice field."""
    # |v|^2 has twice the bandwidth of v; a 2x grid integrates it exactly unless
    # Nyquist entries are populated, in which case use 4x.
    pad = 4 if _has_nyquist(F) else 2
    v = to_physical(F, pad)
    return float((np.mean(np.abs(v) ** 4) * TWO_PI * F.t_window) ** 0.25)


def bilinear_form(form: str, u1: SpaceTimeField, u2: SpaceTimeField) -> SpaceTimeField:
    """``d_x (1 - d_x^2)^{-1} [d_x u1 * d_x u2]`` (``lemma31``) or ``d_x [u1 u2]`` (``lemma32``).

    The product is formed on a doubled grid, so the result lives exactly on a lattice
    with ``2 n_points`` modes and ``2 n_time`` frequencies.
    """
    if (u1.grid, u1.n_time, u1.t_window) != (u2.grid, u2.n_time, u2.t_window):
        raise ValueError("bilinear inputs must share their lattice")
    k = u1.grid.modes.astype(np.float64)
    if form == "lemma31":
        a = u1.with_coeffs(1j * k[:, None] * u1.coeffs)
        b = u2.with_coeffs(1j * k[:, None] * u2.coeffs)
    elif form == "lemma32":
        a, b = u1, u2
    else:
        raise ValueError(f"unknown bilinear form {form!r}")
    prod = to_physical(a, 2) * to_physical(b, 2)
    big_grid = Grid(2 * u1.grid.n_points, u1.grid.j)
    P = from_physical(prod, big_grid, u1.t_window)
    kk = big_grid.modes.astype(np.float64)
    sym = 1j * kk
    if form == "lemma31":
        sym = sym / (1.0 + kk * kk)
    sym[big_grid.n_points // 2] = 0.0
    return P.with_coeffs(sym[:, None] * P.coeffs)


# ---- random probes -------------------------------------------------------------


@dataclass
class ProbeReport:
    n_samples: int
    ratio_max: float
    ratio_mean: float
    argmax_seed: int
    resolution: tuple
    resampled: int = 0
    ratios: list = field(default_factory=list, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "ratio_max": self.ratio_max,
            "ratio_mean": self.ratio_mean,
            "argmax_seed": self.argmax_seed,
            "resolution": list(self.resolution),
            "resampled": self.resampled,
        }


def sample_seeds(seed: int, n_samples: int) -> list:
    return [int(v) for v in np.random.SeedSequence(seed).generate_state(n_samples)]


def random_field(
    rng: np.random.Generator,
    grid: Grid,
    n_time: int,
    t_window: float,
    concentrated: Optional[bool] = None,
) -> SpaceTimeField:
    """Gaussian lattice field, symmetrized to be real.

    With probability 1/2 (or when ``concentrated`` is true) the mass is placed only
    on the two lattice frequencies bracketing ``tau = omega(k)`` for each ``k`` whose
    characteristic lies inside the lattice; otherwise every lattice point is drawn.
    """
    F = SpaceTimeField.zeros(grid, n_time, t_window)
    if concentrated is None:
        concentrated = bool(rng.random() < 0.5)
    shape = (grid.n_points, n_time)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if concentrated:
        sig = F.sigma()
        g = np.where(np.abs(sig) < F.dtau, g, 0.0)
    return symmetrize(F.with_coeffs(g))


def _reduce(ratios, seeds, resolution, resampled) -> ProbeReport:
    arr = np.asarray(ratios)
    i = int(np.argmax(arr))
    return ProbeReport(
        n_samples=len(ratios),
        ratio_max=float(arr[i]),
        ratio_mean=float(np.mean(arr)),
        argmax_seed=seeds[i],
        resolution=resolution,
        resampled=resampled,
        ratios=[float(r) for r in ratios],
    )


def _run_samples(fn, seeds, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, seeds))
    return [fn(sd) for sd in seeds]


def l4_ratio(F: SpaceTimeField) -> float:
    """``||v||_{L^4} / ||F||_{X_{0,b}}`` with ``b = (j+1) / (2(2j+1))``."""
    j = F.grid.j
    return l4_norm(F) / xsb_norm(F, 0.0, (j + 1) / (2 * (2 * j + 1)))


def l4_probe(
    n_samples: int,
    grid: Grid,
    n_time: int,
    t_window: float,
    seed: int,
    workers: int = 1,
    concentrated: Optional[bool] = None,
) -> ProbeReport:
    """Random-ensemble maximum of ``||v||_{L^4} / ||v||_{X_{0,(j+1)/(2(2j+1))}}``."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    seeds = sample_seeds(seed, n_samples)

    def one(sd):
        rng = np.random.default_rng(sd)
        tries = 0
        while True:
            F = random_field(rng, grid, n_time, t_window, concentrated)
            den = xsb_norm(F, 0.0, (grid.j + 1) / (2 * (2 * grid.j + 1)))
            if den > 0:
                return l4_norm(F) / den, tries
            tries += 1

    out = _run_samples(one, seeds, workers)
    return _reduce([r for r, _ in out], seeds, (grid.n_points, n_time), sum(t for _, t in out))


BILINEAR_THRESHOLDS = {
    "lemma31": lambda j: (2 - j) / 2,
    "lemma32": lambda j: -j / 2,
}


def bilinear_ratio(form: str, u1: SpaceTimeField, u2: SpaceTimeField, s: float) -> float:
    den = xsb_norm(u1, s, 0.5) * xsb_norm(u2, s, 0.5)
    if den == 0:
        raise ZeroDivisionError("bilinear ratio with zero denominator")
    return xsb_norm(bilinear_form(form, u1, u2), s, -0.5) / den


def bilinear_probe(
    form: str,
    s: float,
    n_samples: int,
    grid: Grid,
    n_time: int,
    t_window: float,
    seed: int,
    workers: int = 1,
    concentrated: Optional[bool] = None,
) -> ProbeReport:
    """Random-ensemble maximum of ``||B(u1,u2)||_{X_{s,-1/2}} / prod ||u_l||_{X_{s,1/2}}``."""
    if form not in BILINEAR_THRESHOLDS:
        raise ValueError(f"unknown bilinear form {form!r}")
    threshold = BILINEAR_THRESHOLDS[form](grid.j)
    if s < threshold - 1e-12:
        raise ValueError(f"{form} needs s >= {threshold} for j={grid.j}, got {s}")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    seeds = sample_seeds(seed, n_samples)

    def one(sd):
        rng = np.random.default_rng(sd)
        tries = 0
        while True:
            u1 = random_field(rng, grid, n_time, t_window, concentrated)
            u2 = random_field(rng, grid, n_time, t_window, concentrated)
            try:
                return bilinear_ratio(form, u1, u2, s), tries
            except ZeroDivisionError:
                tries += 1

    out = _run_samples(one, seeds, workers)
    return _reduce([r for r, _ in out], seeds, (grid.n_points, n_time), sum(t for _, t in out))
