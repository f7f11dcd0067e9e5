"""Grids, real periodic fields and diagonal Fourier multipliers on the 2*pi torus.

Coefficients follow the normalization

    c(k) = (1 / 2pi) * integral_0^{2pi} exp(-i k x) f(x) dx,

so ``f(x) = sum_k c(k) exp(i k x)`` and Parseval reads
``sum_k |c(k)|^2 = (1 / 2pi) * integral |f|^2``.

Coefficient arrays are stored in FFT order (``0, 1, ..., n/2 - 1, n/2, -n/2 + 1, ..., -1``);
the Nyquist slot is labelled ``+n/2``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np

TWO_PI = 2.0 * np.pi

HERMITIAN_RTOL = 1e-14
IMAG_RESIDUE_RTOL = 1e-12


class SymmetryError(ValueError):
    """Coefficients (or a symbol applied to them) break Hermitian symmetry."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, 2pi) with ``n_points`` samples and equation order ``j``."""

    n_points: int
    j: int = 1

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 8, got {n!r}")
        if not isinstance(self.j, (int, np.integer)) or self.j < 1:
            raise ValueError(f"j must be a positive integer, got {self.j!r}")

    @property
    def length(self) -> float:
        return TWO_PI

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n_points

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * self.spacing

    @property
    def modes(self) -> np.ndarray:
        """Integer wavenumbers in storage order, Nyquist labelled ``+n/2``."""
        n = self.n_points
        k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        k[n // 2] = n // 2
        return k

    @property
    def k_dealias(self) -> int:
        """Largest mode kept by the two-thirds rule."""
        return self.n_points // 3

    def ascending(self) -> np.ndarray:
        """Storage indices of modes ``-n/2+1 .. n/2`` in ascending order."""
        return np.argsort(self.modes, kind="stable")

    def index_of(self, k: int) -> int:
        n = self.n_points
        if not -n // 2 < k <= n // 2:
            raise ValueError(f"mode {k} outside (-{n // 2}, {n // 2}]")
        return k % n


def _mirror_index(n: int) -> np.ndarray:
    # storage index of -k for each storage index of k (Nyquist maps to itself)
    return (-np.arange(n)) % n


def hermitian_defect(coeffs: np.ndarray) -> float:
    """Relative size of the anti-Hermitian part ``c(k) - conj(c(-k))``."""
    coeffs = np.asarray(coeffs)
    scale = np.max(np.abs(coeffs), initial=0.0)
    if scale == 0.0:
        return 0.0
    mirror = np.conj(coeffs[_mirror_index(coeffs.size)])
    return float(np.max(np.abs(coeffs - mirror)) / scale)


@dataclass(frozen=True, eq=False)
class RealField:
    """A real 2pi-periodic function held by its Fourier coefficients."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} coefficients, got shape {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid) -> "RealField":
        return cls(grid, np.zeros(grid.n_points, dtype=np.complex128))

    @classmethod
    def from_modes(cls, grid: Grid, values: dict) -> "RealField":
        """Build from ``{k: c(k)}``; entries for ``-k`` are not implied."""
        c = np.zeros(grid.n_points, dtype=np.complex128)
        for k, v in values.items():
            c[grid.index_of(int(k))] = v
        return cls(grid, c)

    def coeff(self, k: int) -> complex:
        return complex(self.coeffs[self.grid.index_of(k)])

    @property
    def mean(self) -> float:
        return float(self.coeffs[0].real)

    def samples(self) -> np.ndarray:
        return inverse_transform(self)

    def __add__(self, other: "RealField") -> "RealField":
        _check_same_grid(self, other)
        return RealField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "RealField") -> "RealField":
        _check_same_grid(self, other)
        return RealField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "RealField":
        return RealField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "RealField":
        return RealField(self.grid, -self.coeffs)


def _check_same_grid(a: RealField, b: RealField) -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def forward_transform(samples, grid: Grid) -> RealField:
    """Coefficients of real samples taken at ``grid.x``."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape != (grid.n_points,):
        raise ValueError(
            f"expected {grid.n_points} samples, got shape {samples.shape}"
        )
    return RealField(grid, _full_from_half(np.fft.rfft(samples) / grid.n_points))


def _full_from_half(half: np.ndarray) -> np.ndarray:
    # exact Hermitian completion of an rfft half-spectrum (last axis)
    n = 2 * (half.shape[-1] - 1)
    full = np.empty(half.shape[:-1] + (n,), dtype=np.complex128)
    full[..., : n // 2 + 1] = half
    full[..., n // 2 + 1 :] = np.conj(half[..., 1 : n // 2][..., ::-1])
    return full


def inverse_transform(fld: RealField) -> np.ndarray:
    """Real samples of ``fld`` on its grid.

    Raises
    ------
    SymmetryError
        If the coefficients are not Hermitian to within ``1e-12`` relative.
    """
    defect = hermitian_defect(fld.coeffs)
    if defect > IMAG_RESIDUE_RTOL:
        raise SymmetryError(
            f"coefficients are not Hermitian (relative defect {defect:.3e})"
        )
    n = fld.grid.n_points
    return np.fft.irfft(fld.coeffs[: n // 2 + 1] * n, n=n)


Symbol = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


def symbol_values(symbol: Symbol, grid: Grid) -> np.ndarray:
    if callable(symbol):
        values = symbol(grid.modes)
    else:
        values = symbol
    values = np.broadcast_to(np.asarray(values, dtype=np.complex128), (grid.n_points,))
    return values


def apply_symbol(fld: RealField, symbol: Symbol, real: bool = True) -> RealField:
    """Multiply each coefficient ``c(k)`` by ``symbol(k)``.

    ``symbol`` is either a vectorized callable of the integer mode array or an
    array already laid out in storage order. With ``real=True`` the product
    must stay Hermitian; otherwise :class:`SymmetryError` is raised.
    """
    out = fld.coeffs * symbol_values(symbol, fld.grid)
    if real:
        defect = hermitian_defect(out)
        if defect > HERMITIAN_RTOL * 100:
            raise SymmetryError(
                f"symbol breaks Hermitian symmetry (relative defect {defect:.3e})"
            )
    return RealField(fld.grid, out)


def dealias_mask(grid: Grid) -> np.ndarray:
    return np.abs(grid.modes) <= grid.k_dealias


def dealias(fld: RealField) -> RealField:
    """Two-thirds rule: zero every mode with ``|k| > n_points / 3``."""
    return RealField(fld.grid, np.where(dealias_mask(fld.grid), fld.coeffs, 0.0))


def project_zero_mean(fld: RealField) -> RealField:
    c = fld.coeffs.copy()
    c[0] = 0.0
    return RealField(fld.grid, c)


# ---- Fourier symbols used by the evolution law -------------------------------


def derivative_symbol(grid: Grid, order: int = 1) -> np.ndarray:
    """``(ik)^order`` with the Nyquist entry zeroed for odd orders."""
    k = grid.modes.astype(np.float64)
    sym = (1j * k) ** order
    if order % 2:
        sym[grid.n_points // 2] = 0.0
    return sym


def helmholtz_inverse_symbol(grid: Grid) -> np.ndarray:
    """Symbol of ``(1 - d_x^2)^{-1}``."""
    k = grid.modes.astype(np.float64)
    return 1.0 / (1.0 + k * k) + 0j


# ---- snapshot files ----------------------------------------------------------


def field_to_csv(fld: RealField) -> str:
    """Snapshot text with header ``k,re,im``, rows for ``|k| <= n/2`` ascending."""
    n = fld.grid.n_points
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "re", "im"])
    for k in range(-n // 2, n // 2 + 1):
        if k == -n // 2:
            # the Nyquist mode is stored once; split it evenly between +-n/2
            c = fld.coeffs[n // 2] / 2
        elif k == n // 2:
            c = fld.coeffs[n // 2] / 2
        else:
            c = fld.coeffs[k % n]
        writer.writerow([k, repr(float(c.real)), repr(float(c.imag))])
    return buf.getvalue()


def field_from_csv(text: str, j: int = 1) -> RealField:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty field snapshot")
    ks = [int(r["k"]) for r in rows]
    if ks != sorted(ks) or len(set(ks)) != len(ks):
        raise ValueError("snapshot modes must be strictly ascending")
    n = 2 * max(abs(k) for k in ks)
    grid = Grid(n, j)
    c = np.zeros(n, dtype=np.complex128)
    for k, r in zip(ks, rows):
        if abs(k) > n // 2:
            raise ValueError(f"mode {k} outside |k| <= {n // 2}")
        c[k % n] += complex(float(r["re"]), float(r["im"]))
    return RealField(grid, c)


def write_field(path, fld: RealField) -> None:
    Path(path).write_text(field_to_csv(fld))


def read_field(path, j: int = 1) -> RealField:
    return field_from_csv(Path(path).read_text(), j=j)
