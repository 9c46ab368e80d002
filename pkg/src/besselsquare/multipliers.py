"""Spectral multipliers m(L_nu) and the variation norm that controls them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .fourier_bessel import CoefficientVector, SampledFunction, SpectralBasis, analyze, unit_grid
from .quadrature import TimeGrid
from .square_functions import default_time_grid, g_discrete

DEFAULT_VARIATION_EXPONENT = 5


@dataclass(frozen=True)
class MultiplierSeq:
    """Entries m_1, m_2, ... aligned with the zeros s_1, s_2, ..."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("multiplier must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise ValueError("multiplier entries must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __mul__(self, a) -> "MultiplierSeq":
        return MultiplierSeq(a * self.values)

    __rmul__ = __mul__

    @classmethod
    def from_function(cls, func, zeros) -> "MultiplierSeq":
        """m_j = func(s_j)."""
        return cls(np.asarray(func(np.asarray(zeros, dtype=float))))


def apply_multiplier(c: CoefficientVector, m: MultiplierSeq) -> CoefficientVector:
    """c_j -> m_j c_j."""
    J = c.basis.J
    if len(m) < J:
        raise ValueError(f"multiplier has {len(m)} entries, basis needs {J}")
    return CoefficientVector(c.basis, m.values[:J] * c.values)


@dataclass(frozen=True)
class VariationNorm:
    value: float
    sup_part: float
    variation_part: float
    tail_bound: float
    L: int
    exponent: float

    def __float__(self):
        return self.value


def variation_norm(m: MultiplierSeq, L: int | None = None,
                   exponent: float = DEFAULT_VARIATION_EXPONENT) -> VariationNorm:
    """sup_j |m_j| + (sum_{l<=L} l^-s sum_{k<=l} |m_{k+1} - m_k|^2)^(1/2).

    The supremum runs over j <= L+1. ``tail_bound`` majorises the omitted
    part of the double sum (inside the square root) by
    ``max_k |m_{k+1}-m_k|^2 * sum_{l>L} l^(1-s)``.
    """
    v = m.values
    if L is None:
        L = v.size - 1
    L = int(L)
    if not 1 <= L <= v.size - 1:
        raise ValueError(f"L must lie in 1..{v.size - 1}")
    if exponent <= 2:
        raise ValueError("exponent must exceed 2 for the tail majorant to converge")
    sup_part = float(np.max(np.abs(v[: L + 1])))
    d2 = np.abs(np.diff(v[: L + 1])) ** 2  # |m_{k+1}-m_k|^2, k = 1..L
    inner = np.cumsum(d2)  # sum_{k<=l}
    ell = np.arange(1, L + 1, dtype=float)
    var2 = float(np.sum(inner * ell**-exponent))
    dmax = float(np.max(np.abs(np.diff(v)))) ** 2 if v.size > 1 else 0.0
    tail = dmax * float(special.zeta(exponent - 1.0, L + 1))
    return VariationNorm(sup_part + math.sqrt(var2), sup_part, math.sqrt(var2), tail, L,
                         float(exponent))


def j_of_t(basis: SpectralBasis, t) -> int:
    """max{j : s_j <= t} (0 when t < s_1); requires t < s_{J+1}."""
    zeros = basis.table.zeros
    if t >= zeros[-1]:
        raise ValueError(f"t={t} beyond the tabulated zeros of this basis")
    return int(np.searchsorted(basis.zeros, t, side="right"))


def h1_truncated(c: CoefficientVector, t) -> CoefficientVector:
    """c_j -> (s_j/t)^2 c_j for s_j <= t (closed endpoint), else 0."""
    if t <= 0:
        raise ValueError("t must be positive")
    s = c.basis.zeros
    return c.scaled(np.where(s <= t, (s / t) ** 2, 0.0))


def abel_identity(c: CoefficientVector, m: MultiplierSeq, t):
    """Both sides of the summation-by-parts identity

    H_t(m(L) f) = m_{j(t)+1} H_t f - sum_{k<=j(t)} (m_{k+1}-m_k) sum_{j<=k} (s_j/t)^2 c_j phi_j

    as coefficient arrays ``(lhs, rhs)``.
    """
    jt = j_of_t(c.basis, t)
    if len(m) < jt + 1:
        raise ValueError("multiplier too short for j(t)+1")
    h = h1_truncated(c, t).values
    lhs = np.zeros_like(h, dtype=np.result_type(h, m.values))
    lhs[:jt] = m.values[:jt] * h[:jt]
    rhs = np.zeros_like(lhs)
    if jt == 0:
        return lhs, rhs
    rhs[:jt] = m.values[jt] * h[:jt]
    dm = np.diff(m.values[: jt + 1])  # m_{k+1} - m_k, k = 1..j(t)
    # row k holds the partial sum sum_{j<=k} (s_j/t)^2 c_j e_j
    partial = np.tril(np.ones((jt, jt))) * h[:jt]
    rhs[:jt] -= dm @ partial
    return lhs, rhs


@dataclass(frozen=True)
class DominationReport:
    max_ratio: float
    violations: int
    n_points: int
    norm: float
    passed: bool
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)


def domination_check(f, m: MultiplierSeq, basis: SpectralBasis, grid: TimeGrid | None = None,
                     x: SampledFunction | None = None, *, rel_tol=1e-8,
                     exponent: float = DEFAULT_VARIATION_EXPONENT, workers: int = 1
                     ) -> DominationReport:
    """Compare G_1(m(L) f)(x) with |||m||| G_1(f)(x) on a spatial grid.

    ``max_ratio`` is max_x G_1(m(L)f)(x) / (|||m||| G_1(f)(x)); the check
    passes when it does not exceed ``1 + rel_tol``.
    """
    c = f if isinstance(f, CoefficientVector) else analyze(f, basis)
    if grid is None:
        grid = default_time_grid(basis, 1.0)
    if x is None:
        x = unit_grid(basis.nu, basis.J)
    norm = variation_norm(m, basis.J, exponent).value
    lhs = g_discrete(apply_multiplier(c, m), basis, 1.0, grid, x, workers=workers).values
    rhs = norm * g_discrete(c, basis, 1.0, grid, x, workers=workers).values
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
    bad = int(np.count_nonzero(ratio > 1.0 + rel_tol))
    return DominationReport(float(ratio.max()), bad, ratio.size, norm, bad == 0, lhs, rhs)
