"""Real-argument Bessel and Gamma-family special functions.

Bessel J/I values and the Beta function are delegated to ``scipy.special``;
zero finding, normalisation constants and the ``1F2`` series are computed
here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special


class SpecialFunctionError(ArithmeticError):
    """Base class for numerical failures in this module."""


class AccuracyLossError(SpecialFunctionError):
    pass


class ConvergenceError(SpecialFunctionError):
    pass


class PoleError(SpecialFunctionError):
    pass


@dataclass(frozen=True)
class BesselOrder:
    """A Bessel order ``nu > -1``."""

    nu: float

    def __post_init__(self):
        nu = float(self.nu)
        if not math.isfinite(nu) or nu <= -1.0:
            raise ValueError(f"Bessel order must satisfy nu > -1, got {self.nu!r}")

    def __float__(self):
        return float(self.nu)


def as_order(nu) -> float:
    """Validate an order given either as a number or a :class:`BesselOrder`."""
    if isinstance(nu, BesselOrder):
        return float(nu.nu)
    return float(BesselOrder(nu).nu)


def bessel_j(nu, x):
    """J_nu(x) for real ``x >= 0``.

    ``x = 0`` is accepted when ``nu >= 0``. Arrays are evaluated elementwise.
    """
    nu = as_order(nu)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("bessel_j is defined here for x >= 0 only")
    if nu < 0 and np.any(xa == 0):
        raise ValueError(f"J_{nu}(0) is unbounded for negative order")
    out = special.jv(nu, xa)
    if np.any(~np.isfinite(out)):
        raise AccuracyLossError(f"J_{nu} evaluation failed for some arguments")
    return out if out.ndim else float(out)


def bessel_i(nu, x):
    """I_nu(x) for real ``x >= 0``; overflows to ``inf`` for huge x, use
    :func:`bessel_i_scaled` there."""
    nu = as_order(nu)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("bessel_i is defined here for x >= 0 only")
    if nu < 0 and np.any(xa == 0):
        raise ValueError(f"I_{nu}(0) is unbounded for negative order")
    out = special.iv(nu, xa)
    return out if out.ndim else float(out)


def bessel_i_scaled(nu, x):
    """exp(-x) I_nu(x), finite for every ``x >= 0``."""
    nu = as_order(nu)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("bessel_i_scaled is defined here for x >= 0 only")
    if nu < 0 and np.any(xa == 0):
        raise ValueError(f"I_{nu}(0) is unbounded for negative order")
    out = special.ive(nu, xa)
    return out if out.ndim else float(out)


def mcmahon_zero(nu, j):
    """Leading-order McMahon estimate pi*(j + nu/2 - 1/4)."""
    return math.pi * (np.asarray(j, dtype=float) + 0.5 * float(nu) - 0.25)


_SCAN_STEP = 0.25


def _refine_brackets(nu, lo, hi, flo, tol=4e-16, maxiter=100):
    # safeguarded Newton: the iterate is kept inside [lo, hi] and the
    # bracket shrinks on every step, so convergence is guaranteed
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = special.jv(nu, x)
        dfx = (nu / x) * fx - special.jv(nu + 1.0, x)
        same = np.sign(fx) == np.sign(flo)
        lo = np.where(same, x, lo)
        flo = np.where(same, fx, flo)
        hi = np.where(same, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = fx / dfx
        xn = x - step
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        hit = fx == 0  # an exact root: keep it rather than bisect away from it
        xn = np.where(hit, x, xn)
        done = hit | (np.abs(xn - x) <= tol * np.abs(x))
        x = xn
        if np.all(done):
            return x
    raise ConvergenceError(f"zero refinement for J_{nu} did not converge")


@lru_cache(maxsize=128)
def _zeros(nu: float, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one zero")
    # J_nu has no zeros in (0, nu] for nu >= 0; it is positive near 0 for nu < 0
    # (x = 0 itself is a root of J_nu for nu > 0 and must stay off the scan grid)
    start = max(nu, 1e-3) if nu >= 0 else 1e-8
    end = float(mcmahon_zero(nu, n)) + 2 * math.pi
    zeros = np.empty(0)
    while zeros.size < n:
        grid = np.arange(start, end + _SCAN_STEP, _SCAN_STEP)
        vals = special.jv(nu, grid)
        if not np.all(np.isfinite(vals)):
            raise ConvergenceError(f"non-finite J_{nu} values while bracketing zeros")
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        exact = np.nonzero(vals == 0)[0]
        if exact.size:
            raise ConvergenceError("grid point landed on a zero; bracketing ambiguous")
        lo, hi = grid[idx], grid[idx + 1]
        zeros = _refine_brackets(nu, lo, hi, vals[idx]) if idx.size else np.empty(0)
        end += max(4 * math.pi, 0.25 * end)
    zeros = zeros[:n].copy()
    if np.any(np.diff(zeros) <= 0):
        raise ConvergenceError("zero table is not strictly increasing")
    zeros.setflags(write=False)
    return zeros


def bessel_zeros(nu, n: int) -> np.ndarray:
    """The first ``n`` positive zeros of J_nu, ascending (read-only array)."""
    return _zeros(as_order(nu), int(n))


def bessel_zero(nu, j: int) -> float:
    """The j-th positive zero s_{nu,j} of J_nu (``j >= 1``)."""
    j = int(j)
    if j < 1:
        raise ValueError("zero index starts at 1")
    return float(bessel_zeros(nu, j)[j - 1])


def normalization_d(nu, j):
    """d_{nu,j} = sqrt(2) / (sqrt(s) |J_{nu+1}(s)|) with s = s_{nu,j}.

    Tends to sqrt(pi) as j grows. ``j`` may be an integer or an integer array.
    """
    nu = as_order(nu)
    ja = np.asarray(j)
    if np.any(ja < 1):
        raise ValueError("zero index starts at 1")
    s = bessel_zeros(nu, int(ja.max()))[ja - 1]
    out = math.sqrt(2.0) / (np.sqrt(s) * np.abs(special.jv(nu + 1.0, s)))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class ZeroTable:
    """Zeros s_1..s_{J+1} and normalisation constants d_1..d_J of one order."""

    order: BesselOrder
    zeros: np.ndarray = field(repr=False)
    norms: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, nu, J: int) -> "ZeroTable":
        nu = as_order(nu)
        if J < 1:
            raise ValueError("truncation J must be >= 1")
        zeros = bessel_zeros(nu, J + 1)
        d = math.sqrt(2.0) / (np.sqrt(zeros[:J]) * np.abs(special.jv(nu + 1.0, zeros[:J])))
        d.setflags(write=False)
        return cls(BesselOrder(nu), zeros, d)

    @property
    def J(self) -> int:
        return self.norms.size


def beta_fn(a, b):
    """Euler Beta function B(a, b) = Gamma(a)Gamma(b)/Gamma(a+b)."""
    for v in (a, b):
        if float(v) <= 0 and float(v) == math.floor(float(v)):
            raise PoleError(f"Beta function has a pole at argument {v}")
    return float(special.beta(a, b))


def _is_nonpositive_int(v: float) -> bool:
    return v <= 0 and v == math.floor(v)


def hyp1f2(a, b1, b2, z, *, rtol=1e-13, max_terms=500):
    """Generalised hypergeometric series 1F2(a; b1, b2; z).

    The series is summed in floating point; when cancellation between terms
    would cost more than the requested accuracy, it is re-summed in exact
    rational arithmetic. Truncation is certified by a geometric bound on the
    remaining terms once the term ratio has dropped below one half.
    """
    a, b1, b2, z = float(a), float(b1), float(b2), float(z)
    if _is_nonpositive_int(b1) or _is_nonpositive_int(b2):
        raise PoleError("1F2 lower parameters must not be non-positive integers")
    if z == 0.0:
        return 1.0
    total, term, biggest = 1.0, 1.0, 1.0
    n_used = None
    for k in range(max_terms):
        ratio = (a + k) * z / ((b1 + k) * (b2 + k) * (k + 1))
        term *= ratio
        total += term
        biggest = max(biggest, abs(term))
        if term == 0.0:
            n_used = k + 1
            break
        nxt = abs((a + k + 1) * z / ((b1 + k + 1) * (b2 + k + 1) * (k + 2)))
        # ratios are eventually decreasing in k, so a geometric tail bound holds
        if k > abs(a) + abs(b1) + abs(b2) and nxt < 0.5:
            tail = abs(term) * nxt / (1.0 - nxt)
            if tail <= 0.1 * rtol * abs(total):
                n_used = k + 1
                break
    if n_used is None:
        raise ConvergenceError(f"1F2 series not certified within {max_terms} terms (z={z})")
    if biggest * n_used * 2.3e-16 <= 0.1 * rtol * abs(total):
        return total
    return _hyp1f2_exact(a, b1, b2, z, n_used)


def _hyp1f2_exact(a, b1, b2, z, n_terms):
    a_, b1_, b2_, z_ = (Fraction(v) for v in (a, b1, b2, z))
    term = Fraction(1)
    total = Fraction(1)
    for k in range(n_terms):
        term = term * (a_ + k) * z_ / ((b1_ + k) * (b2_ + k) * (k + 1))
        total += term
    return float(total)


def gamma_fn(x):
    """Gamma function (thin wrapper kept for a single import point)."""
    return special.gamma(x)
