"""Fourier-Bessel expansions on (0, 1).

The orthonormal system is ``phi_j(x) = sqrt(2x) J_nu(s_j x) / |J_{nu+1}(s_j)|``
where ``s_j`` are the positive zeros of ``J_nu``. Functions of the operator
``L_nu`` (Riesz means, their t-derivatives, the heat semigroup) act
diagonally on the coefficients.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .quadrature import composite_gl, integrate_singular
from .specfun import ZeroTable, as_order, bessel_j

UNIT_INTERVAL = "unit_interval"
HALF_LINE = "half_line"


class SingularEvaluationWarning(RuntimeWarning):
    """t landed exactly on a zero where the derivative weight blows up."""


class TruncationWarning(RuntimeWarning):
    """The truncated spectral sum is not converged to double precision."""


@dataclass(frozen=True)
class SpectralBasis:
    """First ``J`` Fourier-Bessel modes of order ``nu``."""

    nu: float
    J: int
    table: ZeroTable = field(repr=False)
    jnorm: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, nu, J: int = 64) -> "SpectralBasis":
        nu = as_order(nu)
        table = ZeroTable.build(nu, int(J))
        jn = np.abs(special.jv(nu + 1.0, table.zeros[:J]))
        jn.setflags(write=False)
        return cls(nu, int(J), table, jn)

    @property
    def zeros(self) -> np.ndarray:
        """s_1..s_J."""
        return self.table.zeros[: self.J]

    @property
    def norms(self) -> np.ndarray:
        return self.table.norms

    def phi_matrix(self, x) -> np.ndarray:
        """Values ``phi_j(x_i)`` as an array of shape ``(len(x), J)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any((x <= 0) | (x >= 1)):
            raise ValueError("phi is evaluated on the open interval (0, 1)")
        s = self.zeros
        return np.sqrt(2.0 * x)[:, None] * special.jv(self.nu, np.outer(x, s)) / self.jnorm


def phi(basis: SpectralBasis, j: int, x):
    """The j-th eigenfunction (1-based) at points ``x`` in (0, 1)."""
    j = int(j)
    if not 1 <= j <= basis.J:
        raise IndexError(f"mode index {j} outside 1..{basis.J}")
    xa = np.asarray(x, dtype=float)
    if np.any((xa <= 0) | (xa >= 1)):
        raise ValueError("phi is evaluated on the open interval (0, 1)")
    s = basis.zeros[j - 1]
    out = np.sqrt(2.0 * xa) * special.jv(basis.nu, s * xa) / basis.jnorm[j - 1]
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SampledFunction:
    """Values of a real function on a quadrature grid."""

    domain: str
    nodes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.domain not in (UNIT_INTERVAL, HALF_LINE):
            raise ValueError(f"unknown domain {self.domain!r}")
        x = self.nodes
        if x.shape != self.values.shape[:1] or x.shape != self.weights.shape:
            raise ValueError("nodes, values and weights must align")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if x[0] <= 0 or (self.domain == UNIT_INTERVAL and x[-1] >= 1):
            raise ValueError("nodes must lie inside the open domain")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    @classmethod
    def from_callable(cls, func, grid: "SampledFunction | tuple", domain=None):
        """Sample ``func`` on the nodes of ``grid`` (a SampledFunction or a
        ``(nodes, weights)`` pair)."""
        if isinstance(grid, SampledFunction):
            x, w, dom = grid.nodes, grid.weights, grid.domain
        else:
            x, w = grid
            dom = domain or UNIT_INTERVAL
        vals = np.asarray(func(x), dtype=float)
        return cls(dom, x, vals, w)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.domain, self.nodes, np.asarray(values, dtype=float),
                               self.weights)

    def l2_norm(self) -> float:
        return float(math.sqrt(np.dot(self.weights, np.abs(self.values) ** 2)))


def unit_grid(nu, J: int, n: int = 16, panels: int | None = None,
              geometric_panels: int = 12) -> SampledFunction:
    """Composite quadrature grid on (0, 1) suited to modes up to ``J``.

    Uniform Gauss-Legendre panels cover [x0, 1] with ``x0 = min(1/8, 1/J)``,
    where the modes start to oscillate. Below x0, ``geometric_panels``
    panels shrink by a factor 4 each, and the innermost piece [0, x_in] uses
    a Gauss-Jacobi rule built for integrands behaving like ``x**(2nu+1)``
    (the product of two modes) when ``nu < -1/2``, so very negative orders
    stay accurate.
    The result carries unit values (use :meth:`SampledFunction.with_values`).
    """
    nu = as_order(nu)
    if panels is None:
        panels = max(8, J)
    x0 = min(0.125, 1.0 / J)
    x_in = x0 / 4.0**geometric_panels
    breaks = np.concatenate([x_in * 4.0 ** np.arange(geometric_panels + 1),
                             np.linspace(x0, 1.0, panels + 1)[1:]])
    x, w = composite_gl(breaks, n)
    # only negative exponents need the Jacobi weight; positive ones are
    # negligible this close to 0
    e = min(2.0 * nu + 1.0, 0.0)
    xj, wj = special.roots_jacobi(n, 0.0, e)
    xi = 0.5 * x_in * (xj + 1.0)
    # weight of the rule for x**e * smooth, divided back by x**e
    wi = (0.5 * x_in) ** (e + 1.0) * wj / xi**e
    x = np.concatenate([xi, x])
    w = np.concatenate([wi, w])
    return SampledFunction(UNIT_INTERVAL, x, np.ones_like(x), w)


@dataclass(frozen=True)
class CoefficientVector:
    """Coefficients c_1..c_J with respect to a :class:`SpectralBasis`."""

    basis: SpectralBasis = field(repr=False)
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.basis.J,):
            raise ValueError(f"expected {self.basis.J} coefficients, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficients must be finite")

    def __add__(self, other: "CoefficientVector") -> "CoefficientVector":
        return CoefficientVector(self.basis, self.values + other.values)

    def __sub__(self, other: "CoefficientVector") -> "CoefficientVector":
        return CoefficientVector(self.basis, self.values - other.values)

    def __mul__(self, a) -> "CoefficientVector":
        return CoefficientVector(self.basis, a * self.values)

    __rmul__ = __mul__

    def scaled(self, m) -> "CoefficientVector":
        return CoefficientVector(self.basis, np.asarray(m) * self.values)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def unit_vector(basis: SpectralBasis, j: int) -> CoefficientVector:
    v = np.zeros(basis.J)
    v[j - 1] = 1.0
    return CoefficientVector(basis, v)


def analyze(f: SampledFunction, basis: SpectralBasis) -> CoefficientVector:
    """c_j = int_0^1 f(x) phi_j(x) dx by the quadrature carried with ``f``."""
    if f.domain != UNIT_INTERVAL:
        raise ValueError("analyze expects a function on the unit interval")
    if not np.all(np.isfinite(f.values)):
        raise ValueError("non-finite samples")
    c = basis.phi_matrix(f.nodes).T @ (f.weights * f.values)
    return CoefficientVector(basis, c)


def synthesize(c: CoefficientVector, x):
    """sum_j c_j phi_j(x)."""
    xa = np.asarray(x, dtype=float)
    out = c.basis.phi_matrix(np.atleast_1d(xa)) @ c.values
    return out if xa.ndim else out[0]


def apply_L(c: CoefficientVector) -> CoefficientVector:
    """Action of L_nu: c_j -> s_j**2 c_j."""
    return c.scaled(c.basis.zeros**2)


def riesz_weights(s, alpha, t):
    """(1 - s**2/t**2)_+**alpha, with the convention that the zeroth power is
    the indicator of s < t."""
    s = np.asarray(s, dtype=float)
    u = 1.0 - (s / t) ** 2
    pos = u > 0
    if alpha == 0:
        return pos.astype(float)
    return np.where(pos, np.abs(u) ** alpha, 0.0)


def dt_riesz_weights(s, alpha, t, one_minus=None):
    """Multiplier of t d/dt R_t^alpha: 2 alpha (1 - s**2/t**2)_+**(alpha-1) (s/t)**2.

    ``t`` may be an array; the result then has shape ``t.shape + s.shape``.
    ``one_minus`` optionally supplies ``1 - s**2/t**2`` computed more
    accurately (see :meth:`TimeGrid.one_minus_ratio`).
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    ratio2 = (s / t[..., None]) ** 2 if t.ndim else (s / t) ** 2
    u = 1.0 - ratio2 if one_minus is None else one_minus
    pos = u > 0
    if alpha == 1:
        base = pos.astype(float)
    else:
        with np.errstate(divide="ignore"):
            base = np.where(pos, np.abs(u) ** (alpha - 1.0), 0.0)
    return 2.0 * alpha * base * ratio2


def _avoid_zero_hit(basis: SpectralBasis, alpha, t):
    if alpha < 1 and np.any(basis.zeros == t):
        t_new = float(np.nextafter(t, np.inf))
        warnings.warn(f"t={t!r} coincides with a Bessel zero; moved to {t_new!r}",
                      SingularEvaluationWarning, stacklevel=3)
        return t_new
    return t


def riesz_coeffs(c: CoefficientVector, alpha, t) -> CoefficientVector:
    """Coefficients of the Bochner-Riesz mean R_t^alpha f."""
    if alpha < 0 or t <= 0:
        raise ValueError("need alpha >= 0 and t > 0")
    return c.scaled(riesz_weights(c.basis.zeros, alpha, t))


def dt_riesz_coeffs(c: CoefficientVector, alpha, t) -> CoefficientVector:
    """Coefficients of t d/dt R_t^alpha f."""
    if alpha <= 0 or t <= 0:
        raise ValueError("need alpha > 0 and t > 0")
    t = _avoid_zero_hit(c.basis, alpha, float(t))
    return c.scaled(dt_riesz_weights(c.basis.zeros, alpha, t))


def heat_coeffs(c: CoefficientVector, t) -> CoefficientVector:
    """Coefficients of exp(-t L) f."""
    return c.scaled(np.exp(-t * c.basis.zeros**2))


def heat_kernel(basis: SpectralBasis, t, x, y):
    """W_t(x, y) = sum_j phi_j(x) phi_j(y) exp(-t s_j**2), truncated at J.

    ``x`` and ``y`` broadcast against each other; a column ``x[:, None]``
    with a row ``y[None, :]`` gives the kernel matrix.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if math.exp(-t * basis.zeros[-1] ** 2) >= 1e-16:
        warnings.warn(f"J={basis.J} modes do not resolve the heat kernel at t={t:g}",
                      TruncationWarning, stacklevel=2)
    xa, ya = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    e = np.exp(-t * basis.zeros**2)
    if xa.ndim == 2 and ya.ndim == 2 and xa.shape[1] == 1 and ya.shape[0] == 1:
        r = np.sqrt(e)
        return (basis.phi_matrix(xa[:, 0]) * r) @ (basis.phi_matrix(ya[0]) * r).T
    xb, yb = np.broadcast_arrays(xa, ya)
    px = basis.phi_matrix(xb.ravel())
    py = basis.phi_matrix(yb.ravel())
    # products phi_j(x) phi_j(y) are formed first so that W(x, y) == W(y, x) bitwise
    out = ((px * py) @ e).reshape(xb.shape)
    return out if out.ndim else float(out)


def comparison_kernel(nu, t, x, y, s1=None):
    """The two-sided Gaussian comparison kernel for the Fourier-Bessel heat
    kernel:

    (xy)**(nu+1/2) (1+t)**(nu+2) / (t+xy)**(nu+1/2) * min(1, (1-x)(1-y)/t)
        * t**(-1/2) * exp(-(x-y)**2/(4t) - s_1**2 t)
    """
    nu = as_order(nu)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any((x <= 0) | (x >= 1) | (y <= 0) | (y >= 1)) or t <= 0:
        raise ValueError("need x, y in (0, 1) and t > 0")
    if s1 is None:
        s1 = ZeroTable.build(nu, 1).zeros[0]
    xy = x * y
    a = nu + 0.5
    log_g = (a * np.log(xy) + (nu + 2.0) * math.log1p(t) - a * np.log(t + xy)
             - 0.5 * math.log(t) - (x - y) ** 2 / (4.0 * t) - s1**2 * t)
    out = np.minimum(1.0, (1.0 - x) * (1.0 - y) / t) * np.exp(log_g)
    return out if out.ndim else float(out)


def riesz_kernel_main(nu, alpha, t, x, y, tol=1e-12):
    """2 alpha sqrt(xy) int_0^t z (1-z^2/t^2)^(alpha-1) (z/t)^2 J_nu(xz) J_nu(yz) dz.

    After z = t u the weight (1-u)^(alpha-1) is treated by Gauss-Jacobi.
    """
    nu = as_order(nu)
    if alpha <= 0.5:
        raise ValueError("alpha must exceed 1/2")
    if t <= 0 or x <= 0 or y <= 0:
        raise ValueError("t, x, y must be positive")

    def g(u):
        return u**3 * (1.0 + u) ** (alpha - 1.0) * bessel_j(nu, x * t * u) * bessel_j(nu, y * t * u)

    val, _ = integrate_singular(g, 0.0, 1.0, tol, right_exponent=alpha - 1.0)
    return 2.0 * alpha * math.sqrt(x * y) * t**2 * val
