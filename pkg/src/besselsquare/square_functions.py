"""Square functions built from the t-derivative of Riesz means.

For either setting, ``G_alpha f(x) = (int_0^inf |t d/dt R_t^alpha f(x)|^2 dt/t)^(1/2)``.
On the Fourier-Bessel side the derivative is diagonal in the eigenbasis,
so the t-integral is a quadratic form in the coefficients; on the Hankel
side it is a nested integral over the spectral variable.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .fourier_bessel import (
    UNIT_INTERVAL,
    CoefficientVector,
    SampledFunction,
    SpectralBasis,
    analyze,
    dt_riesz_weights,
    synthesize,
    unit_grid,
)
from .hankel import CompactProfile, SpectrumInterpolant
from .quadrature import TimeGrid, composite_gl, time_grid
from .specfun import as_order

X_CHUNK = 128


@dataclass(frozen=True)
class SquareFunctionResult:
    """Values of a square function on a spatial quadrature grid."""

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    alpha: float
    nu: float
    side: str
    truncation: int | None
    grid: str

    def as_sampled(self) -> SampledFunction:
        dom = UNIT_INTERVAL if self.side == "discrete" else "half_line"
        return SampledFunction(dom, self.nodes, self.values, self.weights)


def l2_identity_constant(alpha) -> float:
    """||G_alpha f||_2^2 / ||f||_2^2 = 4 alpha^2 Gamma(2alpha-1) / (2 Gamma(2alpha+1)).

    This equals alpha / (2 alpha - 1).
    """
    if alpha <= 0.5:
        raise ValueError("alpha must exceed 1/2")
    return 4.0 * alpha**2 * special.gamma(2 * alpha - 1) / (2.0 * special.gamma(2 * alpha + 1))


def reproducing_constant(alpha) -> float:
    """c_alpha = 2 - 1/alpha, the reciprocal of :func:`l2_identity_constant`."""
    if alpha <= 0.5:
        raise ValueError("alpha must exceed 1/2")
    return 2.0 - 1.0 / alpha


def default_time_grid(basis: SpectralBasis, alpha, density=1) -> TimeGrid:
    """Grid for the discrete square function: every zero is a panel break,
    t_min = s_1/2, t_max = 20 s_J, exact mapped tail beyond t_max."""
    s = basis.zeros
    return time_grid(s, alpha=alpha, t_min=0.5 * s[0], t_max=20.0 * s[-1], density=density)


def _as_coefficients(f, basis: SpectralBasis) -> CoefficientVector:
    if isinstance(f, CoefficientVector):
        return f
    return analyze(f, basis)


def derivative_weight_matrix(basis: SpectralBasis, alpha, grid: TimeGrid) -> np.ndarray:
    """(n_t, J) matrix of 2 alpha (1 - s_j^2/t^2)_+^(alpha-1) (s_j/t)^2 at grid nodes."""
    s = basis.zeros
    return dt_riesz_weights(s, alpha, grid.nodes, one_minus=grid.one_minus_ratio(s))


def _map_chunks(fn, n, workers):
    # fixed chunking keeps results identical for any worker count
    starts = list(range(0, n, X_CHUNK))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(fn, starts))
    else:
        parts = [fn(i) for i in starts]
    return np.concatenate(parts) if parts else np.empty(0)


def g_discrete(f, basis: SpectralBasis, alpha, grid: TimeGrid | None = None,
               x: SampledFunction | None = None, workers: int = 1) -> SquareFunctionResult:
    """Fourier-Bessel square function G_alpha f on a spatial grid.

    ``f`` is a :class:`SampledFunction` on (0, 1) or a coefficient vector.
    ``x`` supplies the spatial nodes and weights (default: the basis grid).
    """
    if alpha <= 0.5:
        raise ValueError("alpha must exceed 1/2")
    c = _as_coefficients(f, basis)
    if grid is None:
        grid = default_time_grid(basis, alpha)
    if x is None:
        x = unit_grid(basis.nu, basis.J)
    W = derivative_weight_matrix(basis, alpha, grid)
    A = W * c.values  # (n_t, J)
    wt = grid.weights

    def chunk(i):
        P = basis.phi_matrix(x.nodes[i:i + X_CHUNK])
        S = P @ A.T  # (n_x, n_t) values of t d/dt R_t f
        S2 = (S * S) if not np.iscomplexobj(S) else (S.real**2 + S.imag**2)
        return np.sqrt(S2 @ wt)

    vals = _map_chunks(chunk, x.nodes.size, workers)
    return SquareFunctionResult(x.nodes, x.weights, vals, float(alpha), basis.nu, "discrete",
                                basis.J, grid.descriptor)


def square_function_energy(c: CoefficientVector, alpha, grid: TimeGrid | None = None) -> float:
    """sum_j |c_j|^2 int |W_j(t)|^2 dt/t: the exact L^2 norm squared of G_alpha f
    expressed through orthonormality (no spatial quadrature)."""
    basis = c.basis
    if grid is None:
        grid = default_time_grid(basis, alpha)
    W = derivative_weight_matrix(basis, alpha, grid)
    return float(np.dot(np.abs(c.values) ** 2, grid.weights @ (W * W)))


def lp_norm(f, p) -> float:
    """Weighted-grid L^p norm of a SampledFunction or SquareFunctionResult."""
    p = float(p)
    if not 1 <= p < math.inf:
        raise ValueError("p must lie in [1, inf)")
    v = np.abs(np.asarray(f.values))
    return float(np.dot(f.weights, v**p) ** (1.0 / p))


def reconstruct_via_squares(f, basis: SpectralBasis, alpha, grid: TimeGrid | None = None):
    """c_alpha int_0^inf (t d/dt R_t^alpha)^2 f dt/t, which reproduces f.

    Returns a SampledFunction on the nodes of ``f`` (or the coefficient
    vector when ``f`` is given as coefficients).
    """
    if alpha <= 0.5:
        raise ValueError("alpha must exceed 1/2")
    c = _as_coefficients(f, basis)
    if grid is None:
        grid = default_time_grid(basis, alpha)
    W = derivative_weight_matrix(basis, alpha, grid)
    mult = reproducing_constant(alpha) * (grid.weights @ (W * W))
    rec = c.scaled(mult)
    if isinstance(f, CoefficientVector):
        return rec
    return f.with_values(synthesize(rec, f.nodes))


# ---------------------------------------------------------------- Hankel side


def spectral_reach(spectrum, z_max, rel=1e-13) -> float:
    """Point beyond which |spectrum| stays below ``rel`` times its maximum on (0, z_max)."""
    z = np.linspace(0.0, z_max, int(40 * z_max) + 1)[1:]
    H = np.abs(spectrum(z))
    big = np.nonzero(H > rel * H.max())[0]
    return min(float(z[big[-1]]) * 1.05 + 1.0, z_max) if big.size else z_max


def _riesz_z_rule(t, alpha, z_cut, freq, n=16):
    """Nodes and weights of int_0^min(t, z_cut) (1-z^2/t^2)_+^(alpha-1) (z/t)^2 g(z) dz.

    The endpoint factor at z = t is integrated by Gauss-Jacobi on the last
    panel when t lies inside the cut.
    """
    top = min(t, z_cut)
    n_pan = max(2, math.ceil(top * max(freq, 1.0) / 6.0))
    br = np.linspace(0.0, top, n_pan + 1)
    if t <= z_cut and alpha != 1:
        z, w = composite_gl(br[:-1], n)
        h = br[-1] - br[-2]
        xj, wj = special.roots_jacobi(n, alpha - 1.0, 0.0)
        zj = br[-2] + 0.5 * h * (xj + 1.0)
        # (1 - z^2/t^2)^(alpha-1) = ((t-z)(t+z))^(alpha-1) / t^(2alpha-2)
        wj = (0.5 * h) ** alpha * wj * ((t + zj) / t**2) ** (alpha - 1.0)
        wz = w * np.abs(1.0 - (z / t) ** 2) ** (alpha - 1.0)
        z = np.concatenate([z, zj])
        w = np.concatenate([wz, wj])
    else:
        z, w = composite_gl(br, n)
        if alpha != 1:
            w = w * np.abs(1.0 - (z / t) ** 2) ** (alpha - 1.0)
    return z, w * (z / t) ** 2


def hankel_time_grid(z_reach, t_min=1e-3, per_decade=8, n=16) -> TimeGrid:
    """Log grid for the Hankel square function with a mapped tail beyond
    20 times the spectral reach. The t-integrand has no spectral
    singularities here, so a coarser log grid than the discrete one suffices."""
    return time_grid((), t_min=t_min, t_max=20.0 * z_reach, per_decade=per_decade, n=n,
                     extra_breaks=(z_reach,))


def _resolve_spectrum(f, nu, spectrum, z_max):
    if spectrum is None:
        if f is None:
            raise ValueError("need a profile or a spectrum")
        spectrum = SpectrumInterpolant(f, nu, z_max)
    return spectrum, spectral_reach(spectrum, z_max)


def dt_riesz_hankel_field(f: CompactProfile | None, nu, alpha, x, grid: TimeGrid, *,
                          spectrum=None, z_reach=None, z_max=60.0):
    """Matrix of t d/dt R_t^alpha f (x_i, t_k) for all spatial and time nodes.

    ``h_nu(f)`` is treated as negligible beyond ``z_reach``. For ``t`` past
    the reach every column shares one z-rule, so the Bessel kernel is built
    once; smaller ``t`` get their own rule with a Jacobi end at ``z = t``.
    """
    nu = as_order(nu)
    if alpha <= 0.5:
        raise ValueError("alpha must exceed 1/2")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if z_reach is None:
        spectrum, z_reach = _resolve_spectrum(f, nu, spectrum, z_max)
    elif spectrum is None:
        spectrum = SpectrumInterpolant(f, nu, z_reach)
    freq = x.max() + (f.support if f is not None else 2.0)
    t = grid.nodes
    out = np.empty((x.size, t.size))
    near = t <= z_reach
    for k in np.nonzero(near)[0]:
        z, w = _riesz_z_rule(t[k], alpha, z_reach, freq)
        xz = np.outer(x, z)
        out[:, k] = (np.sqrt(xz) * special.jv(nu, xz)) @ (spectrum(z) * w)
    far = np.nonzero(~near)[0]
    if far.size:
        n_pan = max(2, math.ceil(z_reach * freq / 6.0))
        z, w = composite_gl(np.linspace(0.0, z_reach, n_pan + 1), 16)
        xz = np.outer(x, z)
        K = np.sqrt(xz) * special.jv(nu, xz)
        tf = t[far][:, None]
        W = np.abs(1.0 - (z / tf) ** 2) ** (alpha - 1.0) * (z / tf) ** 2
        out[:, far] = K @ (W * (spectrum(z) * w)).T
    return 2.0 * alpha * out


def g_hankel(f: CompactProfile | None, nu, alpha, x: SampledFunction | None = None,
             grid: TimeGrid | None = None, *, spectrum=None, x_max=20.0, z_max=60.0,
             workers: int = 1) -> SquareFunctionResult:
    """Hankel-transform square function on a spatial grid over (0, x_max)."""
    nu = as_order(nu)
    if alpha <= 0.5:
        raise ValueError("alpha must exceed 1/2")
    spectrum, z_reach = _resolve_spectrum(f, nu, spectrum, z_max)
    if grid is None:
        grid = hankel_time_grid(z_reach)
    if x is None:
        xs, wx = composite_gl(np.linspace(0.0, x_max, max(8, math.ceil(2 * x_max)) + 1), 16)
        x = SampledFunction("half_line", xs, np.ones_like(xs), wx)

    # below t_min the field behaves like t^(2nu+2); that piece of the
    # t-integral is added in closed form from the value at t_min
    low = TimeGrid(np.array([grid.t_min]), np.array([0.0]), (), grid.t_min, grid.t_min,
                   np.array([False]), np.array([-1]), np.array([0.0]), "low")

    def chunk(i):
        xs = x.nodes[i:i + X_CHUNK]
        S = dt_riesz_hankel_field(f, nu, alpha, xs, grid, spectrum=spectrum, z_reach=z_reach)
        S0 = dt_riesz_hankel_field(f, nu, alpha, xs, low, spectrum=spectrum, z_reach=z_reach)[:, 0]
        return np.sqrt((S * S) @ grid.weights + S0**2 / (4.0 * nu + 4.0))

    vals = _map_chunks(chunk, x.nodes.size, workers)
    return SquareFunctionResult(x.nodes, x.weights, vals, float(alpha), nu, "hankel", None,
                                grid.descriptor)


def operator_ratio(family, p, alpha, side, *, basis: SpectralBasis | None = None,
                   nu=None, grid=None, workers: int = 1):
    """Empirical sup of ||G_alpha f||_p / ||f||_p over a family.

    Returns ``(max_ratio, argmax_index, ratios)``; zero-norm members are
    skipped with a warning (their ratio is reported as nan).
    """
    if len(family) == 0:
        raise ValueError("family must be nonempty")
    ratios = []
    for k, member in enumerate(family):
        if side == "discrete":
            if basis is None:
                raise ValueError("discrete side needs a basis")
            fs = member
            if isinstance(member, CoefficientVector):
                x = unit_grid(basis.nu, basis.J)
                fs = x.with_values(synthesize(member, x.nodes))
            nf = lp_norm(fs, p)
            if nf == 0:
                warnings.warn(f"family member {k} has zero norm; skipped", RuntimeWarning,
                              stacklevel=2)
                ratios.append(float("nan"))
                continue
            G = g_discrete(member, basis, alpha, grid=grid, x=fs if isinstance(fs, SampledFunction) else None,
                           workers=workers)
            ratios.append(lp_norm(G, p) / nf)
        elif side == "hankel":
            y, w = composite_gl(np.linspace(member.inner, member.support, 65), 16)
            fs = SampledFunction("half_line", y, np.asarray(member(y)), w)
            nf = lp_norm(fs, p)
            if nf == 0:
                warnings.warn(f"family member {k} has zero norm; skipped", RuntimeWarning,
                              stacklevel=2)
                ratios.append(float("nan"))
                continue
            G = g_hankel(member, nu, alpha, grid=grid, workers=workers)
            ratios.append(lp_norm(G, p) / nf)
        else:
            raise ValueError(f"unknown side {side!r}")
    arr = np.asarray(ratios)
    if np.all(np.isnan(arr)):
        raise ValueError("every family member was degenerate")
    k = int(np.nanargmax(arr))
    return float(arr[k]), k, arr
