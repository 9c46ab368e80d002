"""Hankel transforms on (0, inf) and the continuous-side Riesz means.

``h_nu(f)(x) = int_0^inf sqrt(xy) J_nu(xy) f(y) dy`` is an isometric
involution of L^2(0, inf); for nu = -1/2 it reduces to the Fourier-cosine
transform.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .fourier_bessel import HALF_LINE, SampledFunction
from .quadrature import composite_gl, integrate_singular
from .specfun import ConvergenceError, as_order, beta_fn, hyp1f2


class ToleranceWarning(RuntimeWarning):
    """Oscillatory quadrature in a regime where the tolerance may degrade."""


@dataclass(frozen=True)
class CompactProfile:
    """A smooth function supported in (inner, support), ``inner >= 0``.

    ``breaks`` lists interior points where the function is smooth but not
    analytic (quadrature panels are split there).
    """

    support: float
    func: Callable = field(repr=False)
    name: str = "profile"
    breaks: tuple = ()
    smoothness: str = "C_inf"
    inner: float = 0.0

    def __post_init__(self):
        if not 0 <= self.inner < self.support:
            raise ValueError("need 0 <= inner < support")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.inner) & (x < self.support)
        out = np.zeros_like(x)
        if np.any(inside):
            out[inside] = self.func(x[inside])
        return out if out.ndim else float(out)


def _smooth_step_base(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(u):
    """S(u) = B(u) / (B(u) + B(1-u)) with B(u) = exp(-1/u) for u > 0, else 0.

    S is C-infinity, 0 for u <= 0 and 1 for u >= 1.
    """
    a = _smooth_step_base(u)
    b = _smooth_step_base(1.0 - np.asarray(u, dtype=float))
    return a / (a + b)


@dataclass(frozen=True)
class CutoffPhi(CompactProfile):
    """The cutoff equal to 1 on (0, 1], decreasing smoothly to 0 on [1, 2]."""

    support: float = 2.0
    func: Callable = field(default=None, repr=False)
    name: str = "cutoff"
    breaks: tuple = (1.0, 1.125, 1.25, 1.375, 1.5, 1.625, 1.75, 1.875)

    def __post_init__(self):
        object.__setattr__(self, "func", lambda x: smooth_step(2.0 - np.asarray(x)))


def gaussian_profile(center=3.0, width=0.3, support=None, name=None) -> CompactProfile:
    """A Gaussian bump, truncated where it is below 1e-16 of its peak."""
    if support is None:
        support = center + 8.6 * width
    inner = center - 8.6 * width
    if inner <= 0:
        raise ValueError("bump must be negligible near the origin")
    return CompactProfile(support, lambda y: np.exp(-0.5 * ((y - center) / width) ** 2),
                          name or f"gauss({center:g},{width:g})", inner=inner)


def moment_free_profile(center=4.0, width=0.3, order=3, name=None) -> CompactProfile:
    """(-d^2/dy^2)^order of a Gaussian bump.

    Its cosine transform vanishes to order ``2*order`` at 0, which makes
    transplanted functions decay fast enough for truncated quadrature.
    Scaled so that the value at ``center`` is 1.
    """
    n = 2 * order
    s2 = width * math.sqrt(2.0)
    scale = 1.0 / abs(special.eval_hermite(n, 0.0))

    def f(y):
        u = (y - center) / s2
        return (-1) ** order * scale * special.eval_hermite(n, u) * np.exp(-u * u)

    reach = (8.6 + 0.5 * n) * width
    if center - reach <= 0:
        raise ValueError("bump must be negligible near the origin")
    return CompactProfile(center + reach, f, name or f"d2^{order} gauss({center:g},{width:g})",
                          inner=center - reach)


def oscillatory_rule(a, freq, exponent=0.0, n=16, breaks=(), lo=0.0, radians=8.0):
    """Nodes and weights on (lo, a) for ``g(y) * y**exponent`` with ``g``
    oscillating at angular frequency up to ``freq``.

    Uniform panels spanning about ``radians`` each cover [y0, a]. When
    ``lo = 0``, geometric panels and a Gauss-Jacobi piece handle the
    algebraic behaviour near 0 (only negative exponents get the Jacobi
    weight).
    """
    a, lo = float(a), float(lo)
    freq = max(float(freq), 1.0)
    y0 = lo if lo > 0 else min(a / 8.0, 1.0 / freq)
    n_uniform = max(4, math.ceil((a - y0) * freq / radians))
    inner = [b for b in breaks if y0 < b < a]
    uniform = np.unique(np.concatenate([np.linspace(y0, a, n_uniform + 1), inner]))
    if lo > 0:
        return composite_gl(uniform, n)
    # geometric panels down to where int_0^y_in y**e dy is negligible
    e = min(float(exponent), 0.0)
    y_target = max(1e-16 ** (1.0 / (1.0 + e)), 1e-300)
    n_geo = max(4, math.ceil(math.log(y0 / y_target, 4.0)))
    y_in = y0 / 4.0**n_geo
    bks = np.concatenate([y_in * 4.0 ** np.arange(n_geo), uniform])
    y, w = composite_gl(bks, n)
    xj, wj = special.roots_jacobi(n, 0.0, e)
    yi = 0.5 * y_in * (xj + 1.0)
    wi = (0.5 * y_in) ** (e + 1.0) * wj / yi**e
    return np.concatenate([yi, y]), np.concatenate([wi, w])


def _kernel(nu, x, y):
    # sqrt(xy) J_nu(xy) on an outer grid
    xy = np.outer(x, y)
    return np.sqrt(xy) * special.jv(nu, xy)


def hankel_transform(f: CompactProfile, nu, x, *, n=16, chunk=256):
    """h_nu(f)(x) for a compactly supported profile.

    A composite Gauss-Legendre rule resolving the oscillation at the largest
    requested ``x`` is used; it is accurate to near machine precision for
    smooth profiles.
    """
    nu = as_order(nu)
    xa = np.asarray(x, dtype=float)
    xs = np.atleast_1d(xa).ravel()
    if np.any(xs <= 0):
        raise ValueError("h_nu(f)(x) is evaluated for x > 0")
    y, w = oscillatory_rule(f.support, xs.max(), nu + 0.5, n=n, breaks=f.breaks, lo=f.inner)
    fw = np.asarray(f(y)) * w
    out = np.empty(xs.size)
    for i in range(0, xs.size, chunk):
        out[i:i + chunk] = _kernel(nu, xs[i:i + chunk], y) @ fw
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


def hankel_sampled(F: SampledFunction, nu, x, chunk=256):
    """Apply h_nu to a sampled half-line function with its own quadrature."""
    nu = as_order(nu)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    fw = F.values * F.weights
    out = np.empty(xs.size)
    for i in range(0, xs.size, chunk):
        out[i:i + chunk] = _kernel(nu, xs[i:i + chunk], F.nodes) @ fw
    return out


class PanelChebyshev:
    """Piecewise Chebyshev interpolant of ``func`` on (0, z_max).

    ``func(z) / z**power`` is interpolated on panels of width ``panel``, so
    functions with a known algebraic factor at the origin are represented
    to near machine precision. Values beyond ``z_max`` are taken as 0.
    """

    def __init__(self, func, z_max, power=0.0, degree=32, panel=0.5):
        self.power = float(power)
        self.panel = float(panel)
        n_pan = max(1, math.ceil(float(z_max) / self.panel))
        self.z_max = n_pan * self.panel
        k = np.arange(degree + 1)
        cheb = np.cos(np.pi * (k + 0.5) / (degree + 1))  # first-kind nodes in (-1, 1)
        left = self.panel * np.arange(n_pan)
        z = (left[:, None] + 0.5 * self.panel * (cheb[None, :] + 1.0)).ravel()
        vals = (np.asarray(func(z)) / z**self.power).reshape(n_pan, degree + 1)
        V = np.polynomial.chebyshev.chebvander(cheb, degree)
        self.coef = np.linalg.solve(V, vals.T).T

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        flat = z.ravel()
        idx = np.clip((flat // self.panel).astype(int), 0, self.coef.shape[0] - 1)
        u = 2.0 * (flat - idx * self.panel) / self.panel - 1.0
        c = self.coef[idx]
        # Clenshaw recurrence, vectorised over points
        b1 = np.zeros_like(u)
        b2 = np.zeros_like(u)
        for j in range(c.shape[1] - 1, 0, -1):
            b1, b2 = c[:, j] + 2.0 * u * b1 - b2, b1
        e = c[:, 0] + u * b1 - b2
        inside = (flat > 0) & (flat < self.z_max)
        out = np.where(inside, e * np.where(inside, flat, 1.0) ** self.power, 0.0)
        return out.reshape(z.shape)


class SpectrumInterpolant(PanelChebyshev):
    """Interpolant of ``h_nu(f)`` on (0, z_max).

    The transform behaves like ``z**(nu+1/2)`` times an entire function of
    ``z**2``, and that smooth factor is what gets interpolated.
    """

    def __init__(self, f: CompactProfile, nu, z_max, degree=32, panel=0.5):
        self.nu = as_order(nu)
        super().__init__(lambda z: hankel_transform(f, self.nu, z), z_max, self.nu + 0.5,
                         degree, panel)


def profile_l2_norm(f: CompactProfile, n=16) -> float:
    """||f||_2 by composite Gauss-Legendre over the support."""
    br = np.unique(np.concatenate([np.linspace(f.inner, f.support, 65),
                                   np.asarray(f.breaks, dtype=float)]))
    y, w = composite_gl(br, n)
    return math.sqrt(float(np.dot(w, np.asarray(f(y)) ** 2)))


def isometry_check(f: CompactProfile, nu, z_max=60.0, rel=1e-15):
    """``(||h_nu f||_2, ||f||_2)``; the transform norm is integrated up to the
    point where ``|h_nu f|`` has dropped below ``rel`` times its peak."""
    nu = as_order(nu)
    H = SpectrumInterpolant(f, nu, z_max)
    z = np.linspace(0.0, H.z_max, int(40 * H.z_max) + 1)[1:]
    a = np.abs(H(z))
    reach = float(z[np.nonzero(a > rel * a.max())[0][-1]]) + 1.0
    if reach >= H.z_max:
        warnings.warn("transform not negligible at z_max; norm truncated", ToleranceWarning,
                      stacklevel=2)
        reach = H.z_max
    val, _ = integrate_singular(lambda u: (H(u) / u ** (nu + 0.5)) ** 2, 0.0, reach, 1e-15,
                                left_exponent=2.0 * nu + 1.0)
    return math.sqrt(val), profile_l2_norm(f)


def cosine_transform(f: CompactProfile, x, epsabs=1e-13):
    """sqrt(2/pi) int_0^a cos(xy) f(y) dy through QUADPACK's cosine-weighted
    rule; an implementation path independent of :func:`hankel_transform`."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    pts = (f.inner,) + tuple(f.breaks) + (f.support,)
    out = np.empty(xs.size)
    for i, xi in enumerate(xs):
        tot = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            v, _ = integrate.quad(f, lo, hi, weight="cos", wvar=xi, epsabs=epsabs,
                                  epsrel=1e-13, limit=400)
            tot += v
        out[i] = math.sqrt(2.0 / math.pi) * tot
    return out if np.ndim(x) else float(out[0])


def riesz_hankel(f: CompactProfile | None, nu, alpha, t, x, *, spectrum=None, tol=1e-12):
    """Bochner-Riesz mean h_nu((1 - z^2/t^2)_+^alpha h_nu(f))(x)."""
    nu = as_order(nu)
    if alpha < 0 or t <= 0 or x <= 0:
        raise ValueError("need alpha >= 0 and t, x > 0")
    if spectrum is None:
        if f is None:
            raise ValueError("need a profile or a spectrum")

        def spectrum(z):
            return hankel_transform(f, nu, z)

    def g(u):
        z = t * u
        return (1.0 + u) ** alpha * spectrum(z) * np.sqrt(x * z) * special.jv(nu, x * z)

    val, _ = integrate_singular(g, 0.0, 1.0, tol, right_exponent=alpha, n=24)
    return t * val


def dt_riesz_hankel(f: CompactProfile | None, nu, alpha, t, x, *, spectrum=None, tol=1e-12):
    """t d/dt of the Riesz mean of ``f`` in the Hankel setting, at (x, t).

    Equal to ``2 alpha int_0^t (1 - z^2/t^2)^(alpha-1) (z/t)^2 H(z)
    sqrt(xz) J_nu(xz) dz`` with ``H = h_nu(f)``. ``spectrum`` may supply
    ``H`` directly (a vectorised callable), bypassing one quadrature layer.
    """
    nu = as_order(nu)
    if alpha <= 0.5:
        raise ValueError("alpha must exceed 1/2")
    if t <= 0 or x <= 0:
        raise ValueError("t and x must be positive")
    if x * t > 1e3:
        warnings.warn(f"x*t = {x * t:.3g} is large; oscillatory quadrature may lose accuracy",
                      ToleranceWarning, stacklevel=2)
    if spectrum is None:
        if f is None:
            raise ValueError("need a profile or a spectrum")

        def spectrum(z):
            return hankel_transform(f, nu, z)

    def g(u):
        z = t * u
        return (1.0 + u) ** (alpha - 1.0) * u**2 * spectrum(z) * np.sqrt(x * z) * special.jv(nu, x * z)

    val, _ = integrate_singular(g, 0.0, 1.0, tol, right_exponent=alpha - 1.0, n=24)
    return 2.0 * alpha * t * val


def dt_riesz_cosine(f: CompactProfile, alpha, t, x, epsabs=1e-13):
    """Independent nu = -1/2 path for :func:`dt_riesz_hankel` through QUADPACK's
    algebraic-weight rule and :func:`cosine_transform`."""
    c = math.sqrt(2.0 / math.pi)

    def inner(z):
        fc = cosine_transform(f, z) if z > 0 else c * integrate.quad(f, 0, f.support)[0]
        return (t + z) ** (alpha - 1.0) * z**2 * fc * c * math.cos(x * z)

    v, _ = integrate.quad(inner, 0.0, t, weight="alg", wvar=(0.0, alpha - 1.0),
                          epsabs=epsabs, epsrel=1e-12, limit=400)
    return 2.0 * alpha * v / t ** (2.0 * (alpha - 1.0) + 2.0)


def heat_kernel_hankel(nu, t, x, y):
    """sqrt(xy)/(2t) I_nu(xy/(2t)) exp(-(x^2+y^2)/(4t)), evaluated with the
    exponentially scaled I_nu so that large xy/t does not overflow."""
    nu = as_order(nu)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if t <= 0 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("t, x, y must be positive")
    z = x * y / (2.0 * t)
    out = np.sqrt(x * y) / (2.0 * t) * special.ive(nu, z) * np.exp(-((x - y) ** 2) / (4.0 * t))
    return out if out.ndim else float(out)


def psi(nu, x):
    """psi = h_nu(cutoff), the function used to show sharpness of alpha > 1/p."""
    return hankel_transform(CutoffPhi(), nu, x)


def gtilde_psi_closedform(nu, alpha, x, t):
    """Closed form of the t-derivative Riesz mean of ``psi`` for 0 < t < 1:

    2 alpha B(alpha, 7/4+nu/2) / (2^(nu+1) Gamma(nu+1)) t^(nu+3/2) x^(nu+1/2)
        * 1F2(7/4+nu/2; nu+1, alpha+7/4+nu/2; -x^2 t^2 / 4)
    """
    nu = as_order(nu)
    if not 0 < t < 1:
        raise ValueError("closed form holds for 0 < t < 1")
    if x <= 0:
        raise ValueError("x must be positive")
    z = -(x * t) ** 2 / 4.0
    if -z > 100.0:
        raise ConvergenceError(f"x*t = {x * t:g} is outside the 1F2 series budget (x*t <= 20)")
    a = 1.75 + 0.5 * nu
    pref = 2.0 * alpha * beta_fn(alpha, a) / (2.0 ** (nu + 1.0) * special.gamma(nu + 1.0))
    return pref * t ** (nu + 1.5) * x ** (nu + 0.5) * hyp1f2(a, nu + 1.0, alpha + a, z)


def gtilde_psi_scaled(nu, alpha, w, tol=1e-12):
    """K(w) with dt_riesz_hankel(psi)(x, t) = t K(x t) for 0 < t <= 1.

    K(w) = 2 alpha int_0^1 (1-u^2)^(alpha-1) u^2 sqrt(wu) J_nu(wu) du.
    """
    nu = as_order(nu)

    def g(u):
        return (1.0 + u) ** (alpha - 1.0) * u**2 * np.sqrt(w * u) * special.jv(nu, w * u)

    val, _ = integrate_singular(g, 0.0, 1.0, tol, right_exponent=alpha - 1.0, n=max(24, int(w)))
    return 2.0 * alpha * val


def gtilde_psi_kernel(nu, alpha, w):
    """Vectorised :func:`gtilde_psi_scaled` for arrays of ``w >= 0``.

    One Gauss-Jacobi rule with weight (1-u)^(alpha-1) u^(nu+1/2) on (0, 1),
    sized for the largest ``w``, serves every point.
    """
    nu = as_order(nu)
    w = np.asarray(w, dtype=float)
    flat = np.atleast_1d(w).ravel()
    if np.any(flat < 0):
        raise ValueError("w must be nonnegative")
    n = int(math.ceil(0.55 * flat.max() + 3.0 * flat.max() ** (1 / 3) + 40))
    a, b = alpha - 1.0, nu + 0.5
    xj, wj = special.roots_jacobi(n, a, b)
    u = 0.5 * (xj + 1.0)
    wu = wj * 0.5 ** (a + b + 1.0) * (1.0 + u) ** (alpha - 1.0) * u**2 / u**nu
    out = np.empty(flat.size)
    for i in range(0, flat.size, 512):
        ww = flat[i:i + 512, None]
        out[i:i + 512] = (np.sqrt(ww) * special.jv(nu, ww * u)) @ wu
    out = 2.0 * alpha * out
    return out.reshape(w.shape) if w.ndim else float(out[0])


@dataclass(frozen=True)
class Transplanted:
    """Result of the forward transplantation together with its inverse image."""

    forward: SampledFunction
    sample_points: np.ndarray
    original: np.ndarray
    recovered: np.ndarray

    @property
    def max_error(self) -> float:
        return float(np.max(np.abs(self.recovered - self.original)))


def transplant_forward(f: CompactProfile, nu, *, y_max=None, x_max=60.0, n=16):
    """T_{nu,-1/2} f = h_nu(h_{-1/2} f) sampled on a truncated half-line grid."""
    nu = as_order(nu)
    if y_max is None:
        y_max = 30.0
    # stage 1: cosine transform on (0, y_max), resolved for frequencies <= x_max
    yg, wy = oscillatory_rule(y_max, x_max, 0.0, n=n)
    g = hankel_transform(f, -0.5, yg)
    G = SampledFunction(HALF_LINE, yg, g, wy)
    xg, wx = oscillatory_rule(x_max, y_max, nu + 0.5, n=n)
    T = hankel_sampled(G, nu, xg)
    return SampledFunction(HALF_LINE, xg, T, wx)


def transplant_inverse(T: SampledFunction, nu, y, *, z_max=30.0, n=16):
    """T_{-1/2,nu} applied to a sampled function, evaluated at ``y``."""
    nu = as_order(nu)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    zg, wz = oscillatory_rule(z_max, max(y.max(), 1.0), 0.0, n=n)
    H = hankel_sampled(T, nu, zg)
    Hs = SampledFunction(HALF_LINE, zg, H, wz)
    return hankel_sampled(Hs, -0.5, y)


def transplant_roundtrip(f: CompactProfile, nu, sample_points=None, *, x_max=60.0,
                         y_max=30.0, tail_tol=1e-8) -> Transplanted:
    """Forward transplantation T_{nu,-1/2} f on a grid and the reverse image
    T_{-1/2,nu} T_{nu,-1/2} f at ``sample_points``, which should equal f.

    Warns when the forward image is not small at the truncation point,
    which signals that the truncated integrals are not converged.
    """
    nu = as_order(nu)
    if sample_points is None:
        sample_points = np.linspace(0.1, f.support - 0.1, 25)
    sp = np.asarray(sample_points, dtype=float)
    fwd = transplant_forward(f, nu, y_max=y_max, x_max=x_max)
    edge = np.abs(fwd.values[fwd.nodes > 0.9 * x_max]).max()
    if edge > tail_tol:
        warnings.warn(f"transplanted function is {edge:.2g} near the truncation point "
                      f"x = {x_max:g}; the roundtrip may not converge", ToleranceWarning,
                      stacklevel=2)
    rec = transplant_inverse(fwd, nu, sp, z_max=y_max)
    return Transplanted(fwd, sp, np.asarray(f(sp)), rec)
