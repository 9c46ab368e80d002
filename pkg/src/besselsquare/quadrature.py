"""Numerical integration: adaptive Gauss-Legendre on finite intervals with
optional algebraic endpoint singularities, and log-measure time grids for
integrals of the form ``int_0^inf f(t) dt/t``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special


class QuadratureError(ArithmeticError):
    """Adaptive refinement ran out of depth; carries the best estimate."""

    def __init__(self, message, value=float("nan"), err=float("inf")):
        super().__init__(message)
        self.value = value
        self.err = err


class TailDominanceWarning(RuntimeWarning):
    pass


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1] (read-only arrays)."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_on(a, b, n):
    """n-point Gauss-Legendre rule mapped to [a, b]."""
    x, w = gauss_legendre(n)
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), h * w


def composite_gl(breaks, n):
    """Composite Gauss-Legendre rule over consecutive breakpoints."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(n)
    a, b = breaks[:-1, None], breaks[1:, None]
    h = 0.5 * (b - a)
    return (a + h * (x + 1.0)).ravel(), (h * w).ravel()


@dataclass(frozen=True)
class QuadratureRule:
    """A fixed node/weight rule together with the tolerances it was built for."""

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    atol: float = 1e-12
    rtol: float = 1e-12
    max_depth: int = 60

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    def __call__(self, f):
        return float(np.dot(self.weights, f(self.nodes)))


def grading_power(exponent) -> int:
    """Power q for the map u = v**q that turns an endpoint factor
    ``u**exponent`` into ``v**(q*(exponent+1)-1)`` with a smooth enough
    result (integer exponents need no grading)."""
    if exponent is None:
        return 1
    e = float(exponent)
    if e <= -1:
        raise ValueError("endpoint exponent must exceed -1 for integrability")
    if e >= 0 and e == math.floor(e):
        return 1
    return max(2, math.ceil(4.0 / (e + 1.0)))


def integrate_finite(f, a, b, tol=1e-12, *, left_exponent=None, right_exponent=None,
                     n=16, max_depth=60):
    """Adaptive integral of a vectorised ``f`` over [a, b].

    Returns ``(value, err_est)``. If ``f`` behaves like ``(u-a)**left_exponent``
    or ``(b-u)**right_exponent`` at an endpoint, the factor is divided out
    there and the end panel is integrated by Gauss-Jacobi; see
    :func:`integrate_singular` for the variant that takes the smooth part
    directly (preferable when ``f`` cannot be evaluated accurately right
    next to the endpoint).
    """
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError("integrate_finite needs a < b")
    L = _singular_exponent(left_exponent)
    R = _singular_exponent(right_exponent)
    if L == 0.0 and R == 0.0:
        return _adaptive(f, a, b, tol, n, max_depth)

    def g(u):
        u = np.asarray(u, dtype=float)
        out = np.asarray(f(u), dtype=float)
        if L:
            out = out / (u - a) ** L
        if R:
            out = out / (b - u) ** R
        return out

    return integrate_singular(g, a, b, tol, left_exponent=L, right_exponent=R, n=n,
                              max_depth=max_depth)


def _singular_exponent(e):
    if e is None:
        return 0.0
    e = float(e)
    if e <= -1:
        raise ValueError("endpoint exponent must exceed -1 for integrability")
    return 0.0 if (e >= 0 and e == math.floor(e)) else e


@lru_cache(maxsize=256)
def _jacobi(n, alpha, beta):
    x, w = special.roots_jacobi(int(n), alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _jacobi_panel(g, c, e, exponent, at_right, n):
    # int over [c, e] of g(u) * dist(u, singular end)**exponent du
    h = e - c
    if at_right:
        x, w = _jacobi(n, exponent, 0.0)
        u = c + 0.5 * h * (x + 1.0)
    else:
        x, w = _jacobi(n, 0.0, exponent)
        u = c + 0.5 * h * (x + 1.0)
    vals = np.asarray(g(u), dtype=float)
    scale = (0.5 * h) ** (exponent + 1.0)
    return scale * float(np.dot(w, vals)), scale * float(np.dot(w, np.abs(vals)))


def integrate_singular(g, a, b, tol=1e-12, *, left_exponent=0.0, right_exponent=0.0, n=16,
                       max_depth=60):
    """``int_a^b g(u) (u-a)**left_exponent (b-u)**right_exponent du`` for smooth ``g``.

    The algebraic factors are applied analytically through Gauss-Jacobi end
    panels, which shrink until two rule orders agree; the interior is
    handled by adaptive Gauss-Legendre. Returns ``(value, err_est)``.
    """
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError("integrate_singular needs a < b")
    L, R = _singular_exponent(left_exponent), _singular_exponent(right_exponent)
    # nonnegative integer powers are smooth: multiply them in, no Jacobi panel
    pl = 0.0 if L or left_exponent is None else float(left_exponent)
    pr = 0.0 if R or right_exponent is None else float(right_exponent)
    if pl or pr:
        g0 = g

        def g(u):
            return np.asarray(g0(u), dtype=float) * (u - a) ** pl * (b - u) ** pr

    if L == 0.0 and R == 0.0:
        return _adaptive(g, a, b, tol, n, max_depth)
    total, err = 0.0, 0.0
    lo, hi = a, b
    share = tol / 3.0
    # each singular end: shrink a Jacobi panel until n and 2n nodes agree
    for exponent, at_right in ((L, False), (R, True)):
        if exponent == 0.0:
            continue
        width = 0.5 * (b - a) if (L and R) else (b - a)
        if at_right:
            other = lambda u: g(u) * ((u - a) ** L if L else 1.0)
        else:
            other = lambda u: g(u) * ((b - u) ** R if R else 1.0)
        for _ in range(max_depth):
            c, e = (b - width, b) if at_right else (a, a + width)
            v1, _ = _jacobi_panel(other, c, e, exponent, at_right, n)
            v2, mag = _jacobi_panel(other, c, e, exponent, at_right, 2 * n)
            if not (math.isfinite(v1) and math.isfinite(v2)):
                raise QuadratureError("integrand is not finite near a singular endpoint")
            if abs(v2 - v1) <= max(0.5 * share, 1e3 * np.finfo(float).eps * mag):
                break
            width *= 0.5
        else:
            raise QuadratureError("singular end panel did not converge", value=v2,
                                  err=abs(v2 - v1))
        total += v2
        err += abs(v2 - v1)
        if at_right:
            hi = b - width
        else:
            lo = a + width

    def body(u):
        out = np.asarray(g(u), dtype=float)
        if L:
            out = out * (u - a) ** L
        if R:
            out = out * (b - u) ** R
        return out

    if hi > lo:
        v, e = _adaptive(body, lo, hi, share, n, max_depth)
        total += v
        err += e
    return float(total), float(err)


def _adaptive(f, a, b, tol, n, max_depth, max_panels=20000):
    xg, wg = gauss_legendre(n)
    xh, wh = gauss_legendre(2 * n)

    def estimate(lo, hi):
        h = 0.5 * (hi - lo)
        c = lo + h
        coarse = h * np.dot(wg, f(c + h * xg))
        vals = f(c + h * xh)
        fine = h * np.dot(wh, vals)
        if not (math.isfinite(fine) and math.isfinite(coarse)):
            raise QuadratureError(f"integrand is not finite on [{lo:.6g}, {hi:.6g}]")
        # rounding floor: the estimate cannot be resolved below this
        floor = 64 * np.finfo(float).eps * h * np.dot(wh, np.abs(vals))
        return fine, abs(fine - coarse), floor

    total, err = 0.0, 0.0
    stack = [(a, b, 0) + estimate(a, b)]
    worst = None
    panels = 0
    while stack:
        lo, hi, depth, val, e, floor = stack.pop()
        panels += 1
        if e <= tol * (hi - lo) / (b - a) or e <= floor:
            total += val
            err += e
            continue
        if depth >= max_depth or panels >= max_panels:
            total += val
            err += e
            worst = (lo, hi)
            continue
        m = 0.5 * (lo + hi)
        stack.append((lo, m, depth + 1) + estimate(lo, m))
        stack.append((m, hi, depth + 1) + estimate(m, hi))
    if worst is not None and err > tol:
        raise QuadratureError(
            f"adaptive quadrature refinement exhausted near [{worst[0]:.3g}, {worst[1]:.3g}]",
            value=total, err=err)
    return float(total), float(err)


@dataclass(frozen=True)
class TimeGrid:
    """Nodes and weights approximating ``int_0^inf f(t) dt/t``.

    ``tail`` marks nodes beyond ``t_max`` that come from the reciprocal map
    ``t = t_max / u``; they are part of ``nodes``/``weights`` already.
    Nodes on a panel graded toward a singular point ``s`` record the index
    of ``s`` in ``anchor`` and the exact distance ``t - s`` in ``offset``,
    since ``t`` itself may round onto ``s``.
    """

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    singular_points: tuple
    t_min: float
    t_max: float
    tail: np.ndarray = field(repr=False)
    anchor: np.ndarray = field(repr=False)
    offset: np.ndarray = field(repr=False)
    descriptor: str = ""

    def __len__(self):
        return self.nodes.size

    def one_minus_ratio(self, s):
        """Matrix ``1 - s_j**2 / t_k**2`` (rows t, columns s), accurate on
        graded panels where ``t_k`` sits just above ``s_j``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = self.nodes
        out = 1.0 - (s[None, :] / t[:, None]) ** 2
        rows = np.nonzero(self.anchor >= 0)[0]
        if rows.size:
            sp = np.asarray(self.singular_points)[self.anchor[rows]]
            col = np.searchsorted(s, sp)
            ok = (col < s.size)
            ok[ok] = s[col[ok]] == sp[ok]
            r, c = rows[ok], col[ok]
            d = self.offset[r]
            out[r, c] = d * (2.0 * s[c] + d) / t[r] ** 2
        return out


def time_grid(singular_points=(), *, alpha=None, t_min=None, t_max=None, per_decade=48,
              n=16, density=1, tail=True, extra_breaks=(), sub_panels=4):
    """Build a :class:`TimeGrid`.

    Panels are log-spaced (``per_decade`` per decade) and every point in
    ``singular_points`` is a panel boundary. A panel that starts at a
    singular point is graded toward it with the power suited to
    ``(t - s)**(alpha - 1)`` and its square, after ``sub_panels`` geometric
    subdivisions toward ``s`` when alpha is not an integer. With ``tail=True`` the range
    ``(t_max, inf)`` is covered exactly through ``u = t_max / t``.
    """
    sing = np.unique(np.asarray(singular_points, dtype=float))
    if np.any(sing <= 0):
        raise ValueError("singular points must be positive")
    anchors = np.concatenate([sing, np.asarray(extra_breaks, dtype=float)])
    if t_min is None:
        t_min = 0.5 * anchors.min() if anchors.size else 1e-3
    if t_max is None:
        t_max = 20.0 * anchors.max() if anchors.size else 1e3
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    n_dec = math.log10(t_max / t_min)
    logb = np.linspace(math.log(t_min), math.log(t_max), max(2, math.ceil(n_dec * per_decade)) + 1)
    logb = np.exp(logb)
    inside = anchors[(anchors > t_min) & (anchors < t_max)]
    if inside.size:
        # drop log breaks crowding an anchor, which would leave a sliver panel
        gap = 0.25 * (math.exp(math.log(t_max / t_min) / (logb.size - 1)) - 1.0)
        near = np.abs(logb[:, None] - inside[None, :]).min(axis=1) < gap * logb
        near[0] = near[-1] = False
        logb = logb[~near]
    breaks = np.unique(np.concatenate([logb, inside]))
    breaks[0], breaks[-1] = t_min, t_max

    exps = [] if alpha is None else [alpha - 1.0, 2.0 * (alpha - 1.0)]
    q = max([grading_power(e) for e in exps if e > -1] + [1])
    if q > 1 and sing.size:
        # geometric sub-panels to the right of each singular point keep the
        # singularity well separated from the ungraded panels
        idx = np.searchsorted(breaks, sing)
        ok = (idx < breaks.size - 1) & (breaks[np.minimum(idx, breaks.size - 1)] == sing)
        s_ok = sing[ok]
        nxt = breaks[idx[ok] + 1]
        sub = [s_ok + (nxt - s_ok) * 4.0**-k for k in range(1, sub_panels + 1)]
        breaks = np.unique(np.concatenate([breaks] + sub))
    npts = n * int(density)
    xg, wg = gauss_legendre(npts)
    nodes, weights, anchors_out, offsets = [], [], [], []
    sing_index = {v: i for i, v in enumerate(sing.tolist())}
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        k = sing_index.get(lo, -1)
        if k >= 0 and q > 1:
            v = 0.5 * (xg + 1.0)
            d = (hi - lo) * v**q
            t = lo + d
            w = 0.5 * wg * (hi - lo) * q * v ** (q - 1) / t
        else:
            # Gauss-Legendre in log t, where dt/t = d(log t)
            la, lb = math.log(lo), math.log(hi)
            t = np.exp(la + 0.5 * (lb - la) * (xg + 1.0))
            w = 0.5 * (lb - la) * wg
            d = t - lo if k >= 0 else np.full(npts, np.nan)
        nodes.append(t)
        weights.append(w)
        anchors_out.append(np.full(npts, k))
        offsets.append(d)
    is_tail = [np.zeros(npts * (len(breaks) - 1), dtype=bool)]
    if tail:
        u, wu = gl_on(0.0, 1.0, npts)
        nodes.append(t_max / u[::-1])
        weights.append((wu / u)[::-1])
        anchors_out.append(np.full(npts, -1))
        offsets.append(np.full(npts, np.nan))
        is_tail.append(np.ones(npts, dtype=bool))
    t = np.concatenate(nodes)
    w = np.concatenate(weights)
    anc = np.concatenate(anchors_out)
    off = np.concatenate(offsets)
    for arr in (t, w, anc, off):
        arr.setflags(write=False)
    desc = (f"log-panels {per_decade}/decade x {npts} nodes on [{t_min:.6g}, {t_max:.6g}], "
            f"{sing.size} singular points, grading q={q}, tail={'mapped' if tail else 'none'}")
    return TimeGrid(t, w, tuple(sing.tolist()), float(t_min), float(t_max),
                    np.concatenate(is_tail), anc, off, desc)


def integrate_dt_over_t(f, grid: TimeGrid, *, decay=None, tol=1e-10):
    """Approximate ``int_0^inf f(t) dt/t`` on a :class:`TimeGrid`.

    If the grid carries no mapped tail, the contribution of ``(t_max, inf)``
    is modelled as ``f(t_max) / decay`` for integrands decaying like
    ``t**-decay``.
    """
    vals = np.asarray(f(grid.nodes), dtype=float)
    total = float(np.dot(grid.weights, vals))
    if not grid.tail.any() and decay is not None:
        if decay <= 0:
            raise ValueError("decay exponent must be positive")
        tail = float(np.asarray(f(np.array([grid.t_max])), dtype=float)[0]) / decay
        total += tail
        if abs(tail) > 10 * tol:
            warnings.warn(f"estimated tail {tail:.3g} beyond t_max dominates tolerance",
                          TailDominanceWarning, stacklevel=2)
    return total
