"""Experiment drivers and the ``besselsquare`` command line.

Every driver returns plain rows; CSV output starts with the comment line
``# besselsquare <version> <config-hash>`` followed by the corpus line, a
header row and the rows in a fixed order, so identical configurations give
byte-identical files whatever the worker count.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, special

from . import __version__
from .corpus import (
    Corpus,
    discrete_family,
    hankel_family,
    load_corpus,
    multiplier_family,
    smooth_bump,
)
from .fourier_bessel import (
    CoefficientVector,
    SpectralBasis,
    analyze,
    comparison_kernel,
    dt_riesz_coeffs,
    heat_kernel,
    riesz_coeffs,
    synthesize,
    unit_grid,
)
from .hankel import (
    CutoffPhi,
    PanelChebyshev,
    SpectrumInterpolant,
    cosine_transform,
    dt_riesz_cosine,
    dt_riesz_hankel,
    gaussian_profile,
    gtilde_psi_kernel,
    hankel_transform,
    heat_kernel_hankel,
    isometry_check,
)
from .multipliers import MultiplierSeq, abel_identity, domination_check
from .quadrature import QuadratureError, composite_gl, integrate_singular, time_grid
from .specfun import SpecialFunctionError, as_order, bessel_zeros
from .square_functions import (
    default_time_grid,
    g_discrete,
    l2_identity_constant,
    lp_norm,
    reconstruct_via_squares,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 1, 2, 3
DIVERGE_SLOPE = 0.05
BOUNDED_SLOPE = 0.01
CAUCHY_BAND = 0.05


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 1)."""


# ------------------------------------------------------------------ thresholds


def threshold_alpha(p, nu, side="discrete") -> float:
    """Critical smoothness above which the square function is L^p bounded."""
    p, nu = float(p), float(nu)
    if not 1 < p < math.inf:
        raise ConfigError("p must lie in (1, inf)")
    if nu <= -1:
        raise ConfigError("nu must exceed -1")
    if side == "hankel":
        return max(1.0 / p, 0.5)
    if side != "discrete":
        raise ConfigError(f"unknown side {side!r}")
    if nu >= -0.5:
        return max(1.0 / p, 1.0 - 1.0 / p)
    lo, hi = 2.0 / (2.0 * nu + 3.0), -2.0 / (2.0 * nu + 1.0)
    # the window is open, but both branches extend continuously to its ends
    # (where they equal 1), so the endpoints report that limiting value
    if not lo <= p <= hi:
        raise ConfigError(f"p={p} outside the admissible window ({lo:.6g}, {hi:.6g}) for nu={nu}")
    if p <= 2:
        return (2.0 / p + 2.0 * nu + 1.0) / (4.0 * nu + 4.0)
    return (-2.0 / p + 2.0 * nu + 3.0) / (4.0 * nu + 4.0)


# ---------------------------------------------------------------------- config


@dataclass(frozen=True)
class ScanConfig:
    nu: float
    p_grid: tuple
    alpha_grid: tuple
    levels: tuple
    side: str = "discrete"
    corpus: str = "standard"
    out: str | None = None
    seed: int = 0
    workers: int = 1
    diverge_slope: float = DIVERGE_SLOPE
    bounded_slope: float = BOUNDED_SLOPE

    def __post_init__(self):
        if self.nu <= -1:
            raise ConfigError("nu must exceed -1")
        if not self.p_grid or not self.alpha_grid or not self.levels:
            raise ConfigError("p, alpha and level grids must be nonempty")
        if any(not 1 < p < math.inf for p in self.p_grid):
            raise ConfigError("every p must lie in (1, inf)")
        if any(a <= 0.5 for a in self.alpha_grid):
            raise ConfigError("every alpha must exceed 1/2")
        if len(self.levels) < 3:
            raise ConfigError("slopes need at least 3 levels")
        if list(self.levels) != sorted(set(self.levels)):
            raise ConfigError("levels must be strictly increasing")
        if self.side not in ("discrete", "hankel"):
            raise ConfigError(f"unknown side {self.side!r}")
        if self.side == "discrete" and any(int(J) != J or J < 2 for J in self.levels):
            raise ConfigError("discrete levels are truncations J >= 2")
        if self.side == "hankel" and min(self.levels) <= 1:
            raise ConfigError("Hankel levels are support cut-offs X > 1")

    def digest(self) -> str:
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        return config_hash(d)


def config_hash(d: dict) -> str:
    blob = json.dumps(d, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class ScanRow:
    p: float
    alpha: float
    level: float
    ratio: float
    slope: float
    verdict: str
    alpha_crit: float
    member: str = ""
    flag: str = ""


@dataclass
class ScanResult:
    rows: list
    header: tuple = ("p", "alpha", "level", "ratio", "slope", "verdict", "alpha_crit",
                     "member", "flag")
    meta: dict = field(default_factory=dict)

    def verdicts(self) -> dict:
        return {(r.p, r.alpha): r.verdict for r in self.rows}


def fit_slope(levels, values) -> float:
    """Least-squares slope of log(values) against log(levels)."""
    lx, ly = np.log(np.asarray(levels, dtype=float)), np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def classify(levels, ratios, diverge=DIVERGE_SLOPE, bounded=BOUNDED_SLOPE,
             band=CAUCHY_BAND):
    """``(slope, verdict)`` for a ratio ladder."""
    slope = fit_slope(levels, ratios)
    r = np.asarray(ratios, dtype=float)
    cauchy = abs(r[-1] - r[-2]) <= band * abs(r[-1])
    if slope > diverge:
        return slope, "diverging"
    if slope <= bounded and cauchy:
        return slope, "bounded"
    return slope, "inconclusive"


def _pmap(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


# ------------------------------------------------------------------ sharpness


def psi_functional(nu, alpha, p, X_list, *, degree=32):
    """T(X) = int_1^X (int_{1/2}^1 |Gt(psi)(x, t)|^2 dt/t)^(p/2) dx for each X.

    With Gt(psi)(x, t) = t K(xt) the inner integral equals
    x^-2 int_{x/2}^x w K(w)^2 dw; ``w K(w)^2`` is interpolated once on
    (0, max X) and integrated panel by panel. Returns ``(T, flags)`` where a
    flag marks an X at which halving the outer rule moved T by more than
    1e-8 relatively.
    """
    nu = as_order(nu)
    X = np.asarray(sorted(float(v) for v in X_list))
    if X[0] <= 1:
        raise ConfigError("X values must exceed 1")
    X_max = X[-1]
    F = PanelChebyshev(lambda w: w * gtilde_psi_kernel(nu, alpha, w) ** 2, X_max + 1.0,
                       power=2.0 * nu + 2.0, degree=degree)
    h = F.panel
    n_pan = F.coef.shape[0]
    xg, wg = composite_gl(np.array([0.0, 1.0]), 24)
    left = h * np.arange(n_pan)
    # cumulative integral of F at panel boundaries; the first panel carries
    # the algebraic factor and gets a Jacobi rule
    xj, wj = special.roots_jacobi(24, 0.0, 2.0 * nu + 2.0)
    uj = 0.5 * h * (xj + 1.0)
    first = float(np.dot(wj * (0.5 * h) ** (2.0 * nu + 3.0), F(uj) / uj ** (2.0 * nu + 2.0)))
    rest = (F(left[1:, None] + h * xg[None, :]) @ (wg * h)) if n_pan > 1 else np.empty(0)
    M_edges = np.concatenate([[0.0, first], first + np.cumsum(rest)])

    def M(w):
        w = np.asarray(w, dtype=float)
        k = np.clip((w // h).astype(int), 1, n_pan - 1)
        a = k * h
        partial = F(a[:, None] + (w - a)[:, None] * xg[None, :]) @ wg * (w - a)
        return M_edges[k] + partial

    def T_at(n):
        br = np.arange(1.0, X_max + 0.5, 1.0)
        if br[-1] < X_max:
            br = np.append(br, X_max)
        br = np.unique(np.concatenate([br, X]))
        x, w = composite_gl(br, n)
        inner = (M(x) - M(0.5 * x)) / x**2
        cum = np.concatenate([[0.0], np.cumsum(np.add.reduceat(w * inner ** (p / 2.0),
                                                               np.arange(0, x.size, n)))])
        return np.interp(X, br, cum)

    T = T_at(16)
    T_half = T_at(8)
    flags = ["degraded" if abs(a - b) > 1e-8 * abs(a) else "" for a, b in zip(T, T_half)]
    return T, flags


def cosine_average(x, nu, alpha, n=64):
    """int_{1/2}^1 cos^2(x t - (pi/2)(nu + 1/2 + alpha)) dt by Gauss-Legendre."""
    beta = 0.5 * math.pi * (nu + 0.5 + alpha)
    t, w = composite_gl(np.array([0.5, 1.0]), n)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.cos(np.outer(x, t) - beta) ** 2 @ w


def locate_cosine_threshold(nu, alpha, span=100.0):
    """``(x0, min_avg)``: the last point where the cosine average drops below
    1/8, and the minimum of the average over (x0, x0 + span)."""
    xs = np.linspace(1e-3, 8.0, 8001)
    a = cosine_average(xs, nu, alpha) - 0.125
    below = np.nonzero(a < 0)[0]
    if below.size == 0:
        x0 = 0.0
    else:
        i = below[-1]
        x0 = optimize.brentq(lambda v: cosine_average(v, nu, alpha)[0] - 0.125, xs[i], xs[i + 1],
                             xtol=1e-14)
    grid = np.linspace(x0, x0 + span, int(50 * span) + 1)[1:]
    vals = cosine_average(grid, nu, alpha)
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda v: cosine_average(v, nu, alpha)[0], bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    return float(x0), float(min(vals.min(), res.fun))


def sharpness_scan(nu, p, alphas, X_list, *, workers=1):
    """T(X) ladder per alpha with the fitted growth exponent of its dyadic
    increments and the Cauchy gap between the last two levels."""
    p = float(p)
    X = sorted(float(v) for v in X_list)
    if len(X) < 3:
        raise ConfigError("need at least 3 X levels")
    alphas = [float(a) for a in alphas]
    if any(a <= 0.5 for a in alphas):
        raise ConfigError("alpha must exceed 1/2")

    def one(alpha):
        T, flags = psi_functional(nu, alpha, p, X)
        inc = np.diff(T)
        expo = fit_slope(X[:-1], np.abs(inc)) if np.all(inc != 0) else float("nan")
        gap = abs(T[-1] - T[-2]) / abs(T[-1])
        x0, cmin = locate_cosine_threshold(nu, alpha)
        return alpha, T, flags, expo, gap, x0, cmin

    rows = []
    for alpha, T, flags, expo, gap, x0, cmin in _pmap(one, alphas, workers):
        verdict = "diverging" if expo > -DIVERGE_SLOPE else (
            "bounded" if gap <= CAUCHY_BAND else "inconclusive")
        for Xk, Tk, fl in zip(X, T, flags):
            rows.append({"alpha": alpha, "X": Xk, "T": float(Tk), "growth_exponent": expo,
                         "predicted": 1.0 - alpha * p, "cauchy_gap": gap, "verdict": verdict,
                         "x0": x0, "cosine_min": cmin, "flag": fl})
    rows.sort(key=lambda r: (r["alpha"], r["X"]))
    return rows


# ------------------------------------------------------------------ region scan


def _discrete_ratios(cfg: ScanConfig, corpus: Corpus, alpha, J):
    basis = SpectralBasis.build(cfg.nu, int(J))
    grid = default_time_grid(basis, alpha)
    x = unit_grid(cfg.nu, int(J))
    out = []
    for mid, c in discrete_family(corpus, basis, cfg.seed):
        fx = x.with_values(synthesize(c, x.nodes))
        G = g_discrete(c, basis, alpha, grid, x)
        out.append((mid, G, fx))
    return out


def _psi_norm(nu, p, z_max=100.0):
    x, w = composite_gl(np.linspace(0.0, z_max, int(2 * z_max) + 1), 16)
    return float(np.dot(w, np.abs(hankel_transform(CutoffPhi(), nu, x)) ** p) ** (1.0 / p))


def region_scan(cfg: ScanConfig, corpus: Corpus | None = None) -> ScanResult:
    """Ratios ||G_alpha f||_p / ||f||_p along the level ladder for every
    (p, alpha) cell, with the slope-based verdict.

    Discrete side: levels are truncations J and the ratio is the maximum over
    the corpus. Hankel side: levels are cut-offs X and the ratio is
    T(X)^(1/p) / ||psi||_p from :func:`psi_functional`.
    """
    corpus = corpus or load_corpus()
    levels = list(cfg.levels)
    cells = [(p, a) for p in cfg.p_grid for a in cfg.alpha_grid]

    def crit(p):
        try:
            return threshold_alpha(p, cfg.nu, cfg.side)
        except ConfigError:
            return float("nan")

    if cfg.side == "discrete":
        # G depends on alpha and J only; p enters through the norms
        def level_job(key):
            alpha, J = key
            return key, _discrete_ratios(cfg, corpus, alpha, J)

        keys = [(a, J) for a in cfg.alpha_grid for J in levels]
        cache = dict(_pmap(level_job, keys, cfg.workers))
        rows = []
        for p, a in cells:
            ratios, members = [], []
            for J in levels:
                best, who = -1.0, ""
                for mid, G, fx in cache[(a, J)]:
                    r = lp_norm(G, p) / lp_norm(fx, p)
                    if r > best:
                        best, who = r, mid
                ratios.append(best)
                members.append(who)
            slope, verdict = classify(levels, ratios, cfg.diverge_slope, cfg.bounded_slope)
            for J, r, who in zip(levels, ratios, members):
                rows.append(ScanRow(p, a, J, r, slope, verdict, crit(p), who))
    else:
        def cell_job(cell):
            p, a = cell
            T, flags = psi_functional(cfg.nu, a, p, levels)
            return cell, (T ** (1.0 / p) / _psi_norm(cfg.nu, p), flags)

        res = dict(_pmap(cell_job, cells, cfg.workers))
        rows = []
        for p, a in cells:
            ratios, flags = res[(p, a)]
            slope, verdict = classify(levels, ratios, cfg.diverge_slope, cfg.bounded_slope)
            for X, r, fl in zip(levels, ratios, flags):
                rows.append(ScanRow(p, a, X, float(r), slope, verdict, crit(p), "psi", fl))
    rows.sort(key=lambda r: (r.p, r.alpha, r.level))
    return ScanResult(rows, meta={"config_hash": cfg.digest(), "corpus": corpus.id,
                                  "corpus_hash": corpus.content_hash})


def phase_plot_svg(result: ScanResult, cfg: ScanConfig, path):
    """Static (p, alpha) phase plot: one marker per cell coloured by verdict,
    with the critical curve overlaid."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    colours = {"bounded": "tab:green", "diverging": "tab:red", "inconclusive": "tab:gray"}
    fig, ax = plt.subplots(figsize=(5, 4))
    cells = {(r.p, r.alpha): r.verdict for r in result.rows}
    for verdict, colour in colours.items():
        pts = [(1.0 / p, a) for (p, a), v in cells.items() if v == verdict]
        if pts:
            ax.scatter(*zip(*pts), c=colour, s=40, label=verdict)
    inv = np.linspace(0.01, 0.99, 397)
    crit = []
    for q in inv:
        try:
            crit.append(threshold_alpha(1.0 / q, cfg.nu, cfg.side))
        except ConfigError:
            crit.append(np.nan)
    ax.plot(inv, crit, "k-", lw=1, label="critical alpha")
    ax.set_xlabel("1/p")
    ax.set_ylabel("alpha")
    ax.set_title(f"{cfg.side} side, nu = {cfg.nu:g}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ------------------------------------------------------------------ transference


def transference_demo(nu, k, r_list, x=1.0, *, f=None, alpha=1.0, per_decade=16, n=8):
    """H-norm distance between the zero-sampled sum I_r(x, .) and its
    continuous limit, for each r, with the fitted decay order.

    I_r(x, t) = sum_{j <= k[r]} w(s_j/r, t) h(f)(s_j/r) sqrt(x s_j/r)
    J_nu(x s_j/r) (s_{j+1} - s_j)/r, where w(y, t) = (1 - y^2/t^2)_+^(alpha-1)
    (y/t)^2; the limit is the same integrand integrated over y in (0, pi k).
    """
    nu = as_order(nu)
    if nu <= -0.5:
        raise ConfigError("transference demo needs nu > -1/2")
    f = f or gaussian_profile()
    r_list = [float(r) for r in r_list]
    if any(r <= f.support for r in r_list) or r_list != sorted(r_list):
        raise ConfigError("r values must increase and exceed the profile support")
    top = math.pi * k
    H = SpectrumInterpolant(f, nu, top + 1.0)
    g = PanelChebyshev(lambda y: H(y) * np.sqrt(x * y) * special.jv(nu, x * y), top + 1.0,
                       2.0 * nu + 1.0)

    # continuous side: u-rule on (0, 1) for t <= pi k, fixed y-rule beyond
    n_u = int(top * (x + f.support) / 2.0 + 40)
    uj, wj = special.roots_jacobi(n_u, alpha - 1.0, 0.0)
    u = 0.5 * (uj + 1.0)
    wu = wj * 0.5**alpha * (1.0 + u) ** (alpha - 1.0) * u**2
    yf, wf = composite_gl(np.linspace(0.0, top, int(4 * top) + 1), 16)
    gf = g(yf) * wf

    def continuous(t):
        out = np.empty(t.size)
        near = t <= top
        if near.any():
            tn = t[near]
            out[near] = np.concatenate([tn[i:i + 256] * (g(tn[i:i + 256, None] * u) @ wu)
                                        for i in range(0, tn.size, 256)])
        far = ~near
        if far.any():
            T = t[far][:, None]
            out[far] = (np.abs(1.0 - (yf / T) ** 2) ** (alpha - 1.0) * (yf / T) ** 2) @ gf
        return out

    m_max = int(k * math.floor(r_list[-1]))
    zeros = bessel_zeros(nu, m_max + 1)
    rows = []
    for r in r_list:
        m = int(k * math.floor(r))
        y = zeros[:m] / r
        a = g(y) * np.diff(zeros[: m + 1]) / r
        grid = time_grid(y, alpha=alpha, t_min=0.5 * y[0], t_max=20.0 * top, n=n,
                         per_decade=per_decade)
        t = grid.nodes
        I = np.empty(t.size)
        for i in range(0, t.size, 2048):
            T = t[i:i + 2048, None]
            om = 1.0 - (y / T) ** 2
            W = np.where(om > 0, np.abs(om) ** (alpha - 1.0), 0.0) * (y / T) ** 2
            I[i:i + 2048] = W @ a
        C = continuous(t)
        err = math.sqrt(float(np.dot(grid.weights, (I - C) ** 2)))
        rows.append({"r": r, "terms": m, "h_error": err,
                     "limit_norm": math.sqrt(float(np.dot(grid.weights, C**2)))})
    order = fit_slope(r_list, [row["h_error"] for row in rows])
    for row in rows:
        row["fitted_order"] = order
    return rows


# ------------------------------------------------------------------ identity suite

IDENTITY_CHECKS = ("zeros", "orthonormality", "l2_constant", "reproducing", "isometry",
                   "cosine", "heat", "sandwich", "abel", "domination")


def _check_zeros(nu, seed):
    s = bessel_zeros(nu, 200)
    val = float(np.max(np.abs(special.jv(nu, s))))
    tol = 1e-10
    if nu in (0.5, -0.5):
        exact = (np.arange(1, 101) - (0.5 if nu < 0 else 0.0)) * math.pi
        val = max(val, float(np.max(np.abs(s[:100] - exact))))
        tol = 1e-12
    return val, tol


def _check_orthonormality(nu, seed):
    basis = SpectralBasis.build(nu, 20)
    x = unit_grid(nu, 20)
    P = basis.phi_matrix(x.nodes)
    gram = (P * x.weights[:, None]).T @ P
    return float(np.max(np.abs(gram - np.eye(20)))), 1e-8


def _random_coefficients(basis, rng, count):
    return [CoefficientVector(basis, rng.standard_normal(basis.J)) for _ in range(count)]


def _check_l2_constant(nu, seed, alphas=(0.75, 1.0, 1.5, 2.0), J=24, count=20):
    basis = SpectralBasis.build(nu, J)
    x = unit_grid(nu, J)
    rng = np.random.default_rng([seed, 3])
    worst = 0.0
    cs = _random_coefficients(basis, rng, count)
    for a in alphas:
        grid = default_time_grid(basis, a)
        k = l2_identity_constant(a)
        for c in cs:
            G = g_discrete(c, basis, a, grid, x)
            worst = max(worst, abs(lp_norm(G, 2) ** 2 / c.norm() ** 2 / k - 1.0))
    return worst, 1e-6


def _check_reproducing(nu, seed, alphas=(1.0, 1.5, 2.0), J=48):
    basis = SpectralBasis.build(nu, J)
    x = unit_grid(nu, J)
    f = x.with_values(smooth_bump(0.2, 0.8)(x.nodes))
    c = analyze(f, basis)
    target = x.with_values(synthesize(c, x.nodes))
    worst = 0.0
    for a in alphas:
        rec = reconstruct_via_squares(target, basis, a)
        worst = max(worst, math.sqrt(np.dot(x.weights, (rec.values - target.values) ** 2))
                    / target.l2_norm())
    return worst, 1e-5


def _check_isometry(nu, seed):
    worst = 0.0
    for _, f in hankel_family(load_corpus()):
        a, b = isometry_check(f, nu)
        worst = max(worst, abs(a / b - 1.0))
    return worst, 1e-6


def _check_cosine(nu, seed):
    """nu = -1/2 paths against the independent Fourier-cosine implementations."""
    f = gaussian_profile()
    z = np.array([0.3, 1.0, 2.5, 7.0, 15.0])
    worst = float(np.max(np.abs(hankel_transform(f, -0.5, z)
                                - np.array([cosine_transform(f, v) for v in z]))))
    for alpha, t, xv in ((1.0, 2.0, 1.5), (1.5, 5.0, 0.7), (0.75, 3.0, 2.0)):
        a = dt_riesz_hankel(f, -0.5, alpha, t, xv)
        b = dt_riesz_cosine(f, alpha, t, xv)
        worst = max(worst, abs(a - b))
    return worst, 1e-8


def _check_heat(nu, seed):
    """Semigroup property of both heat kernels; for nu = -1/2 also the
    Hankel kernel against its Gaussian reflection form."""
    worst = 0.0
    t1, t2 = 0.01, 0.015
    basis = SpectralBasis.build(nu, 80)
    zg = unit_grid(nu, 80)
    for xv, yv in ((0.3, 0.5), (0.6, 0.62)):
        lhs = np.dot(zg.weights, np.ravel(heat_kernel(basis, t1, xv, zg.nodes))
                     * np.ravel(heat_kernel(basis, t2, zg.nodes, yv)))
        worst = max(worst, abs(lhs - heat_kernel(basis, t1 + t2, xv, yv)))
    e = 2.0 * nu + 1.0  # both kernels vanish like z^(nu+1/2) at the origin
    for xv, yv in ((1.0, 1.5), (2.0, 2.2)):
        lhs, _ = integrate_singular(
            lambda z: heat_kernel_hankel(nu, 0.3, xv, z) * heat_kernel_hankel(nu, 0.2, z, yv)
            / z**e, 0.0, 12.0, 1e-13, left_exponent=e)
        worst = max(worst, abs(lhs - heat_kernel_hankel(nu, 0.5, xv, yv)))
    if nu == -0.5:
        xs, ys = np.meshgrid(np.linspace(0.1, 5, 12), np.linspace(0.1, 5, 12))
        t = 0.7
        refl = (np.exp(-(xs - ys) ** 2 / (4 * t)) + np.exp(-(xs + ys) ** 2 / (4 * t))) \
            / math.sqrt(4 * math.pi * t)
        worst = max(worst, float(np.max(np.abs(heat_kernel_hankel(-0.5, t, xs, ys) - refl))))
    return worst, 1e-7


def heat_sandwich(nu, ts=(0.01, 0.05, 0.1, 0.5, 1.0), n_x=20, J=400, reach=25.0):
    """``(min, max)`` of W_t / G_t over a grid in (0, 1)^2 x ts.

    Pairs with ``(x-y)^2/(4t) > reach`` are left out: both kernels are then
    below the rounding level of the eigenfunction sum.
    """
    basis = SpectralBasis.build(nu, J)
    xs = np.linspace(0.05, 0.95, n_x)
    X, Y = (a.ravel() for a in np.meshgrid(xs, xs))
    ratios = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for t in ts:
            keep = (X - Y) ** 2 / (4.0 * t) <= reach
            W = heat_kernel(basis, t, X[keep], Y[keep])
            G = comparison_kernel(nu, t, X[keep], Y[keep], basis.zeros[0])
            ratios.append(W / G)
    r = np.concatenate(ratios)
    return float(r.min()), float(r.max())


def _check_sandwich(nu):
    """The constant C with W_t / G_t in [1/C, C]; only finiteness is required."""
    lo, hi = heat_sandwich(nu)
    C = max(hi, 1.0 / lo) if lo > 0 else math.inf
    return C, math.inf if lo > 0 else 0.0


def _check_abel(nu, seed, J=40, trials=6):
    basis = SpectralBasis.build(nu, J)
    rng = np.random.default_rng([seed, 7])
    worst = 0.0
    for _ in range(trials):
        c = CoefficientVector(basis, rng.standard_normal(J))
        m = MultiplierSeq(rng.uniform(-1, 1, J + 1))
        t = rng.uniform(basis.zeros[0], basis.zeros[-1])
        lhs, rhs = abel_identity(c, m, t)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst, 1e-12


def _check_domination(nu, seed, J=64):
    """Largest ratio G_1(m(L)f) / (|||m||| G_1 f) over corpus x multipliers;
    passes when it does not exceed 1 + 1e-8."""
    corpus = load_corpus()
    basis = SpectralBasis.build(nu, J)
    grid = default_time_grid(basis, 1.0)
    worst = 0.0
    for _, c in discrete_family(corpus, basis, seed):
        for _, m in multiplier_family(corpus, basis):
            worst = max(worst, domination_check(c, m, basis, grid).max_ratio)
    return worst - 1.0, 1e-8


_CHECKS = {
    "zeros": _check_zeros,
    "orthonormality": _check_orthonormality,
    "l2_constant": _check_l2_constant,
    "reproducing": _check_reproducing,
    "isometry": _check_isometry,
    "cosine": _check_cosine,
    "heat": _check_heat,
    "sandwich": lambda nu, seed: _check_sandwich(nu),
    "abel": _check_abel,
    "domination": _check_domination,
}


def identity_suite(nu_list, *, only=None, seed=0, workers=1):
    """Rows ``{check, nu, value, tolerance, status}`` for every exact check.

    ``value`` is the measured defect; ``cosine`` runs only at nu = -1/2.
    """
    names = list(IDENTITY_CHECKS) if only is None else [only]
    for nm in names:
        if nm not in _CHECKS:
            raise ConfigError(f"unknown identity {nm!r}")
    nus = [float(v) for v in nu_list]
    if any(v <= -1 for v in nus):
        raise ConfigError("nu must exceed -1")
    jobs = [(nm, v) for nm in names for v in nus if nm != "cosine" or v == -0.5]

    def run(job):
        nm, v = job
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            val, tol = _CHECKS[nm](v, seed)
        ok = val <= tol and math.isfinite(val)
        return {"check": nm, "nu": v, "value": float(val), "tolerance": tol,
                "status": "pass" if ok else "fail"}

    rows = _pmap(run, jobs, workers)
    rows.sort(key=lambda r: (IDENTITY_CHECKS.index(r["check"]), r["nu"]))
    return rows


# ------------------------------------------------------------------ output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(rows, header, stream, *, config_hash, corpus: Corpus | None = None):
    stream.write(f"# besselsquare {__version__} {config_hash}\n")
    if corpus is not None:
        stream.write(f"# corpus {corpus.id} v{corpus.version} {corpus.content_hash}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if isinstance(r, dict):
            w.writerow([_fmt(r[h]) for h in header])
        else:
            w.writerow([_fmt(getattr(r, h)) for h in header])


# ------------------------------------------------------------------ CLI


def _floats(s):
    if s is None:
        return None
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    try:
        return [float(v) for v in str(s).split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"bad number list {s!r}") from e


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for ln, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{ln}: expected key=value")
                k, v = line.split("=", 1)
                out[k.strip().replace("-", "_")] = v.strip()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return out


COMMON = ("nu", "alpha", "p", "truncation", "tol", "seed", "out", "format", "workers")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors: exit 1 rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="besselsquare",
                                 description="Fourier-Bessel and Hankel square-function experiments")
    ap.add_argument("--version", action="version", version=f"besselsquare {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--nu", help="Bessel order (comma list where several are accepted)")
        p.add_argument("--alpha", help="smoothness order(s), comma separated")
        p.add_argument("--p", help="Lebesgue exponent(s), comma separated")
        p.add_argument("--truncation", help="truncation J, or a comma ladder of J / X values")
        p.add_argument("--tol", type=float, help="quadrature tolerance")
        p.add_argument("--seed", type=int, help="seed for randomised corpus members")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "svg"), help="output format")
        p.add_argument("--config", help="flat key=value file; flags override it")
        p.add_argument("--workers", type=int, help="worker threads")
        return p

    add("zeros", "zeros s_j and normalisations d_j")
    p = add("expand", "Fourier-Bessel coefficients of a corpus function")
    p.add_argument("--function", help="discrete corpus member id")
    p = add("riesz", "Riesz mean and its t-derivative on the unit grid")
    p.add_argument("--function")
    p.add_argument("--t", type=float, help="Riesz parameter t")
    p = add("gsquare", "square function G_alpha f on the unit grid")
    p.add_argument("--function")
    p = add("region-scan", "(p, alpha) scan with slope verdicts")
    p.add_argument("--side", choices=("discrete", "hankel"))
    p = add("sharpness", "growth of the truncated psi functional")
    p.add_argument("--X", help="comma list of cut-offs")
    p = add("transference", "zero-sampled sums against their continuous limit")
    p.add_argument("--k", type=int)
    p.add_argument("--r", help="comma list of scales")
    p.add_argument("--x", type=float)
    p = add("multiplier", "variation norms and the domination check on the corpus")
    p.add_argument("--multiplier", help="multiplier id (default: all)")
    p = add("identity-suite", "exact identities; exit 3 on any failure")
    p.add_argument("--only", help="run a single identity")
    return ap


def _settings(args) -> dict:
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    merged = dict(cfg)
    for k, v in vars(args).items():
        if k in ("command", "config"):
            continue
        if v is not None:
            merged[k] = v
    return merged


def _one(v, cast, name, default=None):
    if v is None:
        if default is None:
            raise ConfigError(f"--{name} is required")
        return default
    try:
        return cast(v)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad value for --{name}: {v!r}") from e


def _emit(rows, header, s, digest, corpus=None):
    out = s.get("out")
    buf = io.StringIO()
    write_csv(rows, header, buf, config_hash=digest, corpus=corpus)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _run(args) -> int:
    s = _settings(args)
    cmd = args.command
    fmt = s.get("format", "csv")
    if fmt == "svg" and cmd not in ("region-scan",):
        raise ConfigError(f"svg output is available for region-scan only, not {cmd}")
    seed = _one(s.get("seed"), int, "seed", 0)
    workers = _one(s.get("workers"), int, "workers", 1)
    corpus = load_corpus()
    digest = config_hash({"command": cmd, **{k: str(v) for k, v in s.items()
                                             if k not in ("out", "workers")}})

    def nu1():
        v = _one(s.get("nu"), float, "nu", 0.0)
        if v <= -1:
            raise ConfigError("nu must exceed -1")
        return v

    if cmd == "zeros":
        nu = nu1()
        J = _one(s.get("truncation"), int, "truncation", 20)
        if J < 1:
            raise ConfigError("truncation must be >= 1")
        b = SpectralBasis.build(nu, J)
        rows = [{"j": j + 1, "s": float(b.zeros[j]), "d": float(b.table.norms[j])}
                for j in range(J)]
        _emit(rows, ("j", "s", "d"), s, digest)
        return EXIT_OK

    if cmd in ("expand", "riesz", "gsquare"):
        nu = nu1()
        J = _one(s.get("truncation"), int, "truncation", 32)
        fid = s.get("function", "bump")
        if fid not in corpus.discrete_ids:
            raise ConfigError(f"unknown function {fid!r}; choose from {corpus.discrete_ids}")
        basis = SpectralBasis.build(nu, J)
        c = dict(discrete_family(corpus, basis, seed, ids=[fid]))[fid]
        if cmd == "expand":
            rows = [{"j": j + 1, "s": float(basis.zeros[j]), "c": float(np.real(c.values[j]))}
                    for j in range(J)]
            _emit(rows, ("j", "s", "c"), s, digest, corpus)
            return EXIT_OK
        alpha = _one(s.get("alpha"), float, "alpha", 1.0)
        x = unit_grid(nu, J)
        if cmd == "riesz":
            t = _one(s.get("t"), float, "t", float(basis.zeros[J // 2]))
            if alpha < 0 or t <= 0:
                raise ConfigError("need alpha >= 0 and t > 0")
            R = synthesize(riesz_coeffs(c, alpha, t), x.nodes)
            dR = synthesize(dt_riesz_coeffs(c, alpha, t), x.nodes) if alpha > 0.5 else \
                np.full(x.nodes.size, np.nan)
            rows = [{"x": float(a), "riesz": float(b), "t_dt_riesz": float(d)}
                    for a, b, d in zip(x.nodes, R, dR)]
            _emit(rows, ("x", "riesz", "t_dt_riesz"), s, digest, corpus)
            return EXIT_OK
        if alpha <= 0.5:
            raise ConfigError("alpha must exceed 1/2")
        G = g_discrete(c, basis, alpha, x=x, workers=workers)
        rows = [{"x": float(a), "G": float(b)} for a, b in zip(G.nodes, G.values)]
        _emit(rows, ("x", "G"), s, digest, corpus)
        return EXIT_OK

    if cmd == "region-scan":
        side = s.get("side", "discrete")
        default_levels = "16,32,64,128" if side == "discrete" else "50,100,200,400"
        levels = _floats(s.get("truncation", default_levels))
        cfg = ScanConfig(nu=nu1(), p_grid=tuple(_floats(s.get("p", "2")) or ()),
                         alpha_grid=tuple(_floats(s.get("alpha", "1")) or ()),
                         levels=tuple(int(v) if side == "discrete" else v for v in levels),
                         side=side, out=s.get("out"), seed=seed, workers=workers)
        res = region_scan(cfg, corpus)
        if fmt == "svg":
            if not cfg.out:
                raise ConfigError("svg output needs --out")
            phase_plot_svg(res, cfg, cfg.out)
        else:
            _emit(res.rows, res.header, s, cfg.digest(), corpus)
        return EXIT_OK

    if cmd == "sharpness":
        p = _one(s.get("p"), float, "p", 1.25)
        alphas = _floats(s.get("alpha", "0.7,0.9"))
        X = _floats(s.get("X", "25,50,100,200"))
        rows = sharpness_scan(nu1(), p, alphas, X, workers=workers)
        _emit(rows, ("alpha", "X", "T", "growth_exponent", "predicted", "cauchy_gap", "verdict",
                     "x0", "cosine_min", "flag"), s, digest)
        return EXIT_OK

    if cmd == "transference":
        k = _one(s.get("k"), int, "k", 10)
        r = _floats(s.get("r", "50,100,200,400"))
        xv = _one(s.get("x"), float, "x", 1.0)
        alpha = _one(s.get("alpha"), float, "alpha", 1.0)
        rows = transference_demo(nu1(), k, r, xv, alpha=alpha)
        _emit(rows, ("r", "terms", "h_error", "limit_norm", "fitted_order"), s, digest)
        return EXIT_OK

    if cmd == "multiplier":
        nu = nu1()
        J = _one(s.get("truncation"), int, "truncation", 64)
        basis = SpectralBasis.build(nu, J)
        grid = default_time_grid(basis, 1.0)
        want = s.get("multiplier")
        mults = multiplier_family(corpus, basis)
        if want is not None:
            mults = [(i, m) for i, m in mults if i == want]
            if not mults:
                raise ConfigError(f"unknown multiplier {want!r}")
        rows = []
        rel = _one(s.get("tol"), float, "tol", 1e-8)
        for fid, c in discrete_family(corpus, basis, seed):
            for mid, m in mults:
                rep = domination_check(c, m, basis, grid, rel_tol=rel, workers=workers)
                rows.append({"function": fid, "multiplier": mid, "norm": rep.norm,
                             "max_ratio": rep.max_ratio, "violations": rep.violations,
                             "status": "pass" if rep.passed else "fail"})
        _emit(rows, ("function", "multiplier", "norm", "max_ratio", "violations", "status"), s,
              digest, corpus)
        return EXIT_OK

    if cmd == "identity-suite":
        nus = _floats(s.get("nu", "-0.6,-0.5,0,0.5,2"))
        rows = identity_suite(nus, only=s.get("only"), seed=seed, workers=workers)
        _emit(rows, ("check", "nu", "value", "tolerance", "status"), s, digest, corpus)
        return EXIT_OK if all(r["status"] == "pass" for r in rows) else EXIT_ACCEPTANCE

    raise ConfigError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return _run(args)
    except ConfigError as e:
        print(f"besselsquare: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpecialFunctionError, QuadratureError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"besselsquare: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
