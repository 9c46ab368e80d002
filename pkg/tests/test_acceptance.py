"""Acceptance criteria 1-11, one test each.

Every test prints a ``criterion N ...: PASS/FAIL`` line through the
``report`` fixture; the collected lines are repeated in the terminal
summary. Tolerances are the contractual ones and are not relaxed.
"""
import math
import time
import warnings

import mpmath as mp
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from besselsquare.cli_experiments import (
    _check_heat,
    heat_sandwich,
    locate_cosine_threshold,
    main,
    sharpness_scan,
    transference_demo,
)
from besselsquare.corpus import (
    discrete_family,
    hankel_family,
    load_corpus,
    multiplier_family,
    smooth_bump,
)
from besselsquare.fourier_bessel import CoefficientVector, SampledFunction, SpectralBasis, analyze, \
    synthesize, unit_grid
from besselsquare.hankel import (
    CutoffPhi,
    cosine_transform,
    dt_riesz_cosine,
    dt_riesz_hankel,
    gaussian_profile,
    gtilde_psi_closedform,
    hankel_transform,
    heat_kernel_hankel,
    isometry_check,
    moment_free_profile,
)
from besselsquare.multipliers import MultiplierSeq, abel_identity, domination_check
from besselsquare.specfun import bessel_zeros
from besselsquare.square_functions import (
    default_time_grid,
    g_discrete,
    g_hankel,
    lp_norm,
    reconstruct_via_squares,
)
from test_square_functions import W_GAUSS, g_cosine_oracle, kappa_oracle


def test_criterion_01_zeros(report):
    t0 = time.perf_counter()
    j = np.arange(1, 101)
    err_half = float(np.max(np.abs(bessel_zeros(0.5, 100) - j * math.pi)))
    err_mhalf = float(np.max(np.abs(bessel_zeros(-0.5, 100) - (j - 0.5) * math.pi)))
    resid = max(float(np.max(np.abs(special.jv(nu, bessel_zeros(nu, 200)))))
                for nu in (-0.75, 0.0, 2.0))
    dt = time.perf_counter() - t0
    ok = max(err_half, err_mhalf) <= 1e-12 and resid <= 1e-10 and dt < 5
    report(1, "zeros", ok, f"closed-form err {max(err_half, err_mhalf):.2e}, "
                          f"|J(s)| {resid:.2e}, {dt:.2f}s")
    assert ok


def _gram_oracle(nu, J=20, panels=40, n=32):
    """Gram matrix by plain Gauss-Legendre after x = u^2, which removes the
    x^(2nu+1) endpoint behaviour for nu >= -3/4."""
    basis = SpectralBasis.build(nu, J)
    g, w = leggauss(n)
    br = np.linspace(0.0, 1.0, panels + 1)
    u = ((br[:-1, None] + br[1:, None]) / 2 + (br[1:, None] - br[:-1, None]) / 2 * g).ravel()
    wu = (np.diff(br)[:, None] / 2 * w).ravel()
    P = basis.phi_matrix(u**2)
    return (P * (2 * u * wu)[:, None]).T @ P


def test_criterion_02_orthonormality(report):
    t0 = time.perf_counter()
    worst = max(float(np.max(np.abs(_gram_oracle(nu) - np.eye(20))))
                for nu in (-0.75, -0.5, 0.0, 0.5, 2.0))
    dt = time.perf_counter() - t0
    ok = worst < 1e-8 and dt < 10
    report(2, "orthonormality", ok, f"max |Gram - I| {worst:.2e}, {dt:.2f}s")
    assert ok


def test_criterion_03_l2_constant(report):
    t0 = time.perf_counter()
    nu, J = 0.0, 24
    basis = SpectralBasis.build(nu, J)
    x = unit_grid(nu, J)
    rng = np.random.default_rng(2024)
    cs = [CoefficientVector(basis, rng.standard_normal(J)) for _ in range(20)]
    worst = 0.0
    for alpha in (0.75, 1.0, 1.5, 2.0):
        grid = default_time_grid(basis, alpha)
        k = kappa_oracle(alpha)
        for c in cs:
            G = g_discrete(c, basis, alpha, grid, x)
            worst = max(worst, abs(lp_norm(G, 2) ** 2 / c.norm() ** 2 / k - 1))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 30
    report(3, "L2 square-function constant", ok, f"max rel err {worst:.2e}, {dt:.2f}s")
    assert ok


def test_criterion_04_reproducing(report):
    t0 = time.perf_counter()
    worst = 0.0
    for nu in (-0.5, 0.0, 1.0):
        J = 48
        basis = SpectralBasis.build(nu, J)
        x = unit_grid(nu, J)
        f = x.with_values(smooth_bump(0.2, 0.8)(x.nodes))
        target = x.with_values(synthesize(analyze(f, basis), x.nodes))
        for alpha in (1.0, 1.5, 2.0):
            rec = reconstruct_via_squares(target, basis, alpha)
            err = math.sqrt(np.dot(x.weights, (rec.values - target.values) ** 2)) / target.l2_norm()
            worst = max(worst, err)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-5 and dt < 30
    report(4, "reproducing formula", ok, f"max rel L2 err {worst:.2e}, {dt:.2f}s")
    assert ok


def test_criterion_05_isometry_and_cosine(report):
    iso = 0.0
    for nu in (-0.6, -0.5, 0.0, 0.5, 2.0):
        for _, f in hankel_family(load_corpus()):
            a, b = isometry_check(f, nu)
            iso = max(iso, abs(a / b - 1))
    # nu = -1/2 paths against QUADPACK cosine-weight implementations
    f = gaussian_profile(3, W_GAUSS)
    z = np.array([0.3, 1.0, 2.5, 7.0, 15.0])
    cos_err = float(np.max(np.abs(hankel_transform(f, -0.5, z)
                                  - np.array([cosine_transform(f, v) for v in z]))))
    mf = moment_free_profile(4, 0.3, 2)
    cos_err = max(cos_err, float(np.max(np.abs(hankel_transform(mf, -0.5, z)
                                               - np.array([cosine_transform(mf, v) for v in z])))))
    for alpha, t, xv in ((1.0, 2.0, 1.5), (1.5, 5.0, 0.7), (0.75, 3.0, 2.0)):
        cos_err = max(cos_err, abs(dt_riesz_hankel(f, -0.5, alpha, t, xv)
                                   - dt_riesz_cosine(f, alpha, t, xv)))
    xs = np.array([0.7, 2.9, 6.0])
    X = SampledFunction("half_line", xs, np.ones(3), np.ones(3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for alpha in (1.0, 1.5):
            G = g_hankel(f, -0.5, alpha, x=X).values
            ref = np.array([g_cosine_oracle(alpha, v) for v in xs])
            cos_err = max(cos_err, float(np.max(np.abs(G - ref))))
    ok = iso <= 1e-6 and cos_err <= 1e-8
    report(5, "Hankel isometry and cosine reduction", ok,
           f"isometry rel err {iso:.2e}, cosine-path err {cos_err:.2e}")
    assert ok


def _closedform_mpmath(nu, alpha, x, t):
    mp.mp.dps = 30
    a = mp.mpf(7) / 4 + mp.mpf(nu) / 2
    pre = 2 * alpha * mp.beta(alpha, a) / (2 ** (nu + 1) * mp.gamma(nu + 1))
    return float(pre * mp.mpf(t) ** (nu + 1.5) * mp.mpf(x) ** (nu + 0.5)
                 * mp.hyp1f2(a, nu + 1, alpha + a, -(mp.mpf(x) * t) ** 2 / 4))


def test_criterion_06_closed_form(report):
    t0 = time.perf_counter()
    worst, worst_mp = 0.0, 0.0
    for nu in (-0.25, 0.0, 1.0):
        for alpha in (1.0, 1.5):
            for t in (0.3, 0.7):
                for w in (0.25, 1.0, 2.0, 3.5, 5.0):
                    x = w / t
                    c = gtilde_psi_closedform(nu, alpha, x, t)
                    q = dt_riesz_hankel(None, nu, alpha, t, x, spectrum=CutoffPhi())
                    worst = max(worst, abs(c / q - 1))
                    worst_mp = max(worst_mp, abs(c / _closedform_mpmath(nu, alpha, x, t) - 1))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and worst_mp <= 1e-10 and dt < 60
    report(6, "1F2 closed form", ok, f"max rel err vs quadrature {worst:.2e}, "
                                     f"vs mpmath {worst_mp:.2e}, {dt:.2f}s")
    assert ok


def test_criterion_07_domination(report):
    corpus = load_corpus()
    worst, violations, cells, offenders = 0.0, 0, 0, set()
    abel = 0.0
    rng = np.random.default_rng(11)
    for nu in (-0.6, 0.0, 1.0):
        basis = SpectralBasis.build(nu, 64)
        grid = default_time_grid(basis, 1.0)
        x = unit_grid(nu, 64)
        mults = multiplier_family(corpus, basis)
        for fid, c in discrete_family(corpus, basis, 0):
            for mid, m in mults:
                rep = domination_check(c, m, basis, grid, x)
                cells += 1
                violations += rep.violations
                worst = max(worst, rep.max_ratio)
                if not rep.passed:
                    offenders.add(mid)
                t = rng.uniform(basis.zeros[0], basis.zeros[-1])
                lhs, rhs = abel_identity(c, m, t)
                abel = max(abel, float(np.max(np.abs(lhs - rhs))))
        for _ in range(10):
            c = CoefficientVector(basis, rng.standard_normal(64))
            m = MultiplierSeq(rng.uniform(-1, 1, 65))
            lhs, rhs = abel_identity(c, m, rng.uniform(basis.zeros[0], basis.zeros[-1]))
            abel = max(abel, float(np.max(np.abs(lhs - rhs))))
    ok = violations == 0 and abel <= 1e-12
    report(7, "multiplier domination", ok,
           f"{violations} violating points over {cells} cells, max ratio {worst:.3f} "
           f"(multipliers: {', '.join(sorted(offenders)) or 'none'}); Abel err {abel:.1e}")
    assert ok


def test_criterion_08_sharpness(report):
    rows = sharpness_scan(0.0, 1.25, [0.7, 0.9], [25, 50, 100, 200])
    by = {(r["alpha"], r["X"]): r for r in rows}
    expo = by[(0.7, 200.0)]["growth_exponent"]
    T100, T200 = by[(0.9, 100.0)]["T"], by[(0.9, 200.0)]["T"]
    gap = abs(T200 - T100) / T200
    cmin = min(locate_cosine_threshold(0.0, a)[1] for a in (0.7, 0.9))
    ok_expo = abs(expo - (1 - 0.7 * 1.25)) <= 0.05
    ok_gap = gap <= 0.02
    ok_cos = cmin >= 0.125 - 1e-9
    ok = ok_expo and ok_gap and ok_cos
    report(8, "sharpness exponents", ok,
           f"alpha=0.7 exponent {expo:.5f} ({'ok' if ok_expo else 'off'}); "
           f"alpha=0.9 Cauchy gap {100 * gap:.2f}% ({'ok' if ok_gap else 'over 2%'}); "
           f"cosine min {cmin:.6f} ({'ok' if ok_cos else 'below 1/8'})")
    assert ok


def test_criterion_09_transference(report):
    t0 = time.perf_counter()
    orders, monotone = [], True
    for nu in (0.0, 0.5):
        rows = transference_demo(nu, 10, [50, 100, 200, 400])
        errs = [r["h_error"] for r in rows]
        monotone &= all(b < a for a, b in zip(errs, errs[1:]))
        orders.append(rows[0]["fitted_order"])
    dt = time.perf_counter() - t0
    ok = all(abs(o + 1) <= 0.2 for o in orders) and monotone and dt < 120
    report(9, "transference", ok, f"fitted orders {', '.join(f'{o:.4f}' for o in orders)}, "
                                  f"{dt:.1f}s")
    assert ok


def test_criterion_10_heat(report):
    xs, ys = np.meshgrid(np.linspace(0.05, 6, 25), np.linspace(0.05, 6, 25))
    refl = 0.0
    for t in (0.05, 0.4, 2.0):
        ref = (np.exp(-(xs - ys) ** 2 / (4 * t)) + np.exp(-(xs + ys) ** 2 / (4 * t))) \
            / math.sqrt(4 * math.pi * t)
        refl = max(refl, float(np.max(np.abs(heat_kernel_hankel(-0.5, t, xs, ys) - ref))))
    semi = max(_check_heat(nu, 0)[0] for nu in (-0.6, -0.5, 0.0, 0.5, 2.0))
    bounds = {nu: heat_sandwich(nu) for nu in (-0.6, 0.0, 2.0)}
    C = max(max(hi, 1 / lo) if lo > 0 else math.inf for lo, hi in bounds.values())
    ok = refl <= 1e-10 and semi <= 1e-7 and math.isfinite(C)
    report(10, "heat kernels", ok, f"reflection err {refl:.2e}, semigroup err {semi:.2e}, "
                                   f"sandwich C = {C:.3g}")
    assert ok


def test_criterion_11_determinism(report, tmp_path, capsys):
    out = {}
    for workers in (1, 4):
        path = tmp_path / f"suite_{workers}.csv"
        main(["identity-suite", "--workers", str(workers), "--out", str(path)])
        out[workers] = path.read_bytes()
    capsys.readouterr()
    ok = out[1] == out[4] and len(out[1]) > 0
    report(11, "determinism", ok, f"{len(out[1])} bytes, workers 1 vs 4 "
                                  f"{'identical' if ok else 'differ'}")
    assert ok
