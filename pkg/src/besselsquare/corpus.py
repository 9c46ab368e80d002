"""Versioned test corpora shared by the experiment drivers.

The member definitions live in ``data/corpus.json``; its SHA-256 is the
corpus content hash written into every CSV header. Randomised members are
fixed by an explicit seed.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .fourier_bessel import CoefficientVector, SpectralBasis, analyze, unit_grid
from .hankel import CompactProfile, CutoffPhi, gaussian_profile, moment_free_profile
from .multipliers import MultiplierSeq

CORPUS_FILE = "corpus.json"


@dataclass(frozen=True)
class Corpus:
    id: str
    version: int
    content_hash: str
    spec: dict

    @property
    def discrete_ids(self):
        return [m["id"] for m in self.spec["discrete"]]

    @property
    def hankel_ids(self):
        return [m["id"] for m in self.spec["hankel"]]

    @property
    def multiplier_ids(self):
        return [m["id"] for m in self.spec["multipliers"]]


def load_corpus(path=None) -> Corpus:
    """Read the corpus definition (default: the packaged file)."""
    if path is None:
        raw = resources.files(__package__).joinpath("data").joinpath(CORPUS_FILE).read_bytes()
    else:
        with open(path, "rb") as fh:
            raw = fh.read()
    spec = json.loads(raw)
    return Corpus(spec["id"], int(spec["version"]), hashlib.sha256(raw).hexdigest()[:16], spec)


def smooth_bump(lo, hi):
    """exp(4 - 1/(u(1-u))) with u the position inside (lo, hi); peak value 1."""

    def f(x):
        u = (np.asarray(x, dtype=float) - lo) / (hi - lo)
        out = np.zeros_like(u)
        inside = (u > 0) & (u < 1)
        ui = u[inside]
        out[inside] = np.exp(4.0 - 1.0 / (ui * (1.0 - ui)))
        return out

    return f


def discrete_member(entry: dict, basis: SpectralBasis, seed: int, index: int) -> CoefficientVector:
    """Coefficient vector of one discrete corpus member at the basis truncation."""
    J, nu = basis.J, basis.nu
    kind = entry["kind"]
    if kind == "random_coeffs":
        rng = np.random.default_rng([seed, index])
        m = min(int(entry["modes"]), J)
        vals = np.zeros(J)
        vals[:m] = rng.standard_normal(m) * np.arange(1, m + 1) ** -float(entry["decay"])
        return CoefficientVector(basis, vals)
    if kind == "psi_transfer":
        # coefficients of psi(r x) read through the transference identity
        r = 0.5 * basis.zeros[-1]
        vals = CutoffPhi()(basis.zeros / r) * basis.table.norms / r
        return CoefficientVector(basis, vals)
    if kind == "bump":
        func = smooth_bump(float(entry["lo"]), float(entry["hi"]))
    elif kind == "edge_bump":
        w = float(entry["scale"]) / J
        func = smooth_bump(w, 3 * w) if int(entry["side"]) == 0 else smooth_bump(1 - 3 * w, 1 - w)
    elif kind == "power":
        def func(x):
            return x ** (nu + 0.5) * (1.0 - x)
    else:
        raise ValueError(f"unknown discrete corpus kind {kind!r}")
    grid = unit_grid(nu, J)
    return analyze(grid.with_values(func(grid.nodes)), basis)


def discrete_family(corpus: Corpus, basis: SpectralBasis, seed: int, ids=None):
    """``[(id, CoefficientVector), ...]`` in corpus order."""
    out = []
    for k, entry in enumerate(corpus.spec["discrete"]):
        if ids is None or entry["id"] in ids:
            out.append((entry["id"], discrete_member(entry, basis, seed, k)))
    return out


def hankel_member(entry: dict) -> CompactProfile:
    kind = entry["kind"]
    if kind == "gaussian":
        return gaussian_profile(float(entry["center"]), float(entry["width"]), name=entry["id"])
    if kind == "moment_free":
        return moment_free_profile(float(entry["center"]), float(entry["width"]),
                                   int(entry["order"]), name=entry["id"])
    raise ValueError(f"unknown Hankel corpus kind {kind!r}")


def hankel_family(corpus: Corpus):
    return [(e["id"], hankel_member(e)) for e in corpus.spec["hankel"]]


def multiplier_member(entry: dict, basis: SpectralBasis) -> MultiplierSeq:
    """Multiplier sequence over s_1..s_{J+1} (one entry beyond the truncation,
    as the variation norm needs m_{J+1})."""
    s = basis.table.zeros
    kind = entry["kind"]
    if kind == "constant":
        return MultiplierSeq(np.full(s.size, float(entry["value"])))
    if kind == "riesz":
        t0 = s[min(int(entry["t0_index"]), s.size) - 1] + 0.5
        return MultiplierSeq(np.clip(1.0 - (s / t0) ** 2, 0.0, None))
    if kind == "alternating":
        return MultiplierSeq((-1.0) ** np.arange(s.size))
    if kind == "imaginary_power":
        return MultiplierSeq(np.exp(1j * float(entry["gamma"]) * np.log(s)))
    if kind == "smooth_cutoff":
        T = s[min(int(entry["scale_index"]), s.size) - 1]
        return MultiplierSeq(CutoffPhi()(s / T))
    raise ValueError(f"unknown multiplier kind {kind!r}")


def multiplier_family(corpus: Corpus, basis: SpectralBasis):
    return [(e["id"], multiplier_member(e, basis)) for e in corpus.spec["multipliers"]]

