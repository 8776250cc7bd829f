"""Gaussian sums, gamma-radonifying and almost summing norms in ``l^2_m`` / ``l^p_m``.

For a finite family ``x_1, ..., x_N`` in ``E`` the basic quantity is

    |sum_n gamma_n x_n|_{L^2(Omega; E)} = (E |sum_n gamma_n x_n|^2)^{1/2}

with independent standard Gaussians ``gamma_n``.  In ``l^2`` it equals
``(sum_n |x_n|^2)^{1/2}``; for ``l^p`` it is estimated by Monte Carlo.

Monte Carlo draws are organised in fixed-size blocks, block ``b`` using the
stream ``SeedSequence(seed, spawn_key=(b,))``.  Blocks can therefore be
evaluated on any number of threads (``GAMMA_STAB_THREADS``) and the reduction,
performed in block order, is bit-identical to a serial run.

When the data are complex the Gaussians are circular complex,
``(g + i g') / sqrt(2)``, which keeps the norm invariant under unitary changes
of basis of the domain.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
import scipy.linalg

from .errors import DegenerateFamily, DimensionMismatch, ExactPathUnavailable
from .spaces import SpaceSpec

__all__ = [
    "MonteCarlo",
    "GaussianSumEstimate",
    "BoundReport",
    "SupremumSearch",
    "infer_field",
    "gaussian_sum_norm",
    "gamma_norm",
    "covariance_gamma_norm",
    "almost_summing_norm",
    "almost_summing_search",
    "check_hilbert_sequence_bound",
    "check_bessel_sequence_bound",
    "span_basis",
    "STAT_SIGMAS",
]

Field = Literal["real", "complex"]

#: Violation threshold, in combined standard errors.
STAT_SIGMAS = 3.0
RANK_TOL = 1e-10
EXACT_RTOL = 1e-12


@dataclass(frozen=True)
class MonteCarlo:
    samples: int = 100_000
    seed: int = 0
    block: int = 8192

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("Monte Carlo needs at least two samples")
        if self.block < 1:
            raise ValueError("block size must be positive")

    def with_seed(self, seed: int) -> "MonteCarlo":
        return MonteCarlo(self.samples, seed, self.block)


@dataclass(frozen=True)
class GaussianSumEstimate:
    value: float
    stderr: float = 0.0
    samples: int = 0
    seed: int | None = None

    @property
    def exact(self) -> bool:
        return self.samples == 0

    @property
    def method(self) -> str:
        return "exact" if self.exact else "monte-carlo"

    def scaled(self, c: float) -> "GaussianSumEstimate":
        c = abs(c)
        return GaussianSumEstimate(c * self.value, c * self.stderr, self.samples, self.seed)

    def to_dict(self) -> dict:
        d = {"value": self.value, "method": self.method}
        if not self.exact:
            d.update(stderr=self.stderr, samples=self.samples, seed=self.seed)
        return d


@dataclass(frozen=True)
class BoundReport:
    """Outcome of checking ``lhs <= rhs``; ``margin = rhs - lhs``."""

    lhs: GaussianSumEstimate
    rhs: GaussianSumEstimate
    constant: float
    tolerance: float
    details: dict = field(default_factory=dict, compare=False)

    @property
    def margin(self) -> float:
        return self.rhs.value - self.lhs.value

    @property
    def violated(self) -> bool:
        return self.margin < -self.tolerance

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "constant": self.constant,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "violated": self.violated,
        }


@dataclass(frozen=True)
class SupremumSearch:
    full: GaussianSumEstimate
    sampled: list
    excess: float

    @property
    def consistent(self) -> bool:
        return self.excess <= 0.0


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GAMMA_STAB_THREADS", "1")))
    except ValueError:
        return 1


def _block_stream(seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))


def infer_field(*arrays) -> Field:
    for a in arrays:
        a = np.asarray(a)
        if np.iscomplexobj(a) and np.any(a.imag != 0):
            return "complex"
    return "real"


def _gaussians(rng: np.random.Generator, shape, fld: Field) -> np.ndarray:
    if fld == "real":
        return rng.standard_normal(shape)
    g = rng.standard_normal((2,) + tuple(shape))
    return (g[0] + 1j * g[1]) * (1.0 / math.sqrt(2.0))


def _mc_moments(draw: Callable[[np.random.Generator, int], np.ndarray], mc: MonteCarlo) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean vector and covariance of ``draw`` over ``mc.samples`` samples.

    ``draw(rng, size)`` returns an array of shape ``(size,)`` or ``(size, k)``.
    """
    sizes = [mc.block] * (mc.samples // mc.block)
    if mc.samples % mc.block:
        sizes.append(mc.samples % mc.block)

    def one(b: int):
        y = np.asarray(draw(_block_stream(mc.seed, b), sizes[b]), dtype=float)
        y = y.reshape(sizes[b], -1)
        mu = y.mean(axis=0)
        d = y - mu
        return y.shape[0], mu, d.T @ d

    nthreads = _threads()
    if nthreads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            parts = list(ex.map(one, range(len(sizes))))
    else:
        parts = [one(b) for b in range(len(sizes))]
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * (nb / tot)
        m2 = m2 + m2b + np.outer(delta, delta) * (n * nb / tot)
        n = tot
    return np.atleast_1d(mean), np.atleast_2d(m2 / (n - 1))


def _as_vectors(vectors, space: SpaceSpec) -> np.ndarray:
    X = np.asarray(vectors)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != space.dim:
        raise DimensionMismatch(f"expected vectors of dimension {space.dim}, got array of shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("vectors must be finite")
    return X


def gaussian_sum_norm(vectors, space: SpaceSpec, mc: MonteCarlo | None = None, field: Field | None = None) -> GaussianSumEstimate:
    """``(E |sum_n gamma_n x_n|^2)^{1/2}`` for the rows ``x_n`` of ``vectors``.

    ``mc=None`` selects the exact formula, which exists only in l2.  With a
    :class:`MonteCarlo` config the expectation is estimated (in any space);
    the standard error of the square root comes from the delta method.
    """
    X = _as_vectors(vectors, space)
    if mc is None:
        if not space.is_hilbert:
            raise ExactPathUnavailable("no closed form for Gaussian sums in l^p, p != 2; pass a MonteCarlo config")
        return GaussianSumEstimate(float(math.sqrt(np.sum(np.abs(X) ** 2))))
    fld = field or infer_field(X)
    if X.shape[0] == 0 or not np.any(X):
        return GaussianSumEstimate(0.0, 0.0, mc.samples, mc.seed)

    def draw(rng, size):
        S = _gaussians(rng, (size, X.shape[0]), fld) @ X
        return space.vector_norm(S, axis=1) ** 2

    mean, cov = _mc_moments(draw, mc)
    value = math.sqrt(float(mean[0]))
    se_mean = math.sqrt(float(cov[0, 0]) / mc.samples)
    stderr = se_mean / (2.0 * value) if value > 0 else 0.0
    return GaussianSumEstimate(value, stderr, mc.samples, mc.seed)


def _as_operator(R) -> np.ndarray:
    R = np.asarray(R)
    if R.ndim == 1:
        R = R[:, None]
    if R.ndim != 2 or 0 in R.shape:
        raise DimensionMismatch(f"operator must be a nonempty matrix, got shape {R.shape}")
    return R


def gamma_norm(R, space: SpaceSpec, mc: MonteCarlo | None = None, field: Field | None = None) -> GaussianSumEstimate:
    """gamma-radonifying norm of ``R: K^n -> E``: Gaussian sum over its columns.

    In l2 this is the Frobenius (Hilbert-Schmidt) norm.
    """
    R = _as_operator(R)
    if R.shape[0] != space.dim:
        raise DimensionMismatch(f"operator has {R.shape[0]} rows, space has dimension {space.dim}")
    return gaussian_sum_norm(R.T, space, mc, field)


def covariance_gamma_norm(Q, space: SpaceSpec, mc: MonteCarlo | None = None) -> GaussianSumEstimate:
    """``(E |X|^2)^{1/2}`` for a centred Gaussian ``X`` with covariance ``Q``.

    Any factor ``L L^* = Q`` gives the same law; the eigen-factor is used.
    """
    Q = np.asarray(Q)
    Q = 0.5 * (Q + np.conj(Q).T)
    if Q.shape != (space.dim, space.dim):
        raise DimensionMismatch(f"covariance must be {space.dim}x{space.dim}, got {Q.shape}")
    if mc is None and space.is_hilbert:
        return GaussianSumEstimate(float(math.sqrt(max(np.trace(Q).real, 0.0))))
    w, V = np.linalg.eigh(Q)
    L = V * np.sqrt(np.clip(w, 0.0, None))
    return gamma_norm(L, space, mc, infer_field(Q))


def almost_summing_norm(R, space: SpaceSpec, mc: MonteCarlo | None = None, field: Field | None = None) -> GaussianSumEstimate:
    """Supremum of Gaussian sums over finite orthonormal systems.

    On a finite-dimensional domain the supremum is attained at a full
    orthonormal basis (``|R P|_gamma <= |R|_gamma`` for projections ``P``), so
    this coincides with :func:`gamma_norm`; :func:`almost_summing_search`
    probes the claim.
    """
    return gamma_norm(R, space, mc, field)


def _haar_isometry(rng: np.random.Generator, n: int, k: int, fld: Field) -> np.ndarray:
    Z = _gaussians(rng, (n, k), fld)
    Q, Rr = np.linalg.qr(Z)
    d = np.diagonal(Rr)
    return Q * (d / np.abs(d))


def almost_summing_search(
    R,
    space: SpaceSpec,
    mc: MonteCarlo | None = None,
    n_systems: int = 100,
    seed: int = 0,
    field: Field | None = None,
) -> SupremumSearch:
    """Randomised search over Haar-distributed partial orthonormal systems.

    ``excess`` is the largest amount by which a sampled system exceeds the
    full-basis value beyond the statistical tolerance (nonpositive if none).
    """
    R = _as_operator(R)
    fld = field or infer_field(R)
    full = gamma_norm(R, space, mc, fld)
    rng = np.random.default_rng(seed)
    n = R.shape[1]
    sampled, excess = [], -math.inf
    for _ in range(n_systems):
        k = int(rng.integers(1, n + 1))
        H = _haar_isometry(rng, n, k, fld)
        est = gamma_norm(R @ H, space, mc, fld)
        sampled.append(est)
        tol = _tolerance(est, full)
        excess = max(excess, est.value - full.value - tol)
    return SupremumSearch(full, sampled, excess)


def _tolerance(a: GaussianSumEstimate, b: GaussianSumEstimate) -> float:
    if a.exact and b.exact:
        return EXACT_RTOL * max(1.0, a.value, b.value)
    return STAT_SIGMAS * math.hypot(a.stderr, b.stderr)


def span_basis(F_cols, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column span (pivoted QR, relative rank tolerance)."""
    F = np.atleast_2d(np.asarray(F_cols))
    Q, Rr, _ = scipy.linalg.qr(F, mode="economic", pivoting=True)
    d = np.abs(np.diagonal(Rr))
    if d.size == 0 or d[0] == 0:
        return Q[:, :0]
    rank = int(np.sum(d > rank_tol * d[0]))
    return Q[:, :rank]


def _gram_extremes(F: np.ndarray) -> tuple[float, float]:
    w = np.linalg.eigvalsh(np.conj(F).T @ F)
    return math.sqrt(max(w[-1], 0.0)), math.sqrt(max(w[0], 0.0))


def _check_family(R: np.ndarray, F: np.ndarray) -> np.ndarray:
    F = np.asarray(F)
    if F.ndim == 1:
        F = F[:, None]
    if F.shape[0] != R.shape[1]:
        raise DimensionMismatch(f"family vectors have length {F.shape[0]}, operator domain has dimension {R.shape[1]}")
    return F


def check_hilbert_sequence_bound(
    R,
    F_cols,
    space: SpaceSpec,
    mc: MonteCarlo | None = None,
    c_hilbert: float | None = None,
) -> BoundReport:
    """Check ``|sum_n gamma_n R f_n| <= C_H |R|_gamma``.

    ``F_cols[:, n]`` holds the coordinates of ``f_n`` in the orthonormal basis
    in which ``R`` is written.  ``C_H`` defaults to the optimal constant of the
    finite family.
    """
    R = _as_operator(R)
    F = _check_family(R, F_cols)
    if c_hilbert is None:
        c_hilbert = _gram_extremes(F)[0]
    fld = infer_field(R, F)
    lhs = gaussian_sum_norm((R @ F).T, space, mc, fld)
    rhs = gamma_norm(R, space, mc, fld).scaled(c_hilbert)
    return BoundReport(lhs, rhs, c_hilbert, _tolerance(lhs, rhs))


def check_bessel_sequence_bound(
    R,
    F_cols,
    space: SpaceSpec,
    mc: MonteCarlo | None = None,
    c_bessel: float | None = None,
) -> BoundReport:
    """Check ``|R|_{gamma(H_f, E)} <= C_B^{-1} |sum_n gamma_n R f_n|``.

    ``H_f`` is the span of the family; ``R`` is restricted to it through an
    orthonormal basis of the span.
    """
    R = _as_operator(R)
    F = _check_family(R, F_cols)
    if c_bessel is None:
        c_bessel = _gram_extremes(F)[1]
    if c_bessel <= RANK_TOL:
        raise DegenerateFamily(f"Bessel constant {c_bessel:.3e} is zero within tolerance")
    fld = infer_field(R, F)
    Qf = span_basis(F)
    lhs = gamma_norm(R @ Qf, space, mc, fld)
    rhs = gaussian_sum_norm((R @ F).T, space, mc, fld).scaled(1.0 / c_bessel)
    return BoundReport(lhs, rhs, c_bessel, _tolerance(lhs, rhs))
