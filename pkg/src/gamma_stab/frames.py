"""Hilbert, Bessel and Riesz constants of function families in L^2(R_+).

Two independent routes are provided:

* Gram-matrix truncation: for a finite index set the optimal constants are
  the extreme eigenvalues of the Gram matrix ``G_mn = <f_m, f_n>``.
* The periodization criterion: for a modulated family
  ``f_n(t) = exp(2 pi i n t) f(t)`` the squared constants are the essential
  infimum and supremum over ``[0, 1)`` of ``F(t) = sum_k |f(t + k)|^2``.

For the damped exponentials ``f_n(t) = exp(-a t + 2 pi i (n + rho) t)`` on
``[0, inf)`` both routes, and a closed form, are available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import (
    EmptyIndexSet,
    GridTooCoarse,
    NonPositiveDecay,
    NotHermitian,
    ToleranceNotAchievable,
)

__all__ = [
    "ExponentialFamily",
    "SampledFamily",
    "FrameConstants",
    "gram_matrix",
    "frame_constants_gram",
    "f_function",
    "periodization",
    "truncation_tail_bound",
    "choose_truncation",
    "frame_constants_cck",
    "exponential_family_constants",
    "bessel_sq_candidates",
    "adjudicate_bessel_constant",
    "orthonormal_coordinates",
]

HERMITIAN_TOL = 1e-10
DEFAULT_TAIL_TOL = 1e-10
MAX_TRUNCATION = 10**7


@dataclass(frozen=True)
class ExponentialFamily:
    """``f_n(t) = exp(-a t + 2 pi i (n + rho) t) 1_[0, inf)(t)`` for ``n_min <= n <= n_max``."""

    a: float
    rho: float = 0.0
    n_min: int = 0
    n_max: int = 0

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise NonPositiveDecay(f"decay rate must be positive and finite, got {self.a}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if self.n_min > self.n_max:
            raise ValueError(f"empty index range [{self.n_min}, {self.n_max}]")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def __call__(self, n, t):
        """Evaluate ``f_n(t)``; broadcasts over ``n`` and ``t``."""
        n = np.asarray(n, dtype=float)
        t = np.asarray(t, dtype=float)
        vals = np.exp(-self.a * t + 2j * np.pi * (n + self.rho) * t)
        return np.where(t >= 0, vals, 0.0)

    def abs_sq(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, np.exp(-2.0 * self.a * t), 0.0)

    def sample(self, t_grid, weights, indices=None) -> "SampledFamily":
        idx = self.indices if indices is None else np.asarray(indices)
        _check_indices(idx, self.n_min, self.n_max)
        values = self(idx[None, :], np.asarray(t_grid)[:, None])
        return SampledFamily(np.asarray(t_grid, float), values, np.asarray(weights, float), int(idx[0]))


@dataclass(frozen=True)
class SampledFamily:
    """Quadrature discretisation of a family: ``values[j, k] = f_{n_min + k}(t_grid[j])``."""

    t_grid: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    n_min: int = 0

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        v = np.asarray(self.values)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("t_grid must be a 1-D array with at least two nodes")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must be nonnegative and strictly increasing")
        if w.shape != t.shape or np.any(w <= 0):
            raise ValueError("weights must be positive and match t_grid")
        if v.ndim != 2 or v.shape[0] != t.size or v.shape[1] < 1:
            raise ValueError(f"values must have shape ({t.size}, n_functions), got {v.shape}")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", v)

    @property
    def n_max(self) -> int:
        return self.n_min + self.values.shape[1] - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)


@dataclass(frozen=True)
class FrameConstants:
    c_hilbert: float
    c_bessel: float
    method: Literal["gram", "cck", "closed_form"]
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.c_hilbert < 0 or self.c_bessel < 0:
            raise ValueError("frame constants are nonnegative")
        if self.c_bessel > self.c_hilbert * (1 + 1e-12) + 1e-300:
            raise ValueError(f"Bessel constant {self.c_bessel} exceeds Hilbert constant {self.c_hilbert}")

    @property
    def hilbert_sq(self) -> float:
        return self.c_hilbert**2

    @property
    def bessel_sq(self) -> float:
        return self.c_bessel**2

    def scaled(self, c: float) -> "FrameConstants":
        """Constants of the family ``c * f_n``."""
        c = abs(c)
        return FrameConstants(c * self.c_hilbert, c * self.c_bessel, self.method, dict(self.details))


def _check_indices(idx: np.ndarray, lo: int, hi: int) -> None:
    if idx.size == 0:
        raise EmptyIndexSet("index set is empty")
    if idx.min() < lo or idx.max() > hi:
        raise ValueError(f"indices must lie in [{lo}, {hi}]")


def _check_resolution(values: np.ndarray) -> None:
    # Consecutive samples of a column must not rotate by more than a quarter turn.
    prod = values[1:] * np.conj(values[:-1])
    mask = np.abs(prod) > 0
    if np.any(np.abs(np.angle(prod[mask])) > np.pi / 2):
        raise GridTooCoarse("sampling grid does not resolve the oscillation of the family")


def gram_matrix(family: ExponentialFamily | SampledFamily, indices: Sequence[int] | None = None) -> np.ndarray:
    """Gram matrix ``G[m, n] = <f_m, f_n> = int conj(f_m) f_n dt`` over ``indices``.

    The exponential family uses the exact entries ``1 / (2a - 2 pi i (n - m))``;
    a sampled family uses its quadrature rule.
    """
    idx = family.indices if indices is None else np.asarray(list(indices), dtype=int)
    _check_indices(idx, family.n_min, family.n_max)
    if isinstance(family, ExponentialFamily):
        diff = idx[None, :] - idx[:, None]
        return 1.0 / (2.0 * family.a - 2j * np.pi * diff)
    cols = family.values[:, idx - family.n_min]
    _check_resolution(cols)
    g = (np.conj(cols).T * family.weights) @ cols
    return 0.5 * (g + np.conj(g).T)


def frame_constants_gram(G: np.ndarray) -> FrameConstants:
    """Optimal constants of a finite family from its Gram matrix.

    ``C_H^2`` and ``C_B^2`` are the largest and smallest Rayleigh quotients
    ``alpha^* G alpha / |alpha|^2``, i.e. the extreme eigenvalues.
    """
    G = np.atleast_2d(np.asarray(G))
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"Gram matrix must be square, got shape {G.shape}")
    scale = max(1.0, float(np.max(np.abs(G)))) if G.size else 1.0
    asym = float(np.max(np.abs(G - np.conj(G).T)))
    if asym > HERMITIAN_TOL * scale:
        raise NotHermitian(f"Gram matrix is not Hermitian (deviation {asym:.3e})")
    w = np.linalg.eigvalsh(G)
    lo, hi = max(float(w[0]), 0.0), max(float(w[-1]), 0.0)
    return FrameConstants(math.sqrt(hi), math.sqrt(lo), "gram", {"lambda_min": float(w[0]), "lambda_max": float(w[-1]), "n": G.shape[0]})


def truncation_tail_bound(a: float, t: float, K: int) -> float:
    """Upper bound for ``sum_{k > K} exp(-2a (t + k))``."""
    return math.exp(-2.0 * a * (t + K)) / -math.expm1(-2.0 * a)


def choose_truncation(a: float, tol: float = DEFAULT_TAIL_TOL, max_terms: int = MAX_TRUNCATION) -> int:
    """Smallest ``K`` whose tail bound at ``t = 0`` is below ``tol``."""
    if a <= 0:
        raise NonPositiveDecay(f"decay rate must be positive, got {a}")
    K = max(1, math.ceil(-math.log(tol * -math.expm1(-2.0 * a)) / (2.0 * a)))
    while truncation_tail_bound(a, 0.0, K) > tol:
        K += 1
    if K > max_terms:
        raise ToleranceNotAchievable(f"tail tolerance {tol:g} needs K={K} > {max_terms} terms at a={a}")
    return K


def periodization(abs_sq: Callable[[np.ndarray], np.ndarray], t, K: int, chunk: int = 4096) -> np.ndarray:
    """``sum_{k=0}^{K} abs_sq(t + k)`` for each ``t`` (terms with ``k < 0`` vanish for causal ``f``)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    for start in range(0, K + 1, chunk):
        k = np.arange(start, min(K + 1, start + chunk), dtype=float)
        out += abs_sq(t[:, None] + k[None, :]).sum(axis=1)
    return out


def f_function(family: ExponentialFamily, t: float, K: int) -> float:
    """Truncated periodization ``F(t) = sum_{k=0}^{K} |f(t + k)|^2`` for ``t`` in ``[0, 1)``."""
    if not 0.0 <= t < 1.0:
        raise ValueError(f"t must lie in [0, 1), got {t}")
    if K < 0:
        raise ValueError(f"K must be nonnegative, got {K}")
    return float(periodization(family.abs_sq, t, K)[0])


def frame_constants_cck(
    family: ExponentialFamily,
    grid_size: int = 2048,
    K: int | None = None,
    tol: float = DEFAULT_TAIL_TOL,
) -> FrameConstants:
    """Constants from the essential extrema of the periodization ``F``.

    ``F`` is continuous and decreasing on ``[0, 1)`` for the exponential
    family, so next to the uniform grid the left limit at ``t = 1`` (the
    ``k >= 0`` sum evaluated at 1) is included; it is the essential infimum.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    if K is None:
        K = choose_truncation(family.a, tol)
    elif truncation_tail_bound(family.a, 0.0, K) > tol:
        raise ToleranceNotAchievable(f"K={K} leaves a tail above {tol:g}; increase K or pass K=None")
    t = np.append(np.arange(grid_size) / grid_size, 1.0)
    F = periodization(family.abs_sq, t, K)
    return FrameConstants(
        math.sqrt(F.max()),
        math.sqrt(F.min()),
        "cck",
        {"grid_size": grid_size, "K": K, "tail_bound": truncation_tail_bound(family.a, 0.0, K)},
    )


def bessel_sq_candidates(a: float) -> dict[str, float]:
    """Both candidate values of ``C_B^2`` for the exponential family.

    ``f_function_infimum`` is the limit of ``e^{2a(1-t)} / (e^{2a} - 1)`` as
    ``t -> 1``; ``stated_example`` is ``e^{-2a} / (e^{2a} - 1)``.
    """
    denom = math.expm1(2.0 * a)
    return {"f_function_infimum": 1.0 / denom, "stated_example": math.exp(-2.0 * a) / denom}


def exponential_family_constants(a: float) -> FrameConstants:
    """Closed-form constants of the damped exponential family.

    ``C_H^2 = e^{2a} / (e^{2a} - 1)`` and ``C_B^2 = 1 / (e^{2a} - 1)``; the
    latter is the value the Gram oracle converges to (see
    :func:`adjudicate_bessel_constant`).
    """
    if not a > 0:
        raise NonPositiveDecay(f"decay rate must be positive, got {a}")
    denom = math.expm1(2.0 * a)
    h2 = 1.0 / -math.expm1(-2.0 * a)
    cand = bessel_sq_candidates(a)
    return FrameConstants(math.sqrt(h2), math.sqrt(1.0 / denom), "closed_form", {"bessel_sq_candidates": cand})


def adjudicate_bessel_constant(a: float, sizes: Sequence[int] = (50, 100, 200, 400), rtol: float = 0.02) -> dict:
    """Decide between the two ``C_B^2`` candidates with the Gram oracle.

    The smallest Gram eigenvalue decreases with the number of indices and
    converges to ``ess inf F``; the candidate it approaches within ``rtol``
    at the largest size is selected.
    """
    cand = bessel_sq_candidates(a)
    fam = ExponentialFamily(a, 0.0, 0, max(sizes) - 1)
    lam = []
    for n in sizes:
        lam.append(frame_constants_gram(gram_matrix(fam, range(n))).details["lambda_min"])
    final = lam[-1]
    rel = {k: abs(final - v) / v for k, v in cand.items()}
    selected = min(rel, key=rel.get)
    return {
        "a": a,
        "sizes": list(sizes),
        "gram_lambda_min": lam,
        "monotone_from_above": bool(all(x >= y for x, y in zip(lam, lam[1:])) and final >= cand["f_function_infimum"]),
        "candidates": cand,
        "relative_error": rel,
        "selected": selected,
        "selected_value": cand[selected],
        "within_rtol": rel[selected] <= rtol,
        "discrepancy_flag": selected != "stated_example",
        "discrepancy_factor": cand["stated_example"] / cand["f_function_infimum"],
    }


def orthonormal_coordinates(G: np.ndarray) -> np.ndarray:
    """Columns representing the family in an orthonormal basis of its span.

    Returns the Hermitian square root ``S`` of ``G`` so that ``S^* S = G``.
    """
    w, V = np.linalg.eigh(np.asarray(G))
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ np.conj(V).T
