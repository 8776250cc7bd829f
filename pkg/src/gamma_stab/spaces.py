"""Finite-dimensional Banach spaces ``l^p_m`` and operator norms on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = ["SpaceSpec", "operator_norm", "operator_norm_upper"]


@dataclass(frozen=True)
class SpaceSpec:
    """The space ``K^dim`` with the Euclidean norm or an ``l^p`` norm, ``p != 2``."""

    dim: int
    norm: Literal["l2", "lp"] = "l2"
    p: float = 2.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dim}")
        if self.norm == "l2":
            object.__setattr__(self, "p", 2.0)
        elif self.norm == "lp":
            if not (1.0 <= self.p < math.inf):
                raise ValueError(f"p must lie in [1, inf), got {self.p}")
            if self.p == 2.0:
                raise ValueError("lp with p = 2 is the l2 space; use norm='l2'")
        else:
            raise ValueError(f"unknown norm {self.norm!r}")

    @classmethod
    def l2(cls, dim: int) -> "SpaceSpec":
        return cls(dim, "l2")

    @classmethod
    def lp(cls, dim: int, p: float) -> "SpaceSpec":
        return cls(dim, "lp", float(p))

    @property
    def is_hilbert(self) -> bool:
        return self.norm == "l2"

    def vector_norm(self, v, axis: int = -1):
        a = np.abs(np.asarray(v))
        if self.norm == "l2":
            return np.sqrt(np.sum(a * a, axis=axis))
        if self.p == 1.0:
            return np.sum(a, axis=axis)
        return np.sum(a**self.p, axis=axis) ** (1.0 / self.p)

    @property
    def l2_equivalence(self) -> float:
        """``m^{|1/2 - 1/p|}``: the product of the two constants comparing this norm with l2."""
        return float(self.dim) ** abs(0.5 - 1.0 / self.p)

    def to_dict(self) -> dict:
        return {"norm": self.norm} if self.norm == "l2" else {"norm": "lp", "p": self.p}


def _dual_direction(v: np.ndarray, q: float) -> np.ndarray:
    """Norming functional of ``v`` in ``l^q`` (unit norm in the dual exponent)."""
    a = np.abs(v)
    top = a.max()
    if top == 0:
        return np.zeros_like(v)
    a = a / top
    phase = np.conj(np.where(a > 0, v / np.where(a > 0, np.abs(v), 1.0), 0.0))
    w = phase * a ** (q - 1.0)
    qd = q / (q - 1.0)
    return w / np.sum(np.abs(w) ** qd) ** (1.0 / qd)


def operator_norm(T, space: SpaceSpec, restarts: int = 50, iters: int = 200, seed: int = 0) -> float:
    """``sup |T x| / |x|`` in ``space``.

    Exact for l2 (largest singular value) and for ``p = 1`` (largest column
    sum). For other ``p`` a power iteration with ``restarts`` random starts
    gives a lower estimate.
    """
    T = np.atleast_2d(np.asarray(T))
    if T.size == 0:
        return 0.0
    if space.norm == "l2":
        return float(np.linalg.norm(T, 2))
    p = space.p
    if p == 1.0:
        return float(np.abs(T).sum(axis=0).max())
    q = p / (p - 1.0)
    rng = np.random.default_rng(seed)
    n = T.shape[1]
    cplx = np.iscomplexobj(T)
    starts = list(np.eye(n))
    for _ in range(restarts):
        x = rng.standard_normal(n)
        if cplx:
            x = x + 1j * rng.standard_normal(n)
        starts.append(x)
    best = 0.0
    for x in starts:
        x = x / space.vector_norm(x)
        val = 0.0
        for _ in range(iters):
            y = T @ x
            new = float(space.vector_norm(y))
            z = T.T @ _dual_direction(y, p)
            x = _dual_direction(z, q)
            nx = space.vector_norm(x)
            if nx == 0:
                break
            x = x / nx
            if new <= val * (1 + 1e-13):
                val = max(val, new)
                break
            val = new
        best = max(best, val)
    return best


def operator_norm_upper(T, space: SpaceSpec) -> float:
    """Certified upper bound of the operator norm.

    Exact on l2 and for ``p = 1``; otherwise the Riesz-Thorin interpolation
    ``|T|_1^{1/p} |T|_inf^{1 - 1/p}``.
    """
    T = np.atleast_2d(np.asarray(T))
    if space.norm == "l2":
        return float(np.linalg.norm(T, 2))
    n1 = float(np.abs(T).sum(axis=0).max())
    ninf = float(np.abs(T).sum(axis=1).max())
    if space.p == 1.0:
        return n1
    return n1 ** (1.0 / space.p) * ninf ** (1.0 - 1.0 / space.p)
