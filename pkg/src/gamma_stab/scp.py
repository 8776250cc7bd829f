"""The stochastic Cauchy problem ``dU = A U dt + B dW_H``, ``U(0) = 0``.

A solution on ``[0, T]`` exists iff ``T(.)B`` is gamma-radonifying on
``[0, T]``; an invariant measure exists iff ``T(.)B`` is gamma-radonifying on
``R_+``, and it is then the centred Gaussian with covariance
``Q = int_0^inf T(t) B B^* T(t)^* dt``.  Everything here is finite
dimensional, so these reduce to matrix equations; the module also checks the
two bounded-perturbation results and runs the stochastic Datko-Pazy
certification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.linalg

from .errors import MarginExceeded, NotStable, ShiftSearchFailed
from .gaussian import STAT_SIGMAS, GaussianSumEstimate, MonteCarlo, covariance_gamma_norm
from .semigroup import (
    HURWITZ_MARGIN,
    Generator,
    RBoundEstimate,
    StabilityCertificate,
    _default_mc,
    _eigvals,
    orbit_gamma_norm,
    require_hurwitz,
    resolvent_line_sup,
    resolvent_rbound_datko,
    solve_lyapunov,
    spectral_abscissa,
)
from .spaces import operator_norm, operator_norm_upper

__all__ = [
    "ScpProblem",
    "SolutionReport",
    "InvariantMeasureReport",
    "TransformNormReport",
    "PerturbationReport",
    "SolutionPerturbationReport",
    "DatkoPazyReport",
    "finite_horizon_covariance",
    "controllable_basis",
    "solution_exists",
    "invariant_covariance",
    "invariant_measure_exists",
    "resolvent_transform_norm",
    "imaginary_axis_rbound",
    "perturbation_margin",
    "perturbed_invariant_measure_check",
    "bounded_perturbation_solution",
    "datko_pazy_certify",
    "rank_one_witness",
]

RANK_TOL = 1e-10


@dataclass(frozen=True)
class ScpProblem:
    gen: Generator
    b_matrix: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.b_matrix)
        if B.ndim == 0:
            B = B.reshape(1, 1)
        if B.ndim == 1:
            B = B.reshape(self.gen.dim, -1) if B.size % self.gen.dim == 0 else B[:, None]
        if B.ndim != 2 or B.shape[0] != self.gen.dim or B.shape[1] < 1:
            raise ValueError(f"B must be {self.gen.dim} x d with d >= 1, got shape {np.shape(self.b_matrix)}")
        if not np.all(np.isfinite(B)):
            raise ValueError("B entries must be finite")
        if not np.iscomplexobj(B):
            B = B.astype(float)
        object.__setattr__(self, "b_matrix", B)

    @property
    def m(self) -> int:
        return self.gen.dim

    @property
    def d(self) -> int:
        return self.b_matrix.shape[1]

    @property
    def space(self):
        return self.gen.space

    def with_generator(self, gen: Generator) -> "ScpProblem":
        return ScpProblem(gen, self.b_matrix)


# ---------------------------------------------------------------------------
# solutions and invariant measures
# ---------------------------------------------------------------------------


def finite_horizon_covariance(A: np.ndarray, B: np.ndarray, T: float) -> np.ndarray:
    """``int_0^T exp(tA) B B^* exp(tA^*) dt`` by Van Loan's block exponential."""
    m = A.shape[0]
    C = B @ np.conj(B).T
    blk = np.zeros((2 * m, 2 * m), dtype=np.result_type(A, C, float))
    blk[:m, :m] = -A
    blk[:m, m:] = C
    blk[m:, m:] = np.conj(A).T
    E = scipy.linalg.expm(T * blk)
    Q = np.conj(E[m:, m:]).T @ E[:m, m:]
    Q = 0.5 * (Q + np.conj(Q).T)
    return Q.real if np.isrealobj(A) and np.isrealobj(B) else Q


@dataclass(frozen=True)
class SolutionReport:
    exists: bool
    horizon: float
    norm: GaussianSumEstimate
    covariance: np.ndarray = field(compare=False)

    def to_dict(self) -> dict:
        return {"exists": self.exists, "horizon": self.horizon, "gamma_norm": self.norm.to_dict()}


def solution_exists(prob: ScpProblem, T_horizon: float, mc: MonteCarlo | None = None) -> SolutionReport:
    """Finite-horizon gamma-norm ``|T(.)B|_{gamma([0, T], H, E)}``.

    In finite dimensions a solution always exists; the norm is the second
    moment of a Gaussian with covariance ``int_0^T T(t)BB^*T(t)^* dt``.
    """
    if not T_horizon > 0:
        raise ValueError("time horizon must be positive")
    Q = finite_horizon_covariance(prob.gen.a_matrix, prob.b_matrix, T_horizon)
    norm = covariance_gamma_norm(Q, prob.space, _default_mc(prob.space, mc))
    return SolutionReport(bool(np.isfinite(norm.value)), T_horizon, norm, Q)


def invariant_covariance(prob: ScpProblem) -> np.ndarray:
    """``Q`` with ``A Q + Q A^* = -B B^*`` for Hurwitz ``A``."""
    require_hurwitz(prob.gen)
    B = prob.b_matrix
    return solve_lyapunov(prob.gen.a_matrix, B @ np.conj(B).T)


def controllable_basis(A: np.ndarray, B: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the smallest ``A``-invariant subspace containing ``ran B``."""
    scale = max(float(np.linalg.norm(B)), 1e-300)

    def orth(M):
        if M.size == 0:
            return M
        U, s, _ = np.linalg.svd(M, full_matrices=False)
        return U[:, s > tol * max(scale, s[0] if s.size else 0.0)]

    V = orth(B)
    while V.shape[1]:
        W = orth(np.hstack([V, A @ V]))
        if W.shape[1] == V.shape[1]:
            return W
        V = W
    return V


@dataclass(frozen=True)
class InvariantMeasureReport:
    exists: bool
    covariance_Q: np.ndarray | None
    gamma_norm_orbit: GaussianSumEstimate
    unique: bool
    s_numeric: float
    controllable_dim: int

    def to_dict(self) -> dict:
        return {
            "exists": self.exists,
            "unique": self.unique,
            "covariance_Q": None if self.covariance_Q is None else _matrix_out(self.covariance_Q),
            "gamma_norm_orbit": self.gamma_norm_orbit.to_dict() if self.exists else {"value": "inf", "method": "exact"},
            "s_numeric": self.s_numeric,
            "controllable_dim": self.controllable_dim,
        }


def _matrix_out(M: np.ndarray):
    M = np.asarray(M)
    if np.iscomplexobj(M) and np.any(M.imag != 0):
        return [[[float(z.real), float(z.imag)] for z in row] for row in M]
    return np.real(M).tolist()


def invariant_measure_exists(prob: ScpProblem, mc: MonteCarlo | None = None) -> InvariantMeasureReport:
    """Existence, covariance and uniqueness of the invariant measure.

    ``T(.)B`` lies in ``gamma(R_+, H, E)`` iff ``A`` restricted to the
    controllable subspace of ``(A, B)`` is Hurwitz, which for full-rank or
    rank-one sweeps reduces to ``s(A) < 0``.  Uniqueness is certified when the
    resolvent is uniformly bounded on ``Re lam > 0``, i.e. no eigenvalue has
    nonnegative real part.
    """
    A, B = prob.gen.a_matrix, prob.b_matrix
    s = spectral_abscissa(prob.gen)
    unique = s < -HURWITZ_MARGIN
    V = controllable_basis(A, B)
    r = V.shape[1]
    if r == 0:
        zero = np.zeros((prob.m, prob.m))
        return InvariantMeasureReport(True, zero, GaussianSumEstimate(0.0), unique, s, 0)
    Ac = np.conj(V).T @ A @ V
    if float(np.max(_eigvals(Ac).real)) >= -HURWITZ_MARGIN:
        return InvariantMeasureReport(False, None, GaussianSumEstimate(math.inf), unique, s, r)
    Bc = np.conj(V).T @ B
    Qc = solve_lyapunov(Ac, Bc @ np.conj(Bc).T)
    Q = V @ Qc @ np.conj(V).T
    Q = 0.5 * (Q + np.conj(Q).T)
    if np.isrealobj(A) and np.isrealobj(B):
        Q = Q.real
    norm = covariance_gamma_norm(Q, prob.space, _default_mc(prob.space, mc))
    return InvariantMeasureReport(True, Q, norm, unique, s, r)


@dataclass(frozen=True)
class TransformNormReport:
    value: GaussianSumEstimate
    frequency_sq: float
    plancherel_sq: float
    rel_diff: float
    agree: bool

    def to_dict(self) -> dict:
        return {
            "gamma_norm": self.value.to_dict(),
            "frequency_side_sq": {"value": self.frequency_sq, "method": "quadrature"},
            "plancherel_sq": {"value": self.plancherel_sq, "method": "exact", "formula": "2*pi*trace(Q)"},
            "rel_diff": self.rel_diff,
            "agree": self.agree,
        }


def _frequency_covariance(A: np.ndarray, B: np.ndarray, epsrel: float = 1e-11) -> np.ndarray:
    """``int_R R(is, A) B B^* R(is, A)^* ds`` after the substitution ``s = tan(theta)``."""
    m = A.shape[0]
    eye = np.eye(m)
    if not np.any(B):
        return np.zeros((m, m))

    def f(theta):
        s = math.tan(theta)
        Y = np.linalg.solve(1j * s * eye - A, B)
        C = (Y @ np.conj(Y).T) * (1.0 + s * s)
        return np.concatenate([C.real.ravel(), C.imag.ravel()])

    pts = sorted({float(np.arctan(v)) for v in _eigvals(A).imag} | {0.0})
    pts = [p for p in pts if -0.5 * math.pi < p < 0.5 * math.pi]
    val, _ = scipy.integrate.quad_vec(f, -0.5 * math.pi, 0.5 * math.pi, epsabs=0.0, epsrel=epsrel, points=pts, limit=20000)
    C = val[: m * m].reshape(m, m) + 1j * val[m * m :].reshape(m, m)
    C = 0.5 * (C + np.conj(C).T)
    return C.real if np.isrealobj(A) and np.isrealobj(B) else C


def resolvent_transform_norm(prob: ScpProblem, mc: MonteCarlo | None = None, rtol: float = 1e-6) -> TransformNormReport:
    """``|R(i., A) B|_{gamma(R, H, E)}`` computed on both sides of Plancherel.

    The frequency-side covariance is integrated numerically; the time side is
    ``2 pi Q`` with the Lyapunov solution ``Q``.  The two traces must agree to
    ``rtol``; the reported norm uses the time side.
    """
    Q = invariant_covariance(prob)
    Cf = _frequency_covariance(prob.gen.a_matrix, prob.b_matrix)
    fs = float(np.real(np.trace(Cf)))
    ps = 2.0 * math.pi * float(np.real(np.trace(Q)))
    rel = abs(fs - ps) / ps if ps > 0 else abs(fs)
    value = covariance_gamma_norm(2.0 * math.pi * Q, prob.space, _default_mc(prob.space, mc))
    return TransformNormReport(value, fs, ps, rel, rel <= rtol)


# ---------------------------------------------------------------------------
# perturbations
# ---------------------------------------------------------------------------


def imaginary_axis_rbound(gen: Generator, shift: float = 0.0) -> RBoundEstimate:
    """R-bound of ``{R(is, A - shift) : s in R}``.

    Exact in l2 (supremum of spectral norms).  In l^p, ``upper`` is the
    certified bound ``m^{|1/2 - 1/p|}`` times the l2 value and ``value`` the
    largest l^p operator norm found at the l2 maximiser and at the imaginary
    parts of the eigenvalues (a lower estimate).
    """
    A = gen.a_matrix - shift * np.eye(gen.dim)
    ls = resolvent_line_sup(A, 0.0)
    space = gen.space
    desc = {"argmax_s": ls.argmax, "grid_points": ls.grid_points}
    if space.is_hilbert:
        return RBoundEstimate(ls.value, True, 0.0, ls.value, desc)
    pts = np.unique(np.concatenate([[0.0, ls.argmax], _eigvals(A).imag]))
    eye = np.eye(gen.dim)
    lower = max(operator_norm(np.linalg.inv(1j * s * eye - A), space, restarts=8) for s in pts)
    return RBoundEstimate(lower, False, 0.0, space.l2_equivalence * ls.value, desc)


def perturbation_margin(gen: Generator) -> float:
    """``delta = 1 / R{R(is, A) : s in R}``, conservative (upper R-bound) in l^p."""
    require_hurwitz(gen)
    return 1.0 / imaginary_axis_rbound(gen).upper


@dataclass
class PerturbationReport:
    delta_margin: float
    perturbation_norm: float
    contraction_C: float
    norm_inflation: float
    perturbed_report: InvariantMeasureReport
    transform_norm: float
    perturbed_transform_norm: float
    inflation_bound_holds: bool
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        r = self.perturbed_report
        return r.exists and r.unique and self.inflation_bound_holds and self.contraction_C < 1.0

    def to_dict(self) -> dict:
        return {
            "delta_margin": self.delta_margin,
            "perturbation_norm": self.perturbation_norm,
            "contraction_C": self.contraction_C,
            "norm_inflation": self.norm_inflation,
            "transform_norm": self.transform_norm,
            "perturbed_transform_norm": self.perturbed_transform_norm,
            "inflation_bound": self.norm_inflation * self.transform_norm,
            "inflation_bound_holds": self.inflation_bound_holds,
            "perturbed": self.perturbed_report.to_dict(),
            "passed": self.passed,
            **self.details,
        }


def perturbed_invariant_measure_check(prob: ScpProblem, P, mc: MonteCarlo | None = None) -> PerturbationReport:
    """Invariant measure of ``SCP(A + P, B)`` for ``|P| < delta``.

    With ``C = R{R(is, A)} |P| < 1``: ``A + P`` is Hurwitz, its invariant
    measure exists and is unique, and
    ``|R(i., A + P) B|_gamma <= |R(i., A) B|_gamma / (1 - C)``.
    Raises :class:`MarginExceeded` when ``|P| >= delta``.
    """
    gen = prob.gen
    P = np.atleast_2d(np.asarray(P))
    if P.shape != (gen.dim, gen.dim):
        raise ValueError(f"perturbation must be {gen.dim}x{gen.dim}, got {P.shape}")
    require_hurwitz(gen)
    rb = imaginary_axis_rbound(gen)
    delta = 1.0 / rb.upper
    normP = operator_norm_upper(P, gen.space)
    if normP >= delta:
        raise MarginExceeded(f"|P| = {normP:.6g} is not below the margin delta = {delta:.6g}")
    C = rb.upper * normP
    inflation = 1.0 / (1.0 - C)
    pgen = gen.perturbed(P)
    pprob = prob.with_generator(pgen)
    prep = invariant_measure_exists(pprob, mc)
    mc_eff = _default_mc(gen.space, mc)
    base = resolvent_transform_norm(prob, mc_eff)
    details = {"plancherel_rel_diff": base.rel_diff}
    if prep.exists and prep.unique:
        pert = resolvent_transform_norm(pprob, mc_eff)
        details["perturbed_plancherel_rel_diff"] = pert.rel_diff
        tol = 1e-12 * base.value.value if base.value.exact else STAT_SIGMAS * math.hypot(pert.value.stderr, inflation * base.value.stderr)
        holds = pert.value.value <= inflation * base.value.value + tol
        pval = pert.value.value
    else:
        holds, pval = False, math.inf
    return PerturbationReport(delta, normP, C, inflation, prep, base.value.value, pval, bool(holds), details)


@dataclass
class SolutionPerturbationReport:
    omega1: float
    contraction_C: float
    neumann_max_rel_err: float
    horizon: float
    norm_unperturbed: GaussianSumEstimate
    norm_perturbed: GaussianSumEstimate
    shifted_norm_perturbed: GaussianSumEstimate
    transform_inflation_holds: bool
    exponential_bound_holds: bool

    @property
    def ratio(self) -> float:
        base = self.norm_unperturbed.value
        return self.norm_perturbed.value / base if base > 0 else (1.0 if self.norm_perturbed.value == 0 else math.inf)

    @property
    def passed(self) -> bool:
        return (
            self.contraction_C < 1.0
            and self.neumann_max_rel_err < 1e-8
            and math.isfinite(self.norm_perturbed.value)
            and self.transform_inflation_holds
            and self.exponential_bound_holds
        )

    def to_dict(self) -> dict:
        return {
            "omega1": self.omega1,
            "contraction_C": self.contraction_C,
            "neumann_max_rel_err": self.neumann_max_rel_err,
            "horizon": self.horizon,
            "norm_unperturbed": self.norm_unperturbed.to_dict(),
            "norm_perturbed": self.norm_perturbed.to_dict(),
            "shifted_norm_perturbed": self.shifted_norm_perturbed.to_dict(),
            "ratio": self.ratio,
            "transform_inflation_holds": self.transform_inflation_holds,
            "exponential_bound_holds": self.exponential_bound_holds,
            "passed": self.passed,
        }


def neumann_factor(R: np.ndarray, P: np.ndarray, tol: float = 1e-16, max_terms: int = 10_000) -> np.ndarray:
    """``sum_n (R P)^n``, summed until the terms fall below ``tol`` relative."""
    K = R @ P
    total = np.eye(K.shape[0], dtype=K.dtype)
    term = total
    for _ in range(max_terms):
        term = term @ K
        total = total + term
        if np.linalg.norm(term) <= tol * np.linalg.norm(total):
            break
    return total


def bounded_perturbation_solution(
    prob: ScpProblem,
    P,
    T_horizon: float = 1.0,
    mc: MonteCarlo | None = None,
    omega_cap: float = 1e8,
    n_check: int = 41,
) -> SolutionPerturbationReport:
    """Existence of solutions for ``SCP(A + P, B)`` through a shifted generator.

    A shift ``omega1 > s(A) + 1`` is searched such that
    ``C = R{R(lam, A - omega1) : Re lam >= 0} |P| < 1`` (the R-bound evaluated
    directly).  The Neumann factor ``sum_n (R(is, A - omega1) P)^n`` is
    compared with the direct resolvent of ``A - omega1 + P`` on a grid of
    ``s``, and the finite-horizon gamma-norms of ``A`` and ``A + P`` are
    returned.
    """
    gen = prob.gen
    P = np.atleast_2d(np.asarray(P))
    if P.shape != (gen.dim, gen.dim):
        raise ValueError(f"perturbation must be {gen.dim}x{gen.dim}, got {P.shape}")
    normP = operator_norm_upper(P, gen.space)
    w0 = spectral_abscissa(gen)
    excess = 1.0 + normP
    while True:
        omega = w0 + 1.0 + excess
        rb = imaginary_axis_rbound(gen, omega).upper
        C = rb * normP
        if C < 1.0:
            break
        excess *= 2.0
        if excess > omega_cap:
            raise ShiftSearchFailed(f"no shift below {omega_cap:g} makes R{{R(is, A - omega)}} |P| < 1")
    A_w = gen.a_matrix - omega * np.eye(gen.dim)
    B = prob.b_matrix
    ls = resolvent_line_sup(A_w, 0.0)
    s_grid = np.unique(np.concatenate([np.linspace(-4, 4, n_check) * (1.0 + float(np.linalg.norm(A_w, 2))), [ls.argmax, 0.0]]))
    eye = np.eye(gen.dim)
    worst = 0.0
    for s in s_grid:
        R = np.linalg.solve(1j * s * eye - A_w, eye)
        series = neumann_factor(R, P) @ (R @ B)
        direct = np.linalg.solve(1j * s * eye - (A_w + P), B)
        worst = max(worst, float(np.linalg.norm(series - direct) / max(np.linalg.norm(direct), 1e-300)))

    mc_eff = _default_mc(gen.space, mc)
    shifted = prob.with_generator(Generator(A_w, gen.space))
    shifted_p = prob.with_generator(Generator(A_w + P, gen.space))
    t_base = resolvent_transform_norm(shifted, mc_eff)
    t_pert = resolvent_transform_norm(shifted_p, mc_eff)
    infl = 1.0 / (1.0 - C)
    tol = 1e-12 * t_base.value.value if t_base.value.exact else STAT_SIGMAS * math.hypot(t_pert.value.stderr, infl * t_base.value.stderr)
    transform_ok = t_pert.value.value <= infl * t_base.value.value + tol

    base = solution_exists(prob, T_horizon, mc_eff)
    pert = solution_exists(prob.with_generator(gen.perturbed(P)), T_horizon, mc_eff)
    spert = solution_exists(shifted_p, T_horizon, mc_eff)
    etol = 1e-9 * pert.norm.value if pert.norm.exact else STAT_SIGMAS * math.hypot(pert.norm.stderr, math.exp(T_horizon * omega) * spert.norm.stderr)
    exp_ok = pert.norm.value <= math.exp(T_horizon * omega) * spert.norm.value + etol
    return SolutionPerturbationReport(omega, C, worst, T_horizon, base.norm, pert.norm, spert.norm, bool(transform_ok), bool(exp_ok))


# ---------------------------------------------------------------------------
# Datko-Pazy certification
# ---------------------------------------------------------------------------


@dataclass
class DatkoPazyReport:
    epsilon: float
    certificate: StabilityCertificate
    perturbation_margin: float
    shifted_orbit_norms: list
    rank_one_invariant: list

    @property
    def shifted_norms_finite(self) -> bool:
        return all(math.isfinite(v.value) for v in self.shifted_orbit_norms)

    @property
    def passed(self) -> bool:
        return (
            self.epsilon > 0
            and self.epsilon <= abs(self.certificate.s_numeric)
            and self.shifted_norms_finite
            and all(self.rank_one_invariant)
            and self.certificate.passed
        )

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "perturbation_margin": self.perturbation_margin,
            "certificate": self.certificate.to_dict(),
            "shifted_orbit_norms": [v.to_dict() for v in self.shifted_orbit_norms],
            "shifted_norms_finite": self.shifted_norms_finite,
            "rank_one_invariant_measures": self.rank_one_invariant,
            "passed": self.passed,
        }


def datko_pazy_certify(gen: Generator, d: int = 1, mc: MonteCarlo | None = None, seed: int = 0) -> DatkoPazyReport:
    """Certify that the ``eps``-shifted semigroup keeps every orbit gamma-radonifying.

    ``eps = min(eps0, delta) / 2`` where ``eps0`` comes from the resolvent
    certificate and ``delta`` is the perturbation margin for ``P = eps I``.
    The shifted orbits of all basis vectors are evaluated and invariant
    measures of ``SCP(A + eps, x (x) h)`` are checked for all basis pairs.
    """
    require_hurwitz(gen)
    cert = resolvent_rbound_datko(gen, mc=mc, seed=seed)
    delta = perturbation_margin(gen)
    eps = 0.5 * min(cert.epsilon0, delta)
    shifted = gen.shifted(eps)
    try:
        require_hurwitz(shifted)
    except NotStable:
        return DatkoPazyReport(eps, cert, delta, [GaussianSumEstimate(math.inf)], [False])
    eye = np.eye(gen.dim)
    norms = [orbit_gamma_norm(shifted, eye[:, i], mc) for i in range(gen.dim)]
    rank_one = []
    for i in range(gen.dim):
        for j in range(d):
            B = np.zeros((gen.dim, d))
            B[i, j] = 1.0
            rank_one.append(invariant_measure_exists(ScpProblem(shifted, B), mc).exists)
    return DatkoPazyReport(eps, cert, delta, norms, rank_one)


def rank_one_witness(gen: Generator) -> tuple[np.ndarray, InvariantMeasureReport]:
    """Rank-one ``B' = x (x) e_1`` without invariant measure when ``s(A) >= 0``.

    ``x`` spans (the real part of) an eigenvector of an eigenvalue with
    nonnegative real part.  Only meaningful outside the Hurwitz case.
    """
    w, V = np.linalg.eig(gen.a_matrix)
    k = int(np.argmax(w.real))
    if w[k].real < -HURWITZ_MARGIN:
        raise ValueError("generator is Hurwitz; every rank-one B admits an invariant measure")
    x = V[:, k]
    if np.isrealobj(gen.a_matrix):
        x = x.real if np.linalg.norm(x.real) > 1e-8 else x.imag
    x = x / np.linalg.norm(x)
    B = x.reshape(-1, 1)
    return B, invariant_measure_exists(ScpProblem(gen, B))
