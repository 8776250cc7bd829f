"""Acceptance suite: one runner per criterion, each returning a :class:`CriterionResult`.

Every runner is seeded and deterministic.  Runtimes are measured but kept out
of :meth:`CriterionResult.to_dict` unless requested, so that reports can be
compared byte for byte.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.linalg

from . import frames, scp
from .errors import NotStable
from .gaussian import STAT_SIGMAS, MonteCarlo, gaussian_sum_norm, check_bessel_sequence_bound, check_hilbert_sequence_bound
from .semigroup import (
    C_UNIV,
    Generator,
    minimal_abstract_constant,
    neumann_resolvent,
    rbound_laplace_check,
    resolvent,
    resolvent_rbound_datko,
    spectral_abscissa,
)
from .spaces import SpaceSpec, operator_norm_upper

__all__ = ["CriterionResult", "random_hurwitz", "covariance_quadrature", "CRITERIA", "run_criterion", "run_suite"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime_s: float = 0.0
    limit_s: float | None = None

    @property
    def within_time(self) -> bool:
        return self.limit_s is None or self.runtime_s <= self.limit_s

    def line(self) -> str:
        status = "PASS" if self.passed and self.within_time else "FAIL"
        lim = f" (limit {self.limit_s:g} s)" if self.limit_s is not None else ""
        return f"[{status}] criterion {self.number:2d}: {self.title} [{self.runtime_s:.2f} s{lim}]"

    def to_dict(self, timing: bool = False) -> dict:
        d = {"number": self.number, "title": self.title, "passed": self.passed, "details": self.details}
        if timing:
            d.update(runtime_s=self.runtime_s, limit_s=self.limit_s, within_time=self.within_time)
        return d


def random_hurwitz(rng: np.random.Generator, m: int, s_range=(0.1, 1.0)) -> np.ndarray:
    """Random real ``m x m`` matrix shifted so that ``s(A)`` is uniform in ``-s_range``."""
    M = rng.standard_normal((m, m)) / math.sqrt(m)
    target = rng.uniform(*s_range)
    return M - (float(np.max(np.linalg.eigvals(M).real)) + target) * np.eye(m)


def covariance_quadrature(A: np.ndarray, B: np.ndarray, epsrel: float = 1e-10) -> np.ndarray:
    """``int_0^inf exp(tA) B B^* exp(tA^*) dt`` by adaptive quadrature on the half line."""
    A = np.asarray(A, dtype=float)

    def f(t):
        Y = scipy.linalg.expm(t * A) @ B
        return Y @ Y.T

    val, _ = scipy.integrate.quad_vec(f, 0.0, math.inf, epsabs=0.0, epsrel=epsrel, limit=10000)
    return val


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_frame_constants(seed: int = 0, samples: int | None = None) -> CriterionResult:
    a = 0.5
    target = math.e / (math.e - 1.0)
    fam = frames.ExponentialFamily(a)
    cck = frames.frame_constants_cck(fam)
    gram = frames.frame_constants_gram(frames.gram_matrix(frames.ExponentialFamily(a, n_min=0, n_max=199)))
    err_cck = abs(cck.hilbert_sq - target)
    rel_gram = abs(gram.hilbert_sq - target) / target
    return CriterionResult(
        1,
        "upper frame constant of the exponential family at a = 0.5",
        bool(err_cck <= 1e-6 and rel_gram <= 0.02),
        {"closed_form": target, "f_function": cck.hilbert_sq, "abs_err_f_function": err_cck,
         "gram_N200": gram.hilbert_sq, "rel_err_gram": rel_gram},
        limit_s=5.0,
    )


def criterion_bessel_adjudication(seed: int = 0, samples: int | None = None) -> CriterionResult:
    rep = frames.adjudicate_bessel_constant(0.5)
    ok = rep["monotone_from_above"] and rep["selected"] == "f_function_infimum" and rep["within_rtol"] and rep["discrepancy_flag"]
    return CriterionResult(2, "lower frame constant: Gram limit against the periodization infimum", bool(ok), _plain(rep), limit_s=10.0)


def criterion_riesz_sandwich(seed: int = 0, samples: int | None = None) -> CriterionResult:
    rng = np.random.default_rng([seed, 3])
    n_inst = 100
    samples = samples or 100_000
    worst = {"l2": -math.inf, "lp4": -math.inf}
    fails = {"l2": 0, "lp4": 0}
    for k in range(n_inst):
        m = int(rng.integers(1, 9))
        N = int(rng.integers(1, 9))
        a = float(rng.uniform(0.25, 2.0))
        rho = float(rng.uniform(0.0, 1.0))
        n0 = int(rng.integers(-4, 5))
        fam = frames.ExponentialFamily(a, rho, n0, n0 + N - 1)
        F = frames.orthonormal_coordinates(frames.gram_matrix(fam))
        consts = frames.exponential_family_constants(a)
        R = rng.standard_normal((m, N))
        for key, space, mc in (
            ("l2", SpaceSpec.l2(m), None),
            ("lp4", SpaceSpec.lp(m, 4.0) if m > 1 else SpaceSpec.l2(m), MonteCarlo(samples, seed * 1000 + k)),
        ):
            if key == "lp4" and m == 1:
                mc = None
            hb = check_hilbert_sequence_bound(R, F, space, mc, consts.c_hilbert)
            bb = check_bessel_sequence_bound(R, F, space, mc, consts.c_bessel)
            for rep in (hb, bb):
                excess = -rep.margin / max(rep.tolerance, 1e-300) if rep.tolerance > 0 else -rep.margin
                worst[key] = max(worst[key], excess)
                fails[key] += int(rep.violated)
    return CriterionResult(
        3,
        "Riesz sandwich for exponential families on l2 and lp(4)",
        fails["l2"] == 0 and fails["lp4"] == 0,
        {"instances": n_inst, "samples": samples, "violations": fails, "worst_excess_over_tolerance": worst},
        limit_s=60.0,
    )


def criterion_gaussian_exactness(seed: int = 0, samples: int | None = None) -> CriterionResult:
    rng = np.random.default_rng([seed, 4])
    samples = samples or 20_000
    worst_z, fails = 0.0, 0
    for k in range(50):
        m = int(rng.integers(1, 9))
        N = int(rng.integers(1, 9))
        X = rng.standard_normal((N, m))
        if k % 2:
            X = X + 1j * rng.standard_normal((N, m))
        exact = math.sqrt(float(np.sum(np.abs(X) ** 2)))
        est = gaussian_sum_norm(X, SpaceSpec.l2(m), MonteCarlo(samples, seed * 1000 + k))
        z = abs(est.value - exact) / est.stderr
        worst_z = max(worst_z, z)
        fails += int(z > STAT_SIGMAS)
    X = rng.standard_normal((5, 4))
    s1 = gaussian_sum_norm(X, SpaceSpec.l2(4), MonteCarlo(samples, seed)).stderr
    s4 = gaussian_sum_norm(X, SpaceSpec.l2(4), MonteCarlo(4 * samples, seed)).stderr
    ratio = s1 / s4
    scaling_ok = abs(ratio / 2.0 - 1.0) <= 0.2
    return CriterionResult(
        4,
        "Monte Carlo Gaussian sums on l2 against the closed form",
        fails == 0 and scaling_ok,
        {"instances": 50, "samples": samples, "violations": fails, "max_z": worst_z, "stderr_ratio_4x": ratio},
    )


def criterion_laplace_rbound(seed: int = 0, samples: int | None = None) -> CriterionResult:
    rng = np.random.default_rng([seed, 5])
    fails, worst = 0, 0.0
    checks = 0
    for k in range(20):
        m = int(rng.integers(1, 9))
        gen = Generator(random_hurwitz(rng, m))
        for delta in (0.05, 0.1, 0.5, 1.0):
            rep = rbound_laplace_check(gen, delta, seed=seed * 1000 + k)
            checks += len(rep.estimate_checks)
            worst = max(worst, max(rep.profile.values()) / rep.bound)
            fails += int(not rep.passed)
    return CriterionResult(
        5,
        "Laplace transform R-bound on half-planes and the Gaussian-sum estimate",
        fails == 0,
        {"systems": 20, "deltas": [0.05, 0.1, 0.5, 1.0], "failures": fails, "max_ratio_to_bound": worst,
         "estimate_checks": checks, "C_univ": C_UNIV},
        limit_s=60.0,
    )


def criterion_spectral_bound(seed: int = 0, samples: int | None = None) -> CriterionResult:
    rng = np.random.default_rng([seed, 6])
    fails = 0
    worst = 0.0
    for k in range(20):
        m = int(rng.integers(1, 9))
        gen = Generator(random_hurwitz(rng, m))
        cert = resolvent_rbound_datko(gen, seed=seed * 1000 + k)
        worst = max(worst, cert.epsilon0 / abs(cert.s_numeric))
        fails += int(not cert.passed)
    tight = {}
    for a in (0.5, 1.0, 2.0):
        c, _ = minimal_abstract_constant(Generator(np.array([[-a]])))
        tight[a] = {"c_min": c, "closed_form": 1.0 / (2.0 * math.sqrt(a)), "bound": -1.0 / (4.0 * c * c), "err": abs(-1.0 / (4.0 * c * c) + a)}
    tight_ok = all(v["err"] <= 1e-12 for v in tight.values())
    return CriterionResult(
        6,
        "certified spectral bound and scalar tightness",
        fails == 0 and tight_ok,
        {"instances": 20, "failures": fails, "max_eps0_over_abs_s": worst, "scalar": _plain(tight)},
    )


def criterion_neumann(seed: int = 0, samples: int | None = None) -> CriterionResult:
    rng = np.random.default_rng([seed, 7])
    worst = 0.0
    per = []
    for k in range(3):
        gen = Generator(random_hurwitz(rng, 8))
        cert = resolvent_rbound_datko(gen, seed=seed * 1000 + k)
        e0 = cert.epsilon0
        res = np.linspace(-e0, 3 * e0, 12)[1:-1]
        ims = np.linspace(-3.0, 3.0, 10)
        w = 0.0
        for x in res:
            for y in ims:
                lam = complex(x, y)
                nr = neumann_resolvent(gen, lam, e0)
                direct = resolvent(gen, lam)
                w = max(w, float(np.linalg.norm(nr.matrix - direct) / np.linalg.norm(direct)))
        per.append(w)
        worst = max(worst, w)
    return CriterionResult(
        7,
        "Neumann expansion of the resolvent in the strip",
        worst < 1e-8,
        {"systems": 3, "grid_points": 100, "max_rel_err": worst, "per_system": per},
        limit_s=10.0,
    )


def criterion_invariant_measures(seed: int = 0, samples: int | None = None) -> CriterionResult:
    rng = np.random.default_rng([seed, 8])
    worst = 0.0
    for _ in range(10):
        m = int(rng.integers(1, 7))
        d = int(rng.integers(1, 4))
        A = random_hurwitz(rng, m, (0.3, 1.0))
        B = rng.standard_normal((m, d))
        Q = scp.invariant_covariance(scp.ScpProblem(Generator(A), B))
        Qq = covariance_quadrature(A, B)
        worst = max(worst, float(np.linalg.norm(Q - Qq) / np.linalg.norm(Qq)))
    q = scp.invariant_measure_exists(scp.ScpProblem(Generator(np.array([[-1.0]])), np.array([[1.0]])))
    scalar_err = abs(float(q.covariance_Q[0, 0]) - 0.5)
    return CriterionResult(
        8,
        "invariant covariance: Lyapunov against quadrature",
        worst <= 1e-6 and scalar_err <= 1e-14 and q.exists,
        {"instances": 10, "max_rel_err": worst, "scalar_Q": float(q.covariance_Q[0, 0]), "scalar_err": scalar_err},
    )


def criterion_plancherel(seed: int = 0, samples: int | None = None) -> CriterionResult:
    rng = np.random.default_rng([seed, 9])
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(1, 9))
        d = int(rng.integers(1, 4))
        prob = scp.ScpProblem(Generator(random_hurwitz(rng, m)), rng.standard_normal((m, d)))
        worst = max(worst, scp.resolvent_transform_norm(prob).rel_diff)
    r = scp.resolvent_transform_norm(scp.ScpProblem(Generator(np.array([[-1.0]])), np.array([[1.0]])))
    scalar_err = abs(r.value.value - math.sqrt(math.pi))
    return CriterionResult(
        9,
        "Plancherel identity for the resolvent transform",
        worst <= 1e-6 and scalar_err <= 1e-8,
        {"instances": 20, "max_rel_diff": worst, "scalar_norm": r.value.value, "scalar_err": scalar_err},
    )


def criterion_perturbation(seed: int = 0, samples: int | None = None) -> CriterionResult:
    rng = np.random.default_rng([seed, 10])
    fails = 0
    worst_C = 0.0
    for k in range(50):
        m = int(rng.integers(1, 9))
        d = int(rng.integers(1, 4))
        gen = Generator(random_hurwitz(rng, m))
        prob = scp.ScpProblem(gen, rng.standard_normal((m, d)))
        delta = scp.perturbation_margin(gen)
        P = rng.standard_normal((m, m))
        P *= 0.9 * delta / operator_norm_upper(P, gen.space)
        rep = scp.perturbed_invariant_measure_check(prob, P)
        worst_C = max(worst_C, rep.contraction_C)
        fails += int(not rep.passed)
    lp_fails = 0
    samples = samples or 20_000
    for k in range(5):
        m = int(rng.integers(2, 7))
        gen = Generator(random_hurwitz(rng, m), SpaceSpec.lp(m, 4.0))
        prob = scp.ScpProblem(gen, rng.standard_normal((m, 1)))
        delta = scp.perturbation_margin(gen)
        P = rng.standard_normal((m, m))
        P *= 0.9 * delta / operator_norm_upper(P, gen.space)
        rep = scp.perturbed_invariant_measure_check(prob, P, MonteCarlo(samples, seed * 1000 + k))
        lp_fails += int(not rep.passed)
    scalar = {}
    for a in (0.5, 1.0, 2.0):
        dl = scp.perturbation_margin(Generator(np.array([[-a]])))
        scalar[a] = {"delta": dl, "rel_err": abs(dl - a) / a}
    scalar_ok = all(v["rel_err"] <= 1e-14 for v in scalar.values())
    return CriterionResult(
        10,
        "bounded perturbations keep a unique invariant measure",
        fails == 0 and lp_fails == 0 and scalar_ok,
        {"instances_l2": 50, "failures_l2": fails, "instances_lp4": 5, "failures_lp4": lp_fails,
         "max_contraction": worst_C, "scalar_margin": _plain(scalar)},
        limit_s=120.0,
    )


def criterion_datko_pazy(seed: int = 0, samples: int | None = None) -> CriterionResult:
    rng = np.random.default_rng([seed, 11])
    fails = 0
    eps = []
    for k in range(20):
        m = int(rng.integers(1, 9))
        gen = Generator(random_hurwitz(rng, m))
        rep = scp.datko_pazy_certify(gen, seed=seed * 1000 + k)
        ok = rep.passed and rep.epsilon > 0 and rep.epsilon <= abs(spectral_abscissa(gen)) and rep.shifted_norms_finite
        fails += int(not ok)
        eps.append(rep.epsilon)
    refused = []
    unstable = [np.array([[0.0, -1.0], [1.0, 0.0]]), np.array([[0.0]]), np.diag([-1.0, 0.5])]
    unstable.append(-random_hurwitz(rng, 4))
    for A in unstable:
        try:
            scp.datko_pazy_certify(Generator(A))
            refused.append(False)
        except NotStable:
            refused.append(True)
    return CriterionResult(
        11,
        "Datko-Pazy certification and refusal",
        fails == 0 and all(refused),
        {"systems": 20, "failures": fails, "min_epsilon": min(eps), "max_epsilon": max(eps), "refused_unstable": refused},
    )


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_frame_constants,
    2: criterion_bessel_adjudication,
    3: criterion_riesz_sandwich,
    4: criterion_gaussian_exactness,
    5: criterion_laplace_rbound,
    6: criterion_spectral_bound,
    7: criterion_neumann,
    8: criterion_invariant_measures,
    9: criterion_plancherel,
    10: criterion_perturbation,
    11: criterion_datko_pazy,
}


def run_criterion(number: int, seed: int = 0, samples: int | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number](seed=seed, samples=samples)
    res.runtime_s = time.perf_counter() - t0
    return res


def run_suite(seed: int = 0, samples: int | None = None, numbers=None) -> list[CriterionResult]:
    return [run_criterion(n, seed, samples) for n in (numbers or sorted(CRITERIA))]


def _plain(obj):
    """Recursively convert numpy scalars and non-string keys for JSON output."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj
