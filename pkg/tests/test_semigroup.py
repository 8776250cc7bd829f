import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from gamma_stab.acceptance import random_hurwitz
from gamma_stab.errors import EmptyFamily, NotStable, SeriesDiverges, SpectrumHit
from gamma_stab.gaussian import MonteCarlo
from gamma_stab.semigroup import (
    C_UNIV,
    C_UNIV_FORMULA,
    Generator,
    expm,
    laplace_transform,
    minimal_abstract_constant,
    neumann_resolvent,
    orbit_gamma_norm,
    orbit_pettis,
    rademacher_ratio,
    rbound_estimate,
    rbound_laplace_check,
    resolvent,
    resolvent_line_sup,
    resolvent_norm,
    resolvent_rbound_datko,
    solve_lyapunov,
    spectral_abscissa,
    uniform_orbit_bound,
)
from gamma_stab.spaces import SpaceSpec, operator_norm, operator_norm_upper

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def g(A, space=None):
    return Generator(np.atleast_2d(np.asarray(A, dtype=float)), space)


def test_universal_constant():
    assert C_UNIV == pytest.approx(2 * math.pi * math.exp(2 * math.pi) / (math.exp(2 * math.pi) - 1), rel=1e-15)
    assert C_UNIV == pytest.approx(6.2949407, abs=1e-7)
    assert C_UNIV_FORMULA == "2*pi*e^{2pi}/(e^{2pi}-1)"


def test_expm_examples():
    assert np.allclose(expm(g(np.zeros((3, 3))), 2.5), np.eye(3))
    assert expm(g([[-1.0]]), 1.0)[0, 0] == pytest.approx(math.exp(-1), rel=1e-14)
    assert np.allclose(expm(g([[0.0, 1.0], [0.0, 0.0]]), 1.0), [[1.0, 1.0], [0.0, 1.0]], atol=1e-15)


def test_spectral_abscissa_examples():
    assert spectral_abscissa(g(np.diag([-1.0, -3.0]))) == pytest.approx(-1.0)
    assert spectral_abscissa(g([[-1.0, 5.0], [0.0, -2.0]])) == pytest.approx(-1.0)
    assert spectral_abscissa(g(ROT)) == pytest.approx(0.0, abs=1e-15)


def test_resolvent_examples():
    assert resolvent(g([[-1.0]]), 0)[0, 0] == pytest.approx(1.0)
    assert resolvent(g([[-1.0]]), 1)[0, 0] == pytest.approx(0.5)
    with pytest.raises(SpectrumHit):
        resolvent(g(np.diag([-1.0, -2.0])), -2.0)


@given(seed=st.integers(0, 2**31), m=st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_semigroup_and_resolvent_identities(seed, m):
    rng = np.random.default_rng(seed)
    gen = Generator(random_hurwitz(rng, m))
    s, t = rng.uniform(0, 2, size=2)
    assert np.allclose(expm(gen, s) @ expm(gen, t), expm(gen, s + t), atol=1e-10)
    lam, mu = complex(*rng.uniform(0.1, 2, 2)), complex(*rng.uniform(0.1, 2, 2))
    Rl, Rm = resolvent(gen, lam), resolvent(gen, mu)
    assert np.allclose(Rl - Rm, (mu - lam) * Rl @ Rm, atol=1e-10)
    eig = np.linalg.eigvals(gen.a_matrix)
    assert np.linalg.norm(Rl, 2) >= 1 / np.min(np.abs(lam - eig)) * (1 - 1e-10)


def test_lyapunov_against_quadrature():
    rng = np.random.default_rng(3)
    A = random_hurwitz(rng, 5, (0.4, 1.0))
    x = rng.standard_normal(5)
    X = solve_lyapunov(np.conj(A).T, np.eye(5))
    quad, _ = scipy.integrate.quad(lambda t: float(np.sum((expm(Generator(A), t) @ x) ** 2)), 0, np.inf, epsrel=1e-12, limit=500)
    assert x @ X @ x == pytest.approx(quad, rel=1e-6)


@pytest.mark.parametrize("a", [0.3, 1.0, 4.0])
def test_scalar_orbit_norm(a):
    assert orbit_gamma_norm(g([[-a]]), [1.0]).value == pytest.approx(1 / math.sqrt(2 * a), rel=1e-14)
    assert orbit_gamma_norm(g([[-a]]), [0.0]).value == 0.0


def test_orbit_norm_requires_stability():
    with pytest.raises(NotStable):
        orbit_gamma_norm(g(ROT), [1.0, 0.0])


def test_uniform_orbit_bound_examples():
    assert uniform_orbit_bound(g(-0.7 * np.eye(3))).value == pytest.approx(1 / math.sqrt(1.4), rel=1e-12)
    ob = uniform_orbit_bound(g(np.diag([-1.0, -4.0])))
    assert ob.value == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    assert abs(abs(ob.direction[0]) - 1) < 1e-12
    A = random_hurwitz(np.random.default_rng(0), 4)
    assert uniform_orbit_bound(g(A / 2)).value / uniform_orbit_bound(g(A)).value == pytest.approx(math.sqrt(2), rel=1e-12)


def test_uniform_orbit_bound_lp_bracket():
    A = random_hurwitz(np.random.default_rng(1), 3)
    ob = uniform_orbit_bound(Generator(A, SpaceSpec.lp(3, 4)), MonteCarlo(20_000, 0))
    assert 0 < ob.value <= ob.upper + 3 * ob.stderr


def test_pettis_laplace_scalar():
    op = orbit_pettis(g([[-1.0]]), [1.0])
    assert laplace_transform(op, 1.0) == pytest.approx(0.5, rel=1e-10)
    assert np.isrealobj(laplace_transform(op, 0.7))


def test_pettis_laplace_matches_resolvent():
    rng = np.random.default_rng(4)
    gen = Generator(random_hurwitz(rng, 4))
    x = rng.standard_normal(4)
    op = orbit_pettis(gen, x)
    for lam in (0.3, 1.0 + 2.0j, 0.05 - 0.5j):
        assert np.allclose(laplace_transform(op, lam), resolvent(gen, lam) @ x, rtol=1e-8, atol=1e-10)


def test_pettis_covariance_matches_lyapunov():
    rng = np.random.default_rng(5)
    gen = Generator(random_hurwitz(rng, 4))
    X = rng.standard_normal((4, 2))
    op = orbit_pettis(gen, X)
    Q = solve_lyapunov(gen.a_matrix, X @ X.T)
    assert np.allclose(op.covariance(), Q, rtol=1e-9, atol=1e-12)


def test_resolvent_line_sup_examples():
    ls = resolvent_line_sup(np.diag([-1.0, -2.0]), 0.0)
    assert ls.value == pytest.approx(1.0, rel=1e-12)
    rng = np.random.default_rng(6)
    A = random_hurwitz(rng, 6)
    ls = resolvent_line_sup(A, 0.0)
    s = np.linspace(-50, 50, 200_001)
    dense = resolvent_norm(A, 1j * s).max()
    assert ls.value >= dense * (1 - 1e-9)
    assert ls.value <= dense * 1.01
    with pytest.raises(NotStable):
        resolvent_line_sup(A, spectral_abscissa(Generator(A)) - 0.1)


def test_rbound_examples():
    sp = SpaceSpec.l2(2)
    assert rbound_estimate([np.eye(2), 2 * np.eye(2)], sp).value == pytest.approx(2.0)
    assert rbound_estimate([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], sp).value == pytest.approx(1.0)
    T = np.array([[1.0, 2.0], [0.0, -1.0]])
    sp1 = SpaceSpec.lp(2, 1.0)
    assert rbound_estimate([T], sp1).value == pytest.approx(operator_norm(T, sp1))
    with pytest.raises(EmptyFamily):
        rbound_estimate([], sp)


def test_rademacher_ratio_on_l2_below_max_norm():
    rng = np.random.default_rng(7)
    ops = [rng.standard_normal((3, 3)) for _ in range(3)]
    xs = [rng.standard_normal(3) for _ in range(3)]
    ratio, se = rademacher_ratio(ops, xs, SpaceSpec.l2(3))
    assert se == 0.0
    assert ratio <= max(np.linalg.norm(T, 2) for T in ops) * (1 + 1e-12)
    ratio_mc, se_mc = rademacher_ratio(ops, xs, SpaceSpec.l2(3), MonteCarlo(20_000, 1))
    assert abs(ratio_mc - ratio) <= 3 * se_mc


def test_rbound_lp_bracket():
    rng = np.random.default_rng(8)
    ops = [rng.standard_normal((3, 3)) for _ in range(4)]
    sp = SpaceSpec.lp(3, 3)
    est = rbound_estimate(ops, sp, seed=1)
    assert max(operator_norm(T, sp) for T in ops) * (1 - 1e-9) <= est.value <= est.upper + 1e-12


def test_operator_norm_bracket():
    rng = np.random.default_rng(9)
    T = rng.standard_normal((4, 4))
    for p in (1.0, 1.5, 3.0, 4.0):
        sp = SpaceSpec.lp(4, p)
        lower, upper = operator_norm(T, sp), operator_norm_upper(T, sp)
        assert lower <= upper * (1 + 1e-12)
        x = rng.standard_normal(4)
        assert sp.vector_norm(T @ x) <= upper * sp.vector_norm(x) * (1 + 1e-12)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0])
def test_laplace_scalar_closed_form(a, delta):
    rep = rbound_laplace_check(g([[-a]]), delta, N_list=(0, 1, 4))
    assert rep.passed
    assert rep.profile[delta] == pytest.approx(1 / (delta + a), rel=1e-12)
    assert rep.bound == pytest.approx(C_UNIV / math.sqrt(2 * a) / math.sqrt(delta), rel=1e-12)


def test_laplace_single_term_estimate():
    rep = rbound_laplace_check(g([[-1.0]]), 0.3, N_list=(0,), n_vectors=4)
    for c in rep.estimate_checks:
        lam = c["sigma"] - c["rho"] * 0.3j
        assert c["lhs"]["value"] == pytest.approx(1 / abs(lam + 1), rel=1e-12)
        assert c["passed"]


def test_laplace_random_system():
    gen = Generator(random_hurwitz(np.random.default_rng(10), 6))
    rep = rbound_laplace_check(gen, 0.1)
    assert rep.passed
    vals = [rep.profile[k] for k in sorted(rep.profile)]
    assert all(x >= y for x, y in zip(vals, vals[1:]))


def test_laplace_lp_system():
    gen = Generator(random_hurwitz(np.random.default_rng(11), 3), SpaceSpec.lp(3, 4))
    rep = rbound_laplace_check(gen, 0.5, N_list=(0, 4), mc=MonteCarlo(10_000, 0))
    assert rep.passed


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_certificate_scalar_chain(a):
    cert = resolvent_rbound_datko(g([[-a]]))
    assert cert.orbit_bound_M == pytest.approx(1 / math.sqrt(2 * a))
    assert cert.epsilon0 == pytest.approx(a / (2 * C_UNIV**2), rel=1e-12)
    assert cert.epsilon0 == pytest.approx(a / 79.25, rel=1e-3)
    assert cert.passed and cert.epsilon0 < a


def test_certificate_diagonal():
    cert = resolvent_rbound_datko(g(np.diag([-1.0, -2.0])), eps_fractions=(0.5,))
    e0 = cert.epsilon0
    assert e0 <= 1
    line = cert.line_rbound[0.5 * e0]
    assert line["value"] <= 2 / e0
    assert line["value"] == pytest.approx(1 / (1 - 0.5 * e0), rel=1e-9)


def test_certificate_refuses_unstable():
    with pytest.raises(NotStable):
        resolvent_rbound_datko(g(ROT))


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 3.7])
def test_minimal_constant_is_tight_for_scalars(a):
    c, d = minimal_abstract_constant(g([[-a]]))
    assert c == pytest.approx(1 / (2 * math.sqrt(a)), rel=1e-13)
    assert -1 / (4 * c * c) == pytest.approx(-a, abs=1e-12)
    assert d == pytest.approx(a, rel=1e-6)


def test_neumann_examples():
    gen = g([[-1.0]])
    nr = neumann_resolvent(gen, -0.05, 0.1, n_terms=40)
    assert abs(nr.matrix[0, 0] - 1 / 0.95) / (1 / 0.95) < 1e-8
    nr = neumann_resolvent(gen, 0.1 + 3j, 0.1, n_terms=1)
    assert nr.ratio == 0.0
    assert nr.matrix[0, 0] == pytest.approx(1 / (1.1 + 3j), rel=1e-15)
    with pytest.raises(SeriesDiverges):
        neumann_resolvent(gen, -1.2, 0.5)


def test_neumann_random_strip():
    gen = Generator(random_hurwitz(np.random.default_rng(12), 8))
    e0 = resolvent_rbound_datko(gen).epsilon0
    worst = 0.0
    for x in np.linspace(-e0, 3 * e0, 12)[1:-1]:
        for y in np.linspace(-3, 3, 10):
            lam = complex(x, y)
            nr = neumann_resolvent(gen, lam, e0)
            direct = resolvent(gen, lam)
            worst = max(worst, np.linalg.norm(nr.matrix - direct) / np.linalg.norm(direct))
            assert np.linalg.norm(nr.matrix - direct, 2) <= nr.error_bound + 1e-12 * np.linalg.norm(direct, 2)
    assert worst < 1e-8
