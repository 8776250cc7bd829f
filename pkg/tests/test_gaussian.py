import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite_e import hermegauss

from gamma_stab import frames
from gamma_stab.errors import DegenerateFamily, DimensionMismatch, ExactPathUnavailable
from gamma_stab.gaussian import (
    MonteCarlo,
    almost_summing_norm,
    almost_summing_search,
    check_bessel_sequence_bound,
    check_hilbert_sequence_bound,
    covariance_gamma_norm,
    gamma_norm,
    gaussian_sum_norm,
)
from gamma_stab.spaces import SpaceSpec

L2_2 = SpaceSpec.l2(2)
LP4_2 = SpaceSpec.lp(2, 4)


def gauss_hermite_lp4_oracle(order=80):
    """sqrt(E (g1^4 + g2^4)^{1/2}) for independent standard normals."""
    x, w = hermegauss(order)
    w = w / w.sum()
    val = np.sqrt(x[:, None] ** 4 + x[None, :] ** 4)
    return math.sqrt(float(w @ val @ w))


def test_orthogonal_pair_exact():
    est = gaussian_sum_norm([[3.0, 0.0], [0.0, 4.0]], L2_2)
    assert est.value == 5.0
    assert est.exact and est.method == "exact"


@pytest.mark.parametrize("space", [SpaceSpec.l2(3), SpaceSpec.lp(3, 1.0), SpaceSpec.lp(3, 3.0)])
def test_single_vector(space):
    x = np.array([1.0, -2.0, 0.5])
    est = gaussian_sum_norm([x], space, MonteCarlo(40_000, 7))
    assert abs(est.value - float(space.vector_norm(x))) <= 3 * est.stderr


def test_lp4_pair_against_gauss_hermite():
    oracle = gauss_hermite_lp4_oracle()
    est = gaussian_sum_norm(np.eye(2), LP4_2, MonteCarlo(100_000, 11))
    assert abs(est.value - oracle) <= 3 * est.stderr


def test_exact_path_only_on_l2():
    with pytest.raises(ExactPathUnavailable):
        gaussian_sum_norm(np.eye(2), LP4_2)


def test_gamma_norm_examples():
    assert gamma_norm(np.diag([1.0, 2.0]), L2_2).value == pytest.approx(math.sqrt(5))
    assert gamma_norm(np.zeros((2, 2)), L2_2).value == 0.0
    mc = MonteCarlo(20_000, 3)
    a = gamma_norm(np.eye(2), LP4_2, mc)
    b = gaussian_sum_norm(np.eye(2), LP4_2, mc)
    assert a.value == b.value and a.stderr == b.stderr


def test_complex_data_uses_circular_gaussians():
    # unitary invariance: |sum g_n U x_n| has the law of |sum g_n x_n| for circular g
    rng = np.random.default_rng(0)
    X = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    exact = math.sqrt(float(np.sum(np.abs(X) ** 2)))
    est = gaussian_sum_norm(X, SpaceSpec.l2(4), MonteCarlo(50_000, 5))
    assert abs(est.value - exact) <= 3 * est.stderr


def test_covariance_gamma_norm_matches_factor():
    rng = np.random.default_rng(1)
    R = rng.standard_normal((3, 5))
    Q = R @ R.T
    assert covariance_gamma_norm(Q, SpaceSpec.l2(3)).value == pytest.approx(np.linalg.norm(R), rel=1e-12)
    mc = MonteCarlo(50_000, 2)
    a = covariance_gamma_norm(Q, SpaceSpec.lp(3, 3), mc)
    b = gamma_norm(R, SpaceSpec.lp(3, 3), mc.with_seed(9))
    assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr)


def test_seed_determinism_and_block_invariance():
    X = np.random.default_rng(4).standard_normal((4, 3))
    sp = SpaceSpec.lp(3, 3)
    a = gaussian_sum_norm(X, sp, MonteCarlo(30_000, 5))
    b = gaussian_sum_norm(X, sp, MonteCarlo(30_000, 5))
    assert a == b
    c = gaussian_sum_norm(X, sp, MonteCarlo(30_000, 6))
    assert c.value != a.value


def test_thread_count_does_not_change_numbers(tmp_path):
    code = (
        "import numpy as np\n"
        "from gamma_stab.gaussian import MonteCarlo, gaussian_sum_norm\n"
        "from gamma_stab.spaces import SpaceSpec\n"
        "X = np.arange(12.0).reshape(4, 3)\n"
        "e = gaussian_sum_norm(X, SpaceSpec.lp(3, 3), MonteCarlo(50_000, 1, block=4096))\n"
        "print(repr(e.value), repr(e.stderr))\n"
    )
    outs = []
    for threads in ("1", "4"):
        env = dict(os.environ, GAMMA_STAB_THREADS=threads)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout)
    assert outs[0] == outs[1]


def test_stderr_scaling():
    X = np.random.default_rng(2).standard_normal((5, 4))
    s1 = gaussian_sum_norm(X, SpaceSpec.l2(4), MonteCarlo(20_000, 0)).stderr
    s4 = gaussian_sum_norm(X, SpaceSpec.l2(4), MonteCarlo(80_000, 0)).stderr
    assert abs(s1 / s4 / 2 - 1) <= 0.2


def test_almost_summing_examples():
    R = np.diag([1.0, 2.0])
    search = almost_summing_search(R, L2_2, n_systems=50, seed=0)
    assert all(v.value <= math.sqrt(5) + 1e-12 for v in search.sampled)
    assert search.consistent
    assert almost_summing_norm(np.eye(3), SpaceSpec.l2(3)).value == pytest.approx(math.sqrt(3))


def test_almost_summing_search_lp3():
    R = np.random.default_rng(5).standard_normal((4, 4))
    search = almost_summing_search(R, SpaceSpec.lp(4, 3), MonteCarlo(5_000, 1), n_systems=100, seed=2)
    best = max(v.value for v in search.sampled)
    assert best <= search.full.value + 3 * search.full.stderr + 3 * max(v.stderr for v in search.sampled)


def test_hilbert_bound_equality_cases():
    rng = np.random.default_rng(6)
    R = rng.standard_normal((3, 4))
    rep = check_hilbert_sequence_bound(R, np.eye(4), SpaceSpec.l2(3))
    assert rep.lhs.value == pytest.approx(rep.rhs.value, rel=1e-12) and not rep.violated
    rep = check_hilbert_sequence_bound(R, 2 * np.eye(4), SpaceSpec.l2(3))
    assert rep.constant == pytest.approx(2.0)
    assert rep.lhs.value == pytest.approx(2 * np.linalg.norm(R), rel=1e-12)
    assert rep.rhs.value == pytest.approx(rep.lhs.value, rel=1e-12)


def test_bessel_bound_equality_cases():
    rng = np.random.default_rng(7)
    R = rng.standard_normal((3, 4))
    rep = check_bessel_sequence_bound(R, np.eye(4), SpaceSpec.l2(3))
    assert rep.lhs.value == pytest.approx(rep.rhs.value, rel=1e-12)
    rep = check_bessel_sequence_bound(R, 0.5 * np.eye(4), SpaceSpec.l2(3))
    assert rep.constant == pytest.approx(0.5)
    assert rep.rhs.value == pytest.approx(np.linalg.norm(R), rel=1e-12)
    assert rep.lhs.value == pytest.approx(rep.rhs.value, rel=1e-12)


def test_bound_errors():
    R = np.eye(3)
    with pytest.raises(DimensionMismatch):
        check_hilbert_sequence_bound(R, np.eye(4), SpaceSpec.l2(3))
    F = np.zeros((3, 2))
    F[0, 0] = 1.0
    with pytest.raises(DegenerateFamily):
        check_bessel_sequence_bound(R, F, SpaceSpec.l2(3))


@given(seed=st.integers(0, 2**31), a=st.floats(0.25, 2.0), N=st.integers(1, 8), m=st.integers(1, 8))
@settings(max_examples=60, deadline=None)
def test_sandwich_on_l2_for_exponential_families(seed, a, N, m):
    rng = np.random.default_rng(seed)
    fam = frames.ExponentialFamily(a, float(rng.uniform(0, 1)), 0, N - 1)
    F = frames.orthonormal_coordinates(frames.gram_matrix(fam))
    consts = frames.exponential_family_constants(a)
    R = rng.standard_normal((m, N))
    space = SpaceSpec.l2(m)
    assert not check_hilbert_sequence_bound(R, F, space, c_hilbert=consts.c_hilbert).violated
    assert not check_bessel_sequence_bound(R, F, space, c_bessel=consts.c_bessel).violated


def test_sandwich_on_lp4_with_monte_carlo():
    rng = np.random.default_rng(8)
    for k in range(5):
        fam = frames.ExponentialFamily(0.5, 0.3, -2, 3)
        F = frames.orthonormal_coordinates(frames.gram_matrix(fam))
        consts = frames.exponential_family_constants(0.5)
        R = rng.standard_normal((4, 6))
        mc = MonteCarlo(50_000, k)
        space = SpaceSpec.lp(4, 4)
        assert not check_hilbert_sequence_bound(R, F, space, mc, consts.c_hilbert).violated
        assert not check_bessel_sequence_bound(R, F, space, mc, consts.c_bessel).violated


def test_monte_carlo_validation():
    with pytest.raises(ValueError):
        MonteCarlo(1)
    with pytest.raises(ValueError):
        SpaceSpec.lp(3, 2.0)
    with pytest.raises(ValueError):
        SpaceSpec.lp(3, 0.5)


@given(seed=st.integers(0, 2**31), m=st.integers(1, 6), n=st.integers(1, 6), k=st.integers(1, 6))
@settings(max_examples=50, deadline=None)
def test_ideal_property_l2(seed, m, n, k):
    rng = np.random.default_rng(seed)
    A, R, B = rng.standard_normal((m, m)), rng.standard_normal((m, n)), rng.standard_normal((n, k))
    sp = SpaceSpec.l2(m)
    lhs = gamma_norm(A @ R @ B, sp).value
    assert lhs <= np.linalg.norm(A, 2) * gamma_norm(R, sp).value * np.linalg.norm(B, 2) * (1 + 1e-12)


def test_ideal_property_lp3():
    from gamma_stab.spaces import operator_norm_upper

    rng = np.random.default_rng(12)
    sp = SpaceSpec.lp(4, 3)
    for k in range(5):
        A, R, B = rng.standard_normal((4, 4)), rng.standard_normal((4, 5)), rng.standard_normal((5, 5))
        mc = MonteCarlo(40_000, k)
        lhs = gamma_norm(A @ R @ B, sp, mc)
        r = gamma_norm(R, sp, mc.with_seed(100 + k))
        c = operator_norm_upper(A, sp) * np.linalg.norm(B, 2)
        assert lhs.value <= c * r.value + 3 * math.hypot(lhs.stderr, c * r.stderr)


def test_stderr_halves_with_quadrupled_work_on_average():
    X = np.random.default_rng(13).standard_normal((4, 3))
    sp = SpaceSpec.lp(3, 3)
    ratios = []
    for rep in range(20):
        s1 = gaussian_sum_norm(X, sp, MonteCarlo(4_000, rep)).stderr
        s2 = gaussian_sum_norm(X, sp, MonteCarlo(8_000, 1000 + rep)).stderr
        ratios.append(s2 / s1)
    assert abs(np.mean(ratios) * math.sqrt(2) - 1) <= 0.2
