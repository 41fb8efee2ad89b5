import numpy as np
import pytest

from randla.dense import cond2, numerical_rank, svd
from randla.errors import Degenerate, DimensionMismatch, ProfileNotSorted
from randla.generators import (
    MultiplierKind,
    draw_multiplier,
    gaussian_matrix,
    householder_sign,
    illblock_system,
    integer_matrix,
    paper_profile,
    profile_matrix,
    random_orthogonal,
    random_structured,
    uniform_matrix,
)
from randla.genp import genp_factor, genp_solve, relative_residual
from randla.rng import RngStream, as_generator
from randla.structured import StructuredSpec, circ_mul

from conftest import streams


def test_rng_stream_determinism_and_independence():
    a = RngStream(5, 3).generator().standard_normal(10)
    b = RngStream(5, 3).generator().standard_normal(10)
    c = RngStream(5, 4).generator().standard_normal(10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    s = RngStream(5, 3)
    assert not np.array_equal(s.substream(0).random(4), s.substream(1).random(4))
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(TypeError):
        as_generator("seed")


def test_gaussian_matrix_determinism_and_moments():
    s = RngStream(1)
    assert np.array_equal(gaussian_matrix(2, 2, 0, 1, s), gaussian_matrix(2, 2, 0, 1, s))
    A = gaussian_matrix(200, 200, 0, 1, RngStream(2))
    assert -0.05 < A.mean() < 0.05 and 0.9 < A.var() < 1.1
    B = gaussian_matrix(100, 100, 0, 1, RngStream(3))
    assert np.count_nonzero(np.abs(B) > 4) <= 3
    with pytest.raises(ValueError):
        gaussian_matrix(2, 2, 0, 0)


def test_uniform_matrix_range_and_mean():
    s = RngStream(4)
    assert np.array_equal(uniform_matrix(3, 3, s), uniform_matrix(3, 3, s))
    U = uniform_matrix(500, 500, RngStream(5))
    assert U.min() >= -1 and U.max() < 1
    assert -0.01 < U.mean() < 0.01


def test_random_structured_examples(gen):
    C = random_structured("circulant_sign", 4, 4, gen)
    assert set(np.unique(C.first_col)) <= {-1.0, 1.0}
    D = C.densify()
    for k in range(4):
        assert np.all(D[np.arange(4), (np.arange(4) + k) % 4] == D[0, k])
    T = random_structured("toeplitz_gaussian", 3, 2, gen).densify()
    assert T[0, 0] == T[1, 1] and T[1, 0] == T[2, 1]
    C64 = random_structured("circulant_sign", 64, 64, gen)
    x = gen.standard_normal(64)
    assert np.linalg.norm(C64.densify(), 2) <= 64
    assert np.allclose(C64.densify() @ x, circ_mul(C64, x), atol=1e-12 * np.linalg.norm(x) * 8)
    with pytest.raises(DimensionMismatch):
        random_structured("circulant_gaussian", 3, 4, gen)


def test_multiplier_kind_parse():
    assert MultiplierKind.parse("circulant-sign").tag == "circulant_sign"
    assert MultiplierKind.parse("toeplitz").cli_name == "toeplitz"
    assert MultiplierKind.parse("uniform").tag == "uniform_pm1"
    with pytest.raises(ValueError):
        MultiplierKind("bogus")
    with pytest.raises(ValueError):
        MultiplierKind("gaussian", law="cauchy")


def test_draw_multiplier_uniform_law(gen):
    M = draw_multiplier(MultiplierKind.parse("gaussian", law="uniform"), 50, 50, gen)
    assert M.min() >= -1 and M.max() < 1
    T = draw_multiplier(MultiplierKind.parse("toeplitz", law="uniform"), 6, 3, gen)
    assert isinstance(T, StructuredSpec) and np.all(np.abs(T.first_col) <= 1)


def test_householder_sign_examples(gen):
    ones = np.ones(5)
    H = householder_sign(5, u=ones, v=ones)
    assert np.allclose(H, np.eye(5) - np.ones((5, 5)) / 5)
    assert np.allclose(H.sum(axis=1), 0)
    with pytest.raises(Degenerate):
        householder_sign(2, u=[1, 1], v=[1, -1])
    H = householder_sign(8, gen)
    # the printed formula annihilates u, so H is singular
    assert numerical_rank(H) == 7


def test_householder_sign_annihilates_u():
    g = RngStream(9).generator()
    u = g.choice([-1.0, 1.0], 8)
    v = g.choice([-1.0, 1.0], 8)
    if u @ v == 0:
        v[0] = -v[0]
    assert np.linalg.norm(householder_sign(8, u=u, v=v) @ u) < 1e-14


def test_random_orthogonal(gen):
    # with R > 0 the 1 x 1 factor is sign(g), so either sign is a valid output
    assert abs(random_orthogonal(1, gen)[0, 0]) == 1.0
    Q = random_orthogonal(16, gen)
    assert np.linalg.norm(Q.T @ Q - np.eye(16)) < 1e-12 * 16
    assert np.allclose(svd(Q).sigma, 1, atol=1e-12)


def test_profile_matrix_examples(gen):
    Q = profile_matrix(6, np.ones(6), gen)
    assert np.allclose(Q.T @ Q, np.eye(6), atol=1e-12)
    A = profile_matrix(64, paper_profile(64, 8), gen)
    assert numerical_rank(A, 1e-6) == 8
    s = svd(A).sigma
    assert s[0] == pytest.approx(1, abs=1e-12)
    assert cond2(A, tol=0) == pytest.approx(1e10, rel=1e-4)
    assert np.allclose(svd(profile_matrix(3, [3, 2, 1], gen)).sigma, [3, 2, 1], atol=1e-12)
    with pytest.raises(ProfileNotSorted):
        profile_matrix(3, [1, 2, 3], gen)


def test_illblock_system_examples():
    A, b, y = illblock_system(4, RngStream(1))
    assert cond2(A, tol=0) <= 1e4 and cond2(A[:2, :2], tol=0) >= 1e8
    assert np.array_equal(A @ y, b)
    A, b, _ = illblock_system(64, RngStream(2))
    raw = genp_factor(A, pivot_floor=0.0)
    assert relative_residual(A, genp_solve(raw, b), b) >= 10
    with pytest.raises(ValueError):
        illblock_system(5)


@pytest.mark.parametrize("kind", ["gaussian", "toeplitz_gaussian", "circulant_gaussian"])
def test_generic_rank_profile(kind):
    for g in streams(17, 200):
        M = draw_multiplier(MultiplierKind(kind), 16, 16, g)
        D = M if isinstance(M, np.ndarray) else M.densify()
        for k in range(1, 17):
            assert np.linalg.svd(D[:k, :k], compute_uv=False)[-1] > 1e-10


def test_integer_matrix(gen):
    M = integer_matrix(4, 16, gen)
    assert M.dtype == object and all(1 <= x <= 16 for x in M.ravel())
    T = integer_matrix(4, 16, gen, toeplitz=True)
    assert all(T[i, j] == T[i + 1, j + 1] for i in range(3) for j in range(3))
