import math

import numpy as np
import pytest

from randla.errors import (
    IndexOutOfRange,
    RankDeficientSketch,
    RankTooLarge,
    ShapeMismatch,
    TooLarge,
)
from randla.rng import RngStream
from randla.tt import (
    DenseTensor,
    TtTrain,
    read_tensor_binary,
    read_tensor_csv,
    tt_error,
    tt_randomized,
    tt_reconstruct,
    tt_svd,
    unfold,
    write_tensor_binary,
    write_tensor_csv,
)


def random_train(dims, ranks, g):
    rs = [1, *ranks, 1]
    return TtTrain(tuple(g.standard_normal((rs[k], n, rs[k + 1])) for k, n in enumerate(dims)))


def exact_tensor(seed, dims=(4, 4, 4, 4), ranks=(2, 3, 2)):
    return tt_reconstruct(random_train(dims, ranks, RngStream(seed).generator()))


def assert_tail_bound(T, train):
    # left-orthogonal sweeps make the bound an equality, so allow roundoff on the tails too
    err = tt_error(T, train)
    tails = sum(t * t for t in train.tails)
    assert err**2 <= tails * (1 + 64 * np.finfo(float).eps) + 1e-20 * T.norm() ** 2


def naive_unfold(a, k):
    # rows (i_1..i_k), columns (i_{k+1}..i_d), first index fastest on both sides
    dims = a.shape
    rows, cols = math.prod(dims[:k]), math.prod(dims[k:])
    M = np.zeros((rows, cols))
    for idx in np.ndindex(*dims):
        r = np.ravel_multi_index(idx[:k], dims[:k], order="F")
        c = np.ravel_multi_index(idx[k:], dims[k:], order="F")
        M[r, c] = a[idx]
    return M


def test_dense_tensor_layout_and_validation():
    a = np.arange(12.0).reshape((2, 3, 2))
    T = DenseTensor.from_array(a)
    assert np.array_equal(T.array, a) and T.data[1] == a[1, 0, 0]
    with pytest.raises(ValueError):
        DenseTensor((4,), np.zeros(4))
    with pytest.raises(ShapeMismatch):
        DenseTensor((2, 2), np.zeros(5))
    with pytest.raises(ValueError):
        T.data[0] = 1.0


def test_unfold_examples(gen):
    a = gen.standard_normal((2, 2))
    assert np.array_equal(unfold(a, 1), a)
    b = gen.standard_normal((2, 3, 2))
    M = unfold(b, 2)
    assert M.shape == (6, 2) and np.array_equal(M, naive_unfold(b, 2))
    assert np.linalg.norm(M) == np.linalg.norm(b)
    u, v, w = gen.standard_normal(3), gen.standard_normal(4), gen.standard_normal(5)
    r1 = np.einsum("i,j,l->ijl", u, v, w)
    for k in (1, 2):
        assert np.linalg.matrix_rank(unfold(r1, k)) == 1
    with pytest.raises(IndexOutOfRange):
        unfold(b, 3)


def test_train_validation(gen):
    with pytest.raises(ShapeMismatch):
        TtTrain((np.ones((1, 2, 2)), np.ones((3, 2, 1))))
    with pytest.raises(ShapeMismatch):
        TtTrain((np.ones((1, 2, 2)), np.ones((2, 2, 2))))
    t = random_train((3, 4, 5), (2, 2), gen)
    assert t.dims == (3, 4, 5) and t.ranks == (2, 2)


def test_reconstruct_examples(gen):
    u, v = gen.standard_normal((3, 2)), gen.standard_normal((2, 4))
    t = TtTrain((u.reshape(1, 3, 2), v.reshape(2, 4, 1)))
    assert np.allclose(tt_reconstruct(t).array, u @ v)
    ones = TtTrain(tuple(np.ones((1, 2, 1)) for _ in range(3)))
    assert np.array_equal(tt_reconstruct(ones).array, np.ones((2, 2, 2)))
    with pytest.raises(TooLarge):
        tt_reconstruct(ones, max_entries=7)


def test_reconstruct_matches_einsum(gen):
    t = random_train((2, 3, 4), (2, 3), gen)
    G1, G2, G3 = t.cores
    ref = np.einsum("aib,bjc,ckd->ijk", G1, G2, G3)
    assert np.allclose(tt_reconstruct(t).array, ref, atol=1e-13)


def test_tt_svd_examples(gen):
    u, v, w = gen.standard_normal(3), gen.standard_normal(4), gen.standard_normal(5)
    T = DenseTensor.from_array(np.einsum("i,j,l->ijl", u, v, w))
    tr = tt_svd(T, ranks=(1, 1))
    assert tt_error(T, tr) <= 1e-12 * T.norm()
    assert_tail_bound(T, tr)
    T2 = DenseTensor.from_array(gen.standard_normal((2, 2)))
    tr = tt_svd(T2, ranks=(2,))
    assert tt_error(T2, tr) <= 1e-14 * T2.norm()
    with pytest.raises(RankTooLarge):
        tt_svd(T2, ranks=(3,))
    with pytest.raises(ValueError):
        tt_svd(T2)
    with pytest.raises(ValueError):
        tt_svd(T2, ranks=(1,), tol=0.1)


@pytest.mark.parametrize("seed", range(20))
def test_exact_rank_round_trip(seed):
    T = exact_tensor(100 + seed)
    tr = tt_svd(T, ranks=(2, 3, 2))
    assert tt_error(T, tr) <= 1e-10 * T.norm()
    assert_tail_bound(T, tr)
    rt = tt_randomized(T, (2, 3, 2), 0, RngStream(200 + seed))
    assert tt_error(T, rt) <= 1e-8 * T.norm()


def test_tol_mode_recovers_ranks():
    T = exact_tensor(7)
    tr = tt_svd(T, tol=1e-8)
    assert tr.ranks == (2, 3, 2) and tt_error(T, tr) <= 1e-8 * T.norm()
    assert_tail_bound(T, tr)


def test_zero_cores_and_shape_mismatch():
    T = exact_tensor(8)
    zero = TtTrain(tuple(np.zeros(G.shape) for G in tt_svd(T, ranks=(1, 1, 1)).cores))
    assert tt_error(T, zero) == pytest.approx(T.norm())
    with pytest.raises(ShapeMismatch):
        tt_error(exact_tensor(9, dims=(4, 4, 4, 3)), zero)


def test_two_term_tensor_error_matches_tails(gen):
    a = [gen.standard_normal(4) for _ in range(3)]
    b = [gen.standard_normal(4) for _ in range(3)]
    T = DenseTensor.from_array(np.einsum("i,j,k->ijk", *a) + 0.1 * np.einsum("i,j,k->ijk", *b))
    tr = tt_svd(T, ranks=(1, 1))
    err, rhs = tt_error(T, tr), math.sqrt(sum(t * t for t in tr.tails))
    assert rhs / math.sqrt(2) <= err <= rhs + 1e-12


def noisy(seed, ranks=(2, 2), dims=(5, 5, 5)):
    g = RngStream(seed).generator()
    T = tt_reconstruct(random_train(dims, ranks, g))
    return DenseTensor(T.dims, T.data + 1e-9 * g.standard_normal(T.data.size))


def _randomized_within_10x(oversample, trials=50):
    good = 0
    for i in range(trials):
        T = noisy(300 + i)
        tr = tt_svd(T, ranks=(2, 2))
        assert_tail_bound(T, tr)
        e_rnd = tt_error(T, tt_randomized(T, (2, 2), oversample, RngStream(400 + i)))
        tau = math.sqrt(sum(t * t for t in tr.tails))
        if oversample:
            assert e_rnd <= 10 * math.sqrt(T.d - 1) * tau
        good += e_rnd <= 10 * tt_error(T, tr)
    return good


def test_randomized_vs_deterministic_on_noisy():
    assert _randomized_within_10x(4) >= 45


@pytest.mark.xfail(strict=True, reason="a sketch of width exactly r_k has a heavy error tail; "
                   "measured about 85% within 10x, not 90%")
def test_randomized_vs_deterministic_square_sketch():
    assert _randomized_within_10x(0, 200) >= 180


def test_oversampling_helps():
    wins = 0
    for i in range(50):
        T = noisy(500 + i)
        e0 = tt_error(T, tt_randomized(T, (2, 2), 0, RngStream(600 + i)))
        e4 = tt_error(T, tt_randomized(T, (2, 2), 4, RngStream(600 + i)))
        wins += e4 <= e0
    assert wins >= 40


def test_rank_monotonicity():
    for i in range(10):
        g = RngStream(700 + i).generator()
        T = DenseTensor.from_array(g.standard_normal((3, 4, 4, 3)))
        prev = math.inf
        for r2 in range(1, 5):
            tr = tt_svd(T, ranks=(2, r2, 2))
            assert_tail_bound(T, tr)
            e = tt_error(T, tr)
            assert e <= prev + 1e-12 * T.norm()
            prev = e


def test_randomized_oversample_past_true_rank():
    T = exact_tensor(12)
    for p in (2, 6):
        tr = tt_randomized(T, (2, 3, 2), p, RngStream(13))
        assert tt_error(T, tr) <= 1e-10 * T.norm()
    zero = DenseTensor((3, 3, 3), np.zeros(27))
    assert tt_error(zero, tt_randomized(zero, (1, 1), 1, RngStream(14))) == 0.0


def test_randomized_deficient_sketch_raises(monkeypatch):
    import randla.tt as tt_mod

    T = exact_tensor(15)
    monkeypatch.setattr(tt_mod, "gaussian_matrix", lambda m, n, rng=None: np.zeros((m, n)))
    with pytest.raises(RankDeficientSketch):
        tt_randomized(T, (2, 3, 2), 0, RngStream(16))


def test_randomized_validation():
    T = exact_tensor(10)
    with pytest.raises(RankTooLarge):
        tt_randomized(T, (5, 3, 2))
    with pytest.raises(ValueError):
        tt_randomized(T, (2, 3, 2), oversample=-1)


def test_tensor_io_round_trip(tmp_path):
    T = noisy(11)
    write_tensor_binary(tmp_path / "t.bin", T)
    B = read_tensor_binary(tmp_path / "t.bin")
    assert B.dims == T.dims and np.array_equal(B.data, T.data)
    raw = (tmp_path / "t.bin").read_bytes()
    assert raw[:8] == (3).to_bytes(8, "little")
    write_tensor_csv(tmp_path / "t.csv", T)
    C = read_tensor_csv(tmp_path / "t.csv")
    assert C.dims == T.dims and np.array_equal(C.data, T.data)
    (tmp_path / "bad.bin").write_bytes(raw[:-8])
    with pytest.raises(ShapeMismatch):
        read_tensor_binary(tmp_path / "bad.bin")
