import numpy as np
import pytest
import scipy.io

from randla.errors import InvalidMatrix
from randla.io import read_csv, read_matrix_market, write_csv, write_matrix_market


def test_matrix_market_round_trip(tmp_path, gen):
    A = gen.standard_normal((5, 3)) * 10.0 ** gen.integers(-200, 200, (5, 3))
    p = tmp_path / "a.mtx"
    write_matrix_market(p, A)
    assert np.array_equal(read_matrix_market(p), A)
    assert np.array_equal(scipy.io.mmread(str(p)), A)


def test_matrix_market_reads_scipy_output(tmp_path, gen):
    A = gen.standard_normal((4, 6))
    p = tmp_path / "b.mtx"
    scipy.io.mmwrite(str(p), A, comment="written elsewhere", precision=17)
    assert np.array_equal(read_matrix_market(p), A)


def test_matrix_market_errors(tmp_path):
    p = tmp_path / "c.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n")
    with pytest.raises(InvalidMatrix):
        read_matrix_market(p)
    p.write_text("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n")
    with pytest.raises(InvalidMatrix):
        read_matrix_market(p)
    p.write_text("hello\n")
    with pytest.raises(InvalidMatrix):
        read_matrix_market(p)


def test_csv_round_trip_and_errors(tmp_path, gen):
    A = gen.standard_normal((3, 4))
    p = tmp_path / "a.csv"
    write_csv(p, A)
    assert np.array_equal(read_csv(p), A)
    p.write_text("1,2\n3\n")
    with pytest.raises(InvalidMatrix):
        read_csv(p)
