import numpy as np
import pytest

from mgbounds.errors import BadDimension, ConfigError
from mgbounds.matrix_io import format_float, read_matrix, write_matrix


@pytest.mark.parametrize("name", ["m.txt", "m.mtx"])
def test_round_trip_is_exact(tmp_path, name):
    M = np.random.default_rng(0).standard_normal((5, 3)) * 10.0 ** np.arange(-7, 8, 5)
    write_matrix(tmp_path / name, M)
    np.testing.assert_array_equal(read_matrix(tmp_path / name), M)


def test_plain_comments_and_blank_lines(tmp_path):
    f = tmp_path / "a.txt"
    f.write_text("# comment\n2 2\n\n1 2\n% more\n3 4\n")
    np.testing.assert_array_equal(read_matrix(f), [[1, 2], [3, 4]])


def test_matrix_market_coordinate(tmp_path):
    f = tmp_path / "c.mtx"
    f.write_text("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 4.0\n2 2 5.0\n")
    np.testing.assert_array_equal(read_matrix(f), [[4, 0], [0, 5]])


@pytest.mark.parametrize("body", ["", "2 2\n1 2\n", "2 x\n1 2\n3 4\n", "1 1\nnan\n", "2 2\n1 2\n3\n"])
def test_malformed(tmp_path, body):
    f = tmp_path / "bad.txt"
    f.write_text(body)
    with pytest.raises(BadDimension):
        read_matrix(f)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_matrix(tmp_path / "nope.txt")


def test_format_float_round_trips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(format_float(x)) == x
