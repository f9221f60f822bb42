import numpy as np
import pytest

from gsig.errors import DuplicateEdge, InputError
from gsig.graph import random_geometric_graph
from gsig.io import read_edge_list, read_json, read_kernel, read_matrix, write_edge_list, write_matrix
from gsig.kernels import Heat


class TestEdgeCsv:

    def test_round_trip(self, tmp_path):
        g = random_geometric_graph(30, 4, seed=1)
        p = tmp_path / "g.csv"
        write_edge_list(p, g)
        back = read_edge_list(p)
        assert back.edges == g.edges
        assert p.read_text().splitlines()[0] == "i,j,w"

    def test_bad_header(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("a,b,c\n0,1,1\n")
        with pytest.raises(InputError, match="line 1"):
            read_edge_list(p)

    def test_bad_row_named(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("i,j,w\n0,1,1\n1,x,2\n")
        with pytest.raises(InputError, match="line 3"):
            read_edge_list(p)

    def test_field_count(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("i,j,w\n0,1\n")
        with pytest.raises(InputError, match="line 2"):
            read_edge_list(p)

    def test_duplicate(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("i,j,w\n0,1,1\n1,0,1\n")
        with pytest.raises(DuplicateEdge):
            read_edge_list(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="no such file"):
            read_edge_list(tmp_path / "nope.csv")


class TestMatrixCsv:

    def test_round_trip(self, tmp_path):
        X = np.random.default_rng(0).standard_normal((5, 3))
        write_matrix(tmp_path / "x.csv", X)
        np.testing.assert_array_equal(read_matrix(tmp_path / "x.csv"), X)

    def test_ragged(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(InputError, match="line 2"):
            read_matrix(p)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3,4\nfoo,5\n")
        with pytest.raises(InputError, match="line 3"):
            read_matrix(p)


class TestJson:

    def test_inline_kernel(self):
        assert read_kernel('{"type": "heat", "tau": 2.0}') == Heat(2.0)

    def test_file_kernel(self, tmp_path):
        p = tmp_path / "k.json"
        p.write_text(Heat(0.5).to_json())
        assert read_kernel(p) == Heat(0.5)

    def test_malformed(self, tmp_path):
        p = tmp_path / "k.json"
        p.write_text('{\n"type": "heat",\n}')
        with pytest.raises(InputError, match="line 3"):
            read_json(p)
