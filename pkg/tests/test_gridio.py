import numpy as np
import pytest

from kvnquant.gridio import encode_grid, grid_csv, read_grid, write_grid


def test_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    path = tmp_path / "w.kvg"
    write_grid(path, values, ((-1.0, 1.0), (-2.0, 2.0)), {"t": 0.5})
    back, ranges, meta = read_grid(path)
    assert np.array_equal(back, values)
    assert ranges == ((-1.0, 1.0), (-2.0, 2.0))
    assert meta == {"t": 0.5}
    assert path.read_bytes() == encode_grid(values, ((-1.0, 1.0), (-2.0, 2.0)), {"t": 0.5})


def test_bad_files(tmp_path):
    bad = tmp_path / "bad.kvg"
    bad.write_bytes(b"NOTAGRID" + bytes(64))
    with pytest.raises(ValueError, match="magic"):
        read_grid(bad)
    bad.write_bytes(b"abc")
    with pytest.raises(ValueError):
        read_grid(bad)
    good = encode_grid(np.zeros((2, 2)), ((0, 1), (0, 1)))
    bad.write_bytes(good[:-3])
    with pytest.raises(ValueError, match="complex samples"):
        read_grid(bad)
    with pytest.raises(ValueError):
        encode_grid(np.zeros(3), ((0, 1), (0, 1)))


def test_csv_layout():
    text = grid_csv(np.array([0.0, 0.5]), np.array([1.0]), np.array([[1 + 1j], [2.0]]), "seed: 3")
    lines = text.splitlines()
    assert lines[0] == "# seed: 3"
    assert lines[1] == "q,p,re_psi,im_psi,abs2"
    assert lines[2] == "0.0,1.0,1.0,1.0,2.0"
    assert len(lines) == 4
