import struct

import numpy as np
import pytest

from furst.samples import MAGIC, read_points, read_points_csv, write_points, write_points_csv


def test_binary_round_trip(tmp_path):
    pts = np.random.default_rng(0).random(1000)
    path = tmp_path / "pts.bin"
    write_points(path, pts)
    assert np.array_equal(read_points(path), pts)


def test_binary_layout(tmp_path):
    path = tmp_path / "pts.bin"
    write_points(path, [0.25, 0.5])
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    assert struct.unpack("<Q", raw[8:16]) == (2,)
    assert struct.unpack("<2d", raw[16:]) == (0.25, 0.5)


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTFURST" + struct.pack("<Q", 0))
    with pytest.raises(ValueError):
        read_points(path)


def test_truncated(tmp_path):
    path = tmp_path / "short.bin"
    path.write_bytes(MAGIC + struct.pack("<Q", 3) + struct.pack("<d", 0.1))
    with pytest.raises(ValueError):
        read_points(path)


def test_csv_round_trip(tmp_path):
    pts = np.random.default_rng(1).random(50)
    path = tmp_path / "pts.csv"
    write_points_csv(path, pts)
    assert np.array_equal(read_points_csv(path), pts)
