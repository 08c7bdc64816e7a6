import json

import numpy as np
import pytest

from arraycalib import ScenarioConfig, ToaMatrix, generate
from arraycalib import io as aio
from arraycalib.errors import ParseError


def test_read_small_csv(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("1.0,2.0\n3.0,4.0\n")
    t = aio.read_toa(path)
    assert np.array_equal(t.t, [[1, 2], [3, 4]]) and t.full and t.speed == 343.0


def test_csv_missing_cells_and_mask_file(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("1.0,,3.0\n4.0,5.0,nan\n7.0,8.0,9.0\n")
    (tmp_path / "t.mask.csv").write_text("1,1,1\n0,1,1\n1,1,1\n")
    t = aio.read_toa(path)
    assert t.mask.tolist() == [[True, False, True], [False, True, False], [True, True, True]]


def test_json_mask(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"toa": [[1.0, 2.0], [3.0, 4.0]], "mask": [[True, False], [True, True]], "speed": 340}))
    t = aio.read_toa(path)
    assert t.missing().tolist() == [[0, 1]] and t.speed == 340.0


def test_json_null_entries(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"toa": [[1.0, None], [3.0, 4.0]]}))
    assert not aio.read_toa(path).mask[0, 1]


@pytest.mark.parametrize(
    "content, row, column",
    [
        ("1.0,2.0\n3.0\n", 1, None),
        ("1.0,x\n3.0,4.0\n", 0, 1),
        ("1.0,\n3.0,\n", None, 1),
    ],
)
def test_csv_errors_carry_location(tmp_path, content, row, column):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(ParseError) as info:
        aio.read_toa(path)
    assert info.value.row == row and info.value.column == column


def test_json_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"toa": [[1.0, "a"]]}')
    with pytest.raises(ParseError) as info:
        aio.read_toa(path)
    assert (info.value.row, info.value.column) == (0, 1)
    path.write_text("[1, 2]")
    with pytest.raises(ParseError):
        aio.read_toa(path)
    with pytest.raises(ParseError):
        aio.read_toa(tmp_path / "absent.csv")


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_roundtrip_bit_exact(tmp_path, fmt):
    inst = generate(ScenarioConfig(noise_sigma=1e-4, missing_fraction=0.1, seed=3))
    path = tmp_path / f"toa.{fmt}"
    aio.write_toa(inst.toa, path)
    back = aio.read_toa(path)
    assert np.array_equal(back.mask, inst.toa.mask)
    assert np.array_equal(back.t, inst.toa.t, equal_nan=True)
    assert back.speed == inst.toa.speed


def test_full_csv_removes_stale_mask(tmp_path):
    path = tmp_path / "toa.csv"
    (tmp_path / "toa.mask.csv").write_text("0,0\n0,0\n")
    written = aio.write_toa(ToaMatrix([[1.0, 2.0], [3.0, 4.0]]), path)
    assert written == [path] and not (tmp_path / "toa.mask.csv").exists()


def test_truth_roundtrip(tmp_path):
    inst = generate(ScenarioConfig(m=5, k=6))
    aio.write_truth(tmp_path / "truth.json", inst.truth, inst.timing)
    points, receivers, timing = aio.read_truth(tmp_path / "truth.json")
    assert np.array_equal(points.coords, inst.truth.coords)
    assert np.array_equal(receivers, inst.truth.receivers)
    assert np.array_equal(timing.sigma, inst.timing.sigma)


def test_receiver_only_truth(tmp_path):
    path = tmp_path / "truth.json"
    path.write_text(json.dumps({"receivers": [[0, 1], [0, 0], [0, 0]]}))
    points, receivers, timing = aio.read_truth(path)
    assert points is None and timing is None and receivers.shape == (3, 2)


def test_side_tables(tmp_path):
    (tmp_path / "d.csv").write_text("0,1,0.5\n2,3,1.0\n")
    assert aio.read_distances(tmp_path / "d.csv") == [(0, 1, 0.5), (2, 3, 1.0)]
    (tmp_path / "b.json").write_text("[[0, 1, 0.1, 0.2]]")
    assert aio.read_bounds(tmp_path / "b.json") == [(0, 1, 0.1, 0.2)]
    (tmp_path / "v.csv").write_text("0.0,0.1,0.2\n")
    np.testing.assert_array_equal(aio.read_vector(tmp_path / "v.csv"), [0.0, 0.1, 0.2])
    (tmp_path / "bad.csv").write_text("0,1\n")
    with pytest.raises(ParseError):
        aio.read_distances(tmp_path / "bad.csv")
