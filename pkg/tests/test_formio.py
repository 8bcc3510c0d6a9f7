import struct

import numpy as np
import pytest

from hodgelab import Form, TorusGrid, random_form
from hodgelab.formio import FormFileError, form_from_bytes, form_to_bytes, read_form, write_form


@pytest.mark.parametrize("shape, lengths, deg", [
    ((8, 10), (1.0, 2.5), 1),
    ((8, 8, 12), (1.0, 1.0, 3.0), 2),
    ((16, 8), None, 0),
])
def test_round_trip(tmp_path, shape, lengths, deg):
    g = TorusGrid(shape, lengths)
    w = random_form(g, deg, np.random.default_rng(0), 1)
    path = write_form(tmp_path / "w.hfrm", w)
    back = read_form(path)
    assert back.grid == g and back.degree == deg
    assert np.array_equal(back.data, w.data)


def test_header_layout():
    g = TorusGrid((8, 10), (1.0, 2.0))
    w = Form.from_components(g, 1, {(2,): 7.0})
    buf = form_to_bytes(w)
    assert buf[:4] == b"HFRM"
    assert struct.unpack_from("<5I", buf, 4) == (1, 2, 1, 8, 10)
    assert struct.unpack_from("<2d", buf, 24) == (1.0, 2.0)
    body = np.frombuffer(buf, "<f8", offset=40)
    assert body.size == 2 * 80
    assert np.all(body[:80] == 0) and np.all(body[80:] == 7.0)


@pytest.mark.parametrize("mutate", [
    lambda b: b"XFRM" + b[4:],
    lambda b: b[:4] + struct.pack("<I", 2) + b[8:],
    lambda b: b[:-8],
    lambda b: b[:10],
])
def test_corrupt_files(mutate):
    buf = form_to_bytes(Form.zeros(TorusGrid.cube(2, 8), 1))
    with pytest.raises(FormFileError):
        form_from_bytes(mutate(buf))


def test_no_temp_files_left(tmp_path):
    write_form(tmp_path / "a.hfrm", Form.zeros(TorusGrid.cube(2, 8), 0))
    assert [p.name for p in tmp_path.iterdir()] == ["a.hfrm"]
