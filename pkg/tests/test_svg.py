import re

import numpy as np
import pytest

from dca.errors import IoError
from dca.svg import colormap, color_index, emit_svg, render_svg


def fills(text):
    return re.findall(r'<polygon [^>]*fill="(#[0-9a-f]{6})"', text)


def test_colormap_shape():
    c = colormap()
    assert c.shape == (256, 3) and c.dtype == np.uint8
    assert tuple(c[0]) == (68, 1, 84) and tuple(c[-1]) == (253, 231, 37)


def test_color_index():
    assert list(color_index([0, 0.5, 1], 0, 1)) == [0, 127, 255]
    assert list(color_index([2, 2], 2, 2)) == [0, 0]


def test_constant_single_color(disk_lattice):
    f = fills(render_svg(disk_lattice, np.full(disk_lattice.n_vertices, 4.0)))
    assert len(f) == disk_lattice.n_faces and set(f) == {"#440154"}


def test_tikhomirov_labels(tikhomirov):
    L, f = tikhomirov
    text = render_svg(L, f.real, labels=True)
    labels = re.findall(r"<text [^>]*>([^<]*)</text>", text)
    assert sorted(labels) == sorted(["2", "1", "1", "0", "0", "0", "0", "0", "0"])


def test_deterministic_and_errors(tmp_path, grid4, rng):
    u = rng.normal(size=grid4.n_vertices)
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_svg(grid4, u, p1, labels=True)
    emit_svg(grid4, u, p2, labels=True)
    assert p1.read_bytes() == p2.read_bytes()
    with pytest.raises(IoError):
        emit_svg(grid4, u, tmp_path / "missing" / "c.svg")
    with pytest.raises(ValueError):
        render_svg(grid4, u[:-1])
