import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vdns.mesh import (boundary_classification, build_unit_square_mesh, mesh_from_arrays,
                       read_vtk_mesh, write_vtk_mesh)


@given(st.integers(min_value=1, max_value=24))
@settings(max_examples=25, deadline=None)
def test_counts_and_euler_relation(n):
    m = build_unit_square_mesh(n)
    assert m.n_vertices == (n + 1) ** 2
    assert m.n_triangles == 2 * n * n
    assert m.n_edges == 3 * n * n + 2 * n
    # V - E + F = 1 for a disc (outer face excluded)
    assert m.n_vertices - m.n_edges + m.n_triangles == 1


@given(st.integers(min_value=1, max_value=16))
@settings(max_examples=16, deadline=None)
def test_areas_positive_and_sum_to_one(n):
    areas = build_unit_square_mesh(n).signed_areas()
    assert np.all(areas > 0)
    assert areas.sum() == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(areas, 0.5 / n ** 2, rtol=1e-13)


def test_boundary_flags_n4():
    m = build_unit_square_mesh(4)
    vflags, eflags = boundary_classification(m)
    assert vflags.sum() == 16 and (~vflags).sum() == 9
    assert eflags.sum() == 16
    tv, te = boundary_classification(m, geometric=False)
    np.testing.assert_array_equal(tv, vflags)
    np.testing.assert_array_equal(te, eflags)


def test_h_is_longest_edge():
    assert build_unit_square_mesh(8).h == pytest.approx(np.sqrt(2) / 8, rel=1e-15)


def test_edges_are_unique_and_opposite_local_vertices():
    m = build_unit_square_mesh(3)
    assert len({tuple(e) for e in m.edges}) == m.n_edges
    for t, tri in enumerate(m.triangles):
        for k in range(3):
            e = set(m.edges[m.triangle_edges[t, k]])
            assert tri[k] not in e
            assert e == set(tri) - {tri[k]}


@pytest.mark.parametrize("n", [0, -2, 2.5, True])
def test_invalid_mesh_parameter(n):
    with pytest.raises(ValueError):
        build_unit_square_mesh(n)


def test_clockwise_triangles_are_flipped_and_degenerate_rejected():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    m = mesh_from_arrays(verts, np.array([[0, 2, 1]]))
    assert m.signed_areas()[0] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        mesh_from_arrays(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), np.array([[0, 1, 2]]))


def test_vtk_round_trip(tmp_path):
    m = build_unit_square_mesh(3)
    path = write_vtk_mesh(m, tmp_path / "m.vtk", point_data={"x": m.vertices[:, 0],
                                                               "v": m.vertices})
    back = read_vtk_mesh(path)
    np.testing.assert_array_equal(back.vertices, m.vertices)
    np.testing.assert_array_equal(back.triangles, m.triangles)
    text = path.read_text()
    assert "CELL_TYPES 18" in text and "SCALARS x double 1" in text


def test_vtk_bad_point_data(tmp_path):
    m = build_unit_square_mesh(2)
    with pytest.raises(ValueError):
        write_vtk_mesh(m, tmp_path / "m.vtk", point_data={"bad": np.zeros(3)})
