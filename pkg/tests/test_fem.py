"""Element-kernel tests.

The mass-matrix expectations are frozen from independent integration routes:
a closed-form 1d integral on the unit interval and adaptive 2d quadrature on
the unit right triangle, both computed directly from the basis definition
without going through the barycentric moment formula used by the kernels.
"""

import numpy as np
import pytest
from scipy import integrate

from faultflow.fem import (
    rt0_eval_centroids,
    rt0_interpolate,
    rt0_local_div,
    rt0_local_mass,
    rt0_mass_matrix,
    rt0_div_matrix,
    trace_term_local,
)
from faultflow.mesh import MeshError, SimplicialMesh, build_two_block_geometry


def unit_interval_mesh():
    return SimplicialMesh(1, np.array([[0.0, 0.0], [1.0, 0.0]]),
                          np.array([[0, 1]]))


def unit_right_triangle_mesh():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return SimplicialMesh(2, verts, np.array([[0, 1, 2]]))


def basis_on_cell(mesh, cell):
    """The flux basis functions of one cell, from the dof normalization:
    zeta_i(x) = sign_i (x - v_opposite_i) / (dim * measure)."""
    verts = mesh.vertices[mesh.cells[cell]]
    signs = mesh.cell_face_signs[cell]
    meas = mesh.cell_measures[cell]

    def zeta(i):
        def f(x):
            return signs[i] * (np.asarray(x) - verts[i]) / (mesh.dim * meas)

        return f

    return [zeta(i) for i in range(mesh.dim + 1)]


# ------------------------------------------------------------------ #
#  oracle: closed-form 1d integration on the unit interval
# ------------------------------------------------------------------ #


def test_local_mass_unit_interval_against_quadrature():
    mesh = unit_interval_mesh()
    zetas = basis_on_cell(mesh, 0)
    expected = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            val, err = integrate.quad(
                lambda t, i=i, j=j: float(
                    zetas[i](np.array([t, 0.0, 0.0]))
                    @ zetas[j](np.array([t, 0.0, 0.0]))
                ),
                0.0,
                1.0,
                epsabs=1e-14,
            )
            expected[i, j] = val
    # frozen closed form: int x^2 = 1/3, int x (x - 1) = -1/6
    assert np.allclose(expected, [[1 / 3, -1 / 6], [-1 / 6, 1 / 3]],
                       atol=1e-12)
    got = rt0_local_mass(
        mesh.vertices[mesh.cells[0]], mesh.cell_face_signs[0], 1.0
    )
    assert np.allclose(got, expected, atol=1e-12)


def test_local_mass_interval_weight_scaling():
    mesh = unit_interval_mesh()
    base = rt0_local_mass(
        mesh.vertices[mesh.cells[0]], mesh.cell_face_signs[0], 1.0
    )
    scaled = rt0_local_mass(
        mesh.vertices[mesh.cells[0]], mesh.cell_face_signs[0], 7.5
    )
    assert np.allclose(scaled, 7.5 * base, atol=1e-12)


# ------------------------------------------------------------------ #
#  oracle: adaptive 2d quadrature on the unit right triangle
# ------------------------------------------------------------------ #


def test_local_mass_unit_triangle_against_quadrature():
    mesh = unit_right_triangle_mesh()
    zetas = basis_on_cell(mesh, 0)
    expected = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            val, err = integrate.dblquad(
                lambda y, x, i=i, j=j: float(
                    zetas[i](np.array([x, y, 0.0]))
                    @ zetas[j](np.array([x, y, 0.0]))
                ),
                0.0,
                1.0,
                0.0,
                lambda x: 1.0 - x,
                epsabs=1e-13,
            )
            expected[i, j] = val
    got = rt0_local_mass(
        mesh.vertices[mesh.cells[0]], mesh.cell_face_signs[0], np.eye(3)
    )
    assert np.abs(got - expected).max() < 1e-12


def test_local_mass_random_simplices_spd():
    rng = np.random.default_rng(20240915)
    count = 0
    while count < 1000:
        d = rng.integers(1, 4)
        verts = np.zeros((d + 1, 3))
        verts[:, :d] = rng.uniform(-1, 1, size=(d + 1, d))
        try:
            mesh = SimplicialMesh(d, verts, np.arange(d + 1)[None, :])
        except MeshError:
            continue  # rejected degenerate draw
        if mesh.cell_measures[0] < 1e-3:
            continue  # keep the sample well-shaped
        q = rng.uniform(-1, 1, size=(3, 3))
        W = q @ q.T + 0.5 * np.eye(3)
        M = rt0_local_mass(verts, mesh.cell_face_signs[0], W)
        assert np.abs(M - M.T).max() < 1e-13 * max(1.0, np.abs(M).max())
        assert np.linalg.eigvalsh(M).min() > 0
        count += 1


def test_local_mass_rejects_degenerate_and_bad_weight():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])  # collinear
    with pytest.raises(MeshError):
        rt0_local_mass(verts, np.ones(3), 1.0)
    mesh = unit_right_triangle_mesh()
    with pytest.raises(MeshError):
        rt0_local_mass(
            mesh.vertices[mesh.cells[0]], mesh.cell_face_signs[0], -1.0
        )
    with pytest.raises(MeshError):
        rt0_local_mass(
            mesh.vertices[mesh.cells[0]],
            mesh.cell_face_signs[0],
            np.diag([1.0, -2.0, 1.0]),
        )


# ------------------------------------------------------------------ #
#  divergence and trace terms
# ------------------------------------------------------------------ #


def test_local_div_is_orientation_signs():
    mesh = unit_right_triangle_mesh()
    signs = mesh.cell_face_signs[0]
    assert np.array_equal(rt0_local_div(signs), signs.astype(float))
    assert set(np.abs(rt0_local_div(signs))) == {1.0}


def test_div_of_interpolated_linear_field():
    # v = (x, y) has divergence 2; the discrete divergence integral over the
    # unit right triangle must equal 2 * measure = 1 exactly.
    mesh = unit_right_triangle_mesh()
    dofs = rt0_interpolate(mesh, lambda p: p * [1.0, 1.0, 0.0])
    div = rt0_div_matrix(mesh)
    total = (div.T @ dofs)[0]
    assert abs(total - 1.0) < 1e-12


def test_div_of_constant_field_is_zero():
    geom = build_two_block_geometry(3, 3)
    mesh = geom.matrix
    dofs = rt0_interpolate(mesh, np.array([0.3, -1.2, 0.0]))
    resid = np.abs(rt0_div_matrix(mesh).T @ dofs)
    assert resid.max() < 1e-12


def test_trace_term_values():
    assert trace_term_local(0.25, 1.0) == pytest.approx(4.0)
    assert trace_term_local(0.5, 0.0) == 0.0
    assert trace_term_local(0.1, 3.0) == pytest.approx(
        3.0 * trace_term_local(0.1, 1.0)
    )
    with pytest.raises(MeshError):
        trace_term_local(0.0, 1.0)
    with pytest.raises(MeshError):
        trace_term_local(1.0, -2.0)


# ------------------------------------------------------------------ #
#  mesh-level assembly consistency
# ------------------------------------------------------------------ #


def test_mass_matrix_matches_local_loop():
    geom = build_two_block_geometry(2, 3)
    for mesh in (geom.matrix, geom.damage["left"], geom.fault):
        weights = 2.5
        A = rt0_mass_matrix(mesh, weights).toarray()
        dense = np.zeros_like(A)
        for c in range(mesh.n_cells):
            M = rt0_local_mass(
                mesh.vertices[mesh.cells[c]],
                mesh.cell_face_signs[c],
                weights,
            )
            idx = mesh.cell_faces[c]
            dense[np.ix_(idx, idx)] += M
        assert np.abs(A - dense).max() < 1e-13


def test_mass_matrix_spd_on_two_block():
    mesh = build_two_block_geometry(3, 2).matrix
    A = rt0_mass_matrix(mesh, np.full(mesh.n_cells, 3.0)).toarray()
    assert np.abs(A - A.T).max() < 1e-13
    np.linalg.cholesky(A)  # raises if not positive definite


def test_constant_field_roundtrip_at_centroids():
    # interpolate a constant field into the flux dofs and evaluate it back
    geom = build_two_block_geometry(4, 3)
    vec = np.array([0.7, -0.2, 0.0])
    for mesh in (geom.matrix, geom.damage["right"], geom.fault):
        v = vec if mesh.dim == 2 else np.array([0.0, 0.4, 0.0])
        dofs = rt0_interpolate(mesh, v)
        vals = rt0_eval_centroids(mesh, dofs)
        if mesh.dim == 1:
            assert np.abs(vals - v).max() < 1e-12
        else:
            assert np.abs(vals - v).max() < 1e-12
