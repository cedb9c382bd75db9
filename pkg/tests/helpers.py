"""Shared fixtures-by-hand for the solver and acceptance tests.

The series problem drives uniform flow across both blocks, both interfaces
and the fault core; its exact solution is one resistance chain.  The patch
problem imposes a pressure linear along the fault, which every domain must
reproduce without any exchange flow.  Both are closed forms the discrete
scheme reproduces exactly on the aligned two-block grids.
"""

import numpy as np

from faultflow.assembly import BoundaryConditions, CoefficientSet
from faultflow.mesh import build_two_block_geometry

SIDES = ("left", "right")


def series_setup(n, interface_resist, exchange_resist,
                 matrix_resist=1.0, damage_resist=2.0, fault_resist=5.0):
    """Two blocks with uniform coefficients, pressure 0 on the far left
    boundary and 1 on the far right; every other external face keeps the
    default zero-flux condition."""
    geometry = build_two_block_geometry(n, n)
    coeff = CoefficientSet.for_geometry(
        geometry,
        matrix_resist=matrix_resist,
        damage_resist=damage_resist,
        fault_resist=fault_resist,
        matrix_damage_resist=interface_resist,
        damage_fault_resist=exchange_resist,
    )
    bc = BoundaryConditions()
    for f in geometry.matrix.faces_with_tag("left"):
        bc.pressure[("matrix", int(f))] = 0.0
    for f in geometry.matrix.faces_with_tag("right"):
        bc.pressure[("matrix", int(f))] = 1.0
    return geometry, coeff, bc


def series_flux(interface_resist, exchange_resist, matrix_resist=1.0):
    """Signed horizontal Darcy velocity of the series problem: two matrix
    legs, two interface resistances and two exchange resistances in a
    chain, driven by a unit pressure drop."""
    total = 2.0 * (matrix_resist + interface_resist + exchange_resist)
    return -1.0 / total


def series_solution_vector(system, interface_resist, exchange_resist):
    """The exact solution of ``series_setup`` written into the unknown
    layout of ``system`` (matrix resistance 1 assumed)."""
    a, b = interface_resist, exchange_resist
    u = series_flux(a, b)
    geometry = system.geometry
    x = np.zeros(system.n_dofs)

    matrix = geometry.matrix
    x[system.offsets["matrix_flux"]] = (
        u * matrix.face_normals[:, 0] * matrix.face_measures
    )
    cx = matrix.cell_centroids()[:, 0]
    x[system.offsets["matrix_pressure"]] = np.where(
        cx < 1.0, -u * cx, -u * (cx - 1.0) - u * (1 + 2 * a + 2 * b)
    )

    # layers carry no tangential flow; their pressures are flat per side
    p_damage = {"left": -u * (1 + a), "right": -u * (1 + a + 2 * b)}
    dp = np.empty(
        system.offsets["damage_pressure"].stop
        - system.offsets["damage_pressure"].start
    )
    for side in SIDES:
        dp[system.damage_cell_split[side]] = p_damage[side]
    x[system.offsets["damage_pressure"]] = dp
    x[system.offsets["fault_pressure"]] = -u * (1 + a + b)

    n_fault = geometry.fault.n_cells
    x[system.offsets["exchange_flux"]] = np.concatenate(
        [np.full(n_fault, u), np.full(n_fault, -u)]
    )
    return x


def patch_setup(n_x, n_y, matrix_resist=2.0, damage_resist=None,
                fault_resist=7.0, interface_resist=0.25,
                exchange_resist=11.0):
    """Pressure equal to the fault-parallel coordinate on every external
    face of every domain.  The exact solution is p = y everywhere with a
    uniform fault-parallel velocity per domain and no exchange flow."""
    geometry = build_two_block_geometry(n_x, n_y)
    coeff = CoefficientSet.for_geometry(
        geometry,
        matrix_resist=matrix_resist,
        damage_resist=damage_resist or {"left": 3.0, "right": 5.0},
        fault_resist=fault_resist,
        matrix_damage_resist=interface_resist,
        damage_fault_resist=exchange_resist,
    )
    bc = BoundaryConditions()
    plane = {
        int(f) for s in SIDES for f in geometry.matrix_damage[s].pairs[:, 0]
    }
    mids = geometry.matrix.face_centroids()
    for f in geometry.matrix.boundary_faces():
        if int(f) not in plane:
            bc.pressure[("matrix", int(f))] = float(mids[f, 1])
    for dom, mesh in (
        ("damage_left", geometry.damage["left"]),
        ("damage_right", geometry.damage["right"]),
        ("fault", geometry.fault),
    ):
        tips = mesh.face_centroids()
        for f in mesh.boundary_faces():
            bc.pressure[(dom, int(f))] = float(tips[f, 1])
    return geometry, coeff, bc
