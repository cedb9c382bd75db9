"""Solver tests: exact closed forms, route equivalence, diagnostics.

The pressure-reduced operator is checked against a dense reduction built
with plain numpy solves from the same blocks, and both solve routes are
checked against each other on structured and randomized problems.
"""

import numpy as np
import pytest

from faultflow.assembly import (
    BoundaryConditions,
    CoefficientSet,
    SourceField,
    assemble,
    coefficients_from_mode,
)
from faultflow.linsolve import (
    MixedSolution,
    SolverError,
    build_pressure_schur,
    cell_velocities,
    conservation_residuals,
    global_balance,
    interface_law_residuals,
    solve_saddle,
    solve_schur,
)
from faultflow.mesh import build_two_block_geometry
from helpers import (
    SIDES,
    patch_setup,
    series_flux,
    series_setup,
    series_solution_vector,
)


# ---------------------------------------------------------------------------
# closed-form solutions
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (10.0, 0.1), (1e4, 1e4)])
def test_series_flux_matches_resistance_chain(a, b):
    geometry, coeff, bc = series_setup(4, a, b)
    system = assemble(geometry, coeff, bc)
    solution = solve_saddle(system)

    expected = series_flux(a, b)
    # every matrix face sees the same horizontal velocity
    dofs = geometry.matrix.face_normals[:, 0] * geometry.matrix.face_measures
    err = np.abs(solution.matrix_flux - expected * dofs)
    assert np.max(err) <= 1e-8 * abs(expected)

    exact = series_solution_vector(system, a, b)
    assert np.max(np.abs(solution.vector - exact)) <= 1e-8


def test_patch_linear_pressure_reproduced_exactly():
    geometry, coeff, bc = patch_setup(5, 4)
    system = assemble(geometry, coeff, bc)
    solution = solve_saddle(system)

    assert np.max(
        np.abs(solution.matrix_pressure - geometry.matrix.cell_centroids()[:, 1])
    ) <= 1e-10
    for side in SIDES:
        mids = geometry.damage[side].cell_centroids()[:, 1]
        assert np.max(np.abs(solution.damage_pressure[side] - mids)) <= 1e-10
        assert np.max(np.abs(solution.exchange_flux[side])) <= 1e-10
    assert np.max(
        np.abs(solution.fault_pressure - geometry.fault.cell_centroids()[:, 1])
    ) <= 1e-10

    # uniform fault-parallel velocity, scaled by each domain's resistance
    vels = cell_velocities(system, solution)
    assert np.max(np.abs(vels["matrix"] - [0.0, -1.0 / 2.0, 0.0])) <= 1e-10
    assert np.max(np.abs(vels["damage_left"] - [0.0, -1.0 / 3.0, 0.0])) <= 1e-10
    assert np.max(np.abs(vels["damage_right"] - [0.0, -1.0 / 5.0, 0.0])) <= 1e-10
    assert np.max(np.abs(vels["fault"] - [0.0, -1.0 / 7.0, 0.0])) <= 1e-10


# ---------------------------------------------------------------------------
# the pressure reduction
# ---------------------------------------------------------------------------


def dense_reduction(system):
    """Dense pressure reduction computed directly with numpy solves."""
    B = {k: v.toarray() for k, v in system.blocks.items()}
    inv = {
        "matrix": np.linalg.inv(B["A_matrix"]),
        "damage": np.linalg.inv(B["A_damage"]),
        "fault": np.linalg.inv(B["A_fault"]),
        "exchange": np.linalg.inv(B["A_exchange"]),
    }
    S_mm = B["B_matrix"].T @ inv["matrix"] @ B["B_matrix"]
    C_md = B["B_matrix"].T @ inv["matrix"] @ B["G_matrix"]
    S_dd = (
        B["G_matrix"].T @ inv["matrix"] @ B["G_matrix"]
        + B["B_damage"].T @ inv["damage"] @ B["B_damage"]
        + B["G_damage"] @ inv["exchange"] @ B["G_damage"].T
    )
    C_df = B["G_damage"] @ inv["exchange"] @ B["G_fault"].T
    S_ff = (
        B["B_fault"].T @ inv["fault"] @ B["B_fault"]
        + B["G_fault"] @ inv["exchange"] @ B["G_fault"].T
    )
    n_m, n_d, n_f = S_mm.shape[0], S_dd.shape[0], S_ff.shape[0]
    S = np.zeros((n_m + n_d + n_f, n_m + n_d + n_f))
    S[:n_m, :n_m] = S_mm
    S[:n_m, n_m : n_m + n_d] = C_md
    S[n_m : n_m + n_d, :n_m] = C_md.T
    S[n_m : n_m + n_d, n_m : n_m + n_d] = S_dd
    S[n_m : n_m + n_d, n_m + n_d :] = C_df
    S[n_m + n_d :, n_m : n_m + n_d] = C_df.T
    S[n_m + n_d :, n_m + n_d :] = S_ff

    parts = system.rhs_parts
    r = np.concatenate(
        [
            B["B_matrix"].T @ inv["matrix"] @ parts["matrix_flux"]
            - parts["matrix_pressure"],
            B["G_matrix"].T @ inv["matrix"] @ parts["matrix_flux"]
            + B["B_damage"].T @ inv["damage"] @ parts["damage_flux"]
            - parts["damage_pressure"],
            B["B_fault"].T @ inv["fault"] @ parts["fault_flux"]
            - parts["fault_pressure"],
        ]
    )
    return S, r


def interface_case(n=6):
    """A fault-crossing flow with heterogeneous coefficients, used
    wherever a representative solved system is needed."""
    geometry = build_two_block_geometry(n, n)
    y = geometry.fault.cell_centroids()[:, 1]
    k_fault = np.where((y > 0.25) & (y < 0.75), 2e-3, 1.0)
    coeff = coefficients_from_mode(
        geometry,
        {"matrix": 1.0, "damage": 100.0, "fault": k_fault},
        "literal",
        eps_mu=1e-2,
        eps_gamma=1e-2,
    )
    bc = BoundaryConditions()
    for f in geometry.matrix.faces_with_tag("left"):
        bc.pressure[("matrix", int(f))] = 0.0
    for f in geometry.matrix.faces_with_tag("right"):
        bc.pressure[("matrix", int(f))] = 1.0
    return assemble(geometry, coeff, bc)


def test_reduced_operator_matches_dense_reduction():
    geometry, coeff, bc = series_setup(2, 3.0, 0.5)
    system = assemble(geometry, coeff, bc, SourceField(matrix=0.4, fault=1.5))
    schur = build_pressure_schur(system)
    S, r = dense_reduction(system)
    assert np.max(np.abs(schur.to_dense() - S)) <= 1e-11
    assert np.max(np.abs(schur.rhs() - r)) <= 1e-12
    # positive definite: a Cholesky factorization must go through
    np.linalg.cholesky(S)

    p = np.linalg.solve(S, r)
    direct = solve_saddle(system)
    x = schur.expand(p)
    assert np.max(np.abs(x - direct.vector)) <= 1e-9


def test_schur_and_saddle_agree_on_heterogeneous_case():
    system = interface_case()
    direct = solve_saddle(system)
    reduced, report = solve_schur(system)
    assert report["iterations"] > 0
    scale = np.max(np.abs(direct.matrix_pressure))
    assert np.max(
        np.abs(direct.matrix_pressure - reduced.matrix_pressure)
    ) <= 1e-8 * scale
    assert np.max(np.abs(direct.vector - reduced.vector)) <= 1e-7 * max(
        1.0, scale
    )


def test_schur_and_saddle_agree_on_random_problems():
    rng = np.random.default_rng(20241007)
    for trial in range(20):
        n_x, n_y = rng.integers(1, 4, size=2)
        geometry = build_two_block_geometry(int(n_x), int(n_y))

        def draw(n):
            return 10.0 ** rng.uniform(-3, 3, size=n)

        coeff = CoefficientSet.for_geometry(
            geometry,
            matrix_resist=draw(geometry.matrix.n_cells),
            damage_resist={
                s: draw(geometry.damage[s].n_cells) for s in SIDES
            },
            fault_resist=draw(geometry.fault.n_cells),
            matrix_damage_resist={
                s: draw(len(geometry.matrix_damage[s])) for s in SIDES
            },
            damage_fault_resist={
                s: draw(geometry.fault.n_cells) for s in SIDES
            },
        )
        bc = BoundaryConditions()
        plane = {
            int(f)
            for s in SIDES
            for f in geometry.matrix_damage[s].pairs[:, 0]
        }
        anchored = False
        for f in geometry.matrix.boundary_faces():
            if int(f) in plane:
                continue
            if rng.random() < 0.5:
                bc.pressure[("matrix", int(f))] = float(rng.normal())
                anchored = True
            elif rng.random() < 0.5:
                bc.flux[("matrix", int(f))] = float(rng.normal())
        if not anchored:
            f = next(
                int(f)
                for f in geometry.matrix.boundary_faces()
                if int(f) not in plane
            )
            bc.pressure.pop(("matrix", f), None)
            bc.flux.pop(("matrix", f), None)
            bc.pressure[("matrix", f)] = 1.0
        sources = SourceField(
            matrix=float(rng.normal()),
            damage={s: float(rng.normal()) for s in SIDES},
            fault=float(rng.normal()),
        )
        system = assemble(geometry, coeff, bc, sources)
        direct = solve_saddle(system)
        reduced, _ = solve_schur(system, rtol=1e-13)
        scale = max(1.0, np.max(np.abs(direct.vector)))
        assert (
            np.max(np.abs(direct.vector - reduced.vector)) <= 1e-7 * scale
        ), f"trial {trial}"


def test_one_sided_damage_asymmetry():
    geometry = build_two_block_geometry(6, 6)
    y = geometry.fault.cell_centroids()[:, 1]
    k_variable = np.where((y > 0.25) & (y < 0.75), 2e-3, 1.0)
    coeff = coefficients_from_mode(
        geometry,
        {
            "matrix": 1.0,
            "damage": {"left": k_variable, "right": 100.0},
            "fault": k_variable,
        },
        "literal",
        eps_mu=1e-2,
        eps_gamma=1e-2,
    )
    bc = BoundaryConditions()
    for f in geometry.matrix.faces_with_tag("left"):
        bc.pressure[("matrix", int(f))] = 0.0
    for f in geometry.matrix.faces_with_tag("right"):
        bc.pressure[("matrix", int(f))] = 1.0
    system = assemble(geometry, coeff, bc)
    direct = solve_saddle(system)
    reduced, _ = solve_schur(system)
    assert np.max(np.abs(direct.vector - reduced.vector)) <= 1e-7
    # the two layers genuinely differ, far beyond solver noise
    gap = np.max(
        np.abs(
            direct.damage_pressure["left"] - direct.damage_pressure["right"]
        )
    )
    assert gap > 1e-5


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def test_conservation_and_balance_on_solved_system():
    system = interface_case()
    solution = solve_saddle(system)
    residuals = conservation_residuals(system, solution)
    for name in ("matrix", "damage", "fault"):
        assert np.max(np.abs(residuals[name])) <= 1e-10
    assert abs(global_balance(system, solution)) <= 1e-9

    # with sources: injected volume must show up in the budget
    geometry, coeff, bc = series_setup(3, 1.0, 1.0)
    system = assemble(geometry, coeff, bc, SourceField(fault=2.0))
    solution = solve_saddle(system)
    assert abs(global_balance(system, solution)) <= 1e-9
    residuals = conservation_residuals(system, solution)
    for name in ("matrix", "damage", "fault"):
        assert np.max(np.abs(residuals[name])) <= 1e-10


def test_interface_laws_hold_on_solved_system():
    system = interface_case()
    solution = solve_saddle(system)
    laws = interface_law_residuals(system, solution)
    for side in SIDES:
        assert np.max(np.abs(laws["matrix_damage"][side])) <= 1e-9
        assert np.max(np.abs(laws["damage_fault"][side])) <= 1e-9

    # cross-check the exchange law against a by-hand evaluation
    coeff = system.coefficients
    for side in SIDES:
        dmap = system.geometry.damage_fault[side]
        by_hand = (
            coeff.damage_fault_resist[side][dmap.pairs[:, 1]]
            * solution.exchange_flux[side][dmap.pairs[:, 1]]
            + solution.fault_pressure[dmap.pairs[:, 1]]
            - solution.damage_pressure[side][dmap.pairs[:, 0]]
        )
        assert np.max(np.abs(laws["damage_fault"][side] - by_hand)) < 1e-14


def test_velocity_reconstruction_shapes():
    system = interface_case(3)
    solution = solve_saddle(system)
    vels = cell_velocities(system, solution)
    assert vels["matrix"].shape == (system.geometry.matrix.n_cells, 3)
    assert vels["fault"].shape == (system.geometry.fault.n_cells, 3)
    for side in SIDES:
        assert vels[f"damage_{side}"].shape == (
            system.geometry.damage[side].n_cells,
            3,
        )
    # flow enters at the high-pressure right boundary and moves left
    assert np.mean(vels["matrix"][:, 0]) < 0


# ---------------------------------------------------------------------------
# failure modes
# ---------------------------------------------------------------------------


def test_unanchored_system_is_reported_singular():
    geometry = build_two_block_geometry(2, 2)
    coeff = CoefficientSet.for_geometry(geometry, 1.0, 1.0, 1.0, 1.0, 1.0)
    system = assemble(
        geometry, coeff, BoundaryConditions(), SourceField(fault=1.0)
    )
    with pytest.raises(SolverError, match="no boundary pressure"):
        solve_saddle(system)
    with pytest.raises(SolverError, match="no boundary pressure"):
        solve_schur(system, maxiter=200)


def test_zero_data_yields_zero_solution():
    geometry = build_two_block_geometry(3, 3)
    coeff = CoefficientSet.for_geometry(geometry, 1.0, 1.0, 1.0, 1.0, 1.0)
    bc = BoundaryConditions()
    for f in geometry.matrix.faces_with_tag("left"):
        bc.pressure[("matrix", int(f))] = 0.0
    system = assemble(geometry, coeff, bc)
    schur = build_pressure_schur(system)
    assert np.max(np.abs(schur.rhs())) == 0.0
    solution, report = solve_schur(system)
    assert report["iterations"] == 0
    assert np.max(np.abs(solution.vector)) == 0.0
    assert isinstance(solution, MixedSolution)
