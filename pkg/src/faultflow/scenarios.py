"""Scenario configuration and the run/sweep pipelines.

A scenario lives in a small text file, one directive per line:

    name case_i
    geometry two_block        # or: geometry mesh some_file.msh
    nx 53
    ny 40
    eps_mu 1e-2
    eps_gamma 1e-2
    mode permeability         # or literal
    solver saddle             # or schur
    coeff matrix 1.0
    coeff damage 100.0
    coeff fault 2e-3 where 0.25 <= y <= 0.75
    bc pressure 0 on matrix:left
    bc pressure 1 on matrix:right
    bc pressure 1 on layers:y1
    bc flux 0 on fault:y0
    bc pressure 4 on matrix where x <= 0 and z > 90

``coeff`` lines assign a conductivity table entry to a region (later lines
override earlier ones where their predicate matches); ``mode`` decides how
the table becomes resistances.  ``bc`` lines address external boundary
faces of a domain either by mesh tag or by a centroid predicate; the
domains ``damage`` and ``layers`` fan out to both damage sides (plus the
fault for ``layers``).  Unaddressed external faces are zero-flux.
Predicates chain comparisons on x, y, z joined by ``and``.

``run_scenario`` solves one configuration and, given an output directory,
writes one VTK file per domain plus a key,value summary.csv whose floats
are full-precision reprs (so reruns are byte-identical).  ``sweep``
re-solves a two-block scenario across layer thicknesses against the
equi-dimensional reference and tabulates the model-error brackets.
"""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .assembly import (
    SIDES,
    BlockSystem,
    BoundaryConditions,
    CoefficientSet,
    assemble,
    coefficients_from_mode,
)
from .equidim import solve_equidim
from .linsolve import (
    MixedSolution,
    cell_velocities,
    conservation_residuals,
    global_balance,
    interface_law_residuals,
    solve_saddle,
    solve_schur,
)
from .mesh import (
    MixedDimGeometry,
    build_layered_equidim_mesh,
    build_two_block_geometry,
    import_mesh,
)
from .model_error import error_bounds
from .vtk_io import write_vtk

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "load_config",
    "bundled_config",
    "build_geometry",
    "resolve_coefficients",
    "resolve_boundary_conditions",
    "RunResult",
    "run_scenario",
    "equidim_reference",
    "sweep",
]

_COEFF_REGIONS = ("matrix", "damage", "damage_left", "damage_right", "fault")
_BC_DOMAINS = _COEFF_REGIONS + ("layers",)
_MATRIX_TAGS = ("left", "right", "top", "bottom", "boundary")
_LAYER_TAGS = ("y0", "y1", "boundary")


class ConfigError(Exception):
    """A scenario file could not be understood."""


# ---------------------------------------------------------------------------
# predicates
# ---------------------------------------------------------------------------

_OPS = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
}
_AXES = {"x": 0, "y": 1, "z": 2}
_TOKEN = re.compile(r"<=|>=|<|>|[^\s<>]+")


@dataclass(frozen=True)
class Predicate:
    """Conjunction of comparison chains over point coordinates."""

    chains: tuple
    text: str

    def mask(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.ones(len(pts), dtype=bool)
        for chain in self.chains:
            for lhs, op, rhs in chain:
                left = pts[:, _AXES[lhs]] if lhs in _AXES else float(lhs)
                right = pts[:, _AXES[rhs]] if rhs in _AXES else float(rhs)
                out &= _OPS[op](left, right)
        return out

    def __str__(self) -> str:
        return self.text


def _parse_predicate(text: str, line: int) -> Predicate:
    chains = []
    for clause in re.split(r"\band\b", text):
        clause = clause.strip()
        if not clause:
            raise ConfigError(f"line {line}: empty clause in {text!r}")
        tokens = _TOKEN.findall(clause)
        if len(tokens) < 3 or len(tokens) % 2 == 0:
            raise ConfigError(
                f"line {line}: cannot read comparison {clause!r}"
            )
        terms, ops = tokens[0::2], tokens[1::2]
        if any(op not in _OPS for op in ops):
            raise ConfigError(
                f"line {line}: unknown operator in {clause!r}"
            )
        for term in terms:
            if term in _AXES:
                continue
            try:
                float(term)
            except ValueError:
                raise ConfigError(
                    f"line {line}: {term!r} is neither a coordinate "
                    "nor a number"
                ) from None
        if not any(t in _AXES for t in terms):
            raise ConfigError(
                f"line {line}: comparison {clause!r} uses no coordinate"
            )
        chains.append(
            tuple(
                (terms[i], ops[i], terms[i + 1]) for i in range(len(ops))
            )
        )
    return Predicate(chains=tuple(chains), text=text.strip())


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class CoeffRule:
    region: str
    value: float
    predicate: Predicate | None
    line: int


@dataclass
class BcRule:
    kind: str
    value: float
    domain: str
    tag: str | None
    predicate: Predicate | None
    line: int


@dataclass
class RunConfig:
    name: str
    geometry_kind: str = "two_block"
    nx: int | None = None
    ny: int | None = None
    mesh_path: str | None = None
    eps_mu: float = 1e-2
    eps_gamma: float = 1e-2
    mode: str = "permeability"
    solver: str = "saddle"
    output_dir: str | None = None
    base_dir: Path = field(default_factory=Path)
    coeff_rules: list[CoeffRule] = field(default_factory=list)
    bc_rules: list[BcRule] = field(default_factory=list)


def _number(token: str, line: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"line {line}: {what} {token!r} is not a number") from None


def parse_config(text: str, name: str = "scenario",
                 base_dir: Path | None = None) -> RunConfig:
    config = RunConfig(name=name, base_dir=base_dir or Path("."))
    saw_geometry = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split(None, 1)
        body = rest[0] if rest else ""

        if head == "coeff":
            parts = body.split(None, 2)
            if len(parts) < 2:
                raise ConfigError(
                    f"line {lineno}: coeff needs a region and a value"
                )
            region, value = parts[0], _number(parts[1], lineno, "value")
            if region not in _COEFF_REGIONS:
                raise ConfigError(
                    f"line {lineno}: unknown region {region!r} "
                    f"(one of {', '.join(_COEFF_REGIONS)})"
                )
            predicate = None
            if len(parts) == 3:
                where = parts[2]
                if not where.startswith("where"):
                    raise ConfigError(
                        f"line {lineno}: expected 'where', got {where!r}"
                    )
                predicate = _parse_predicate(where[5:], lineno)
            config.coeff_rules.append(
                CoeffRule(region, value, predicate, lineno)
            )

        elif head == "bc":
            m = re.match(
                r"(pressure|flux)\s+(\S+)\s+on\s+(\S+?)(?:\s+where\s+(.+))?$",
                body,
            )
            if not m:
                raise ConfigError(
                    f"line {lineno}: expected "
                    "'bc pressure|flux <value> on <domain>[:<tag>]' or "
                    "'... on <domain> where <predicate>'"
                )
            kind, value_token, target, where = m.groups()
            value = _number(value_token, lineno, "value")
            domain, _, tag = target.partition(":")
            if domain not in _BC_DOMAINS:
                raise ConfigError(
                    f"line {lineno}: unknown domain {domain!r} "
                    f"(one of {', '.join(_BC_DOMAINS)})"
                )
            tag = tag or None
            if tag and where:
                raise ConfigError(
                    f"line {lineno}: give either a tag or a predicate"
                )
            if tag:
                allowed = (
                    _MATRIX_TAGS if domain == "matrix" else _LAYER_TAGS
                )
                if tag not in allowed:
                    raise ConfigError(
                        f"line {lineno}: tag {tag!r} is not valid for "
                        f"{domain} (one of {', '.join(allowed)})"
                    )
            predicate = (
                _parse_predicate(where, lineno) if where else None
            )
            config.bc_rules.append(
                BcRule(kind, value, domain, tag, predicate, lineno)
            )

        elif head == "geometry":
            parts = body.split(None, 1)
            if not parts:
                raise ConfigError(f"line {lineno}: geometry needs a kind")
            if parts[0] == "two_block":
                config.geometry_kind = "two_block"
            elif parts[0] == "mesh":
                if len(parts) != 2:
                    raise ConfigError(
                        f"line {lineno}: geometry mesh needs a file path"
                    )
                config.geometry_kind = "mesh"
                config.mesh_path = parts[1].strip()
            else:
                raise ConfigError(
                    f"line {lineno}: unknown geometry {parts[0]!r}"
                )
            saw_geometry = True

        elif head in ("nx", "ny"):
            value = _number(body, lineno, head)
            if value != int(value) or value < 1:
                raise ConfigError(
                    f"line {lineno}: {head} must be a positive integer"
                )
            setattr(config, head, int(value))

        elif head in ("eps_mu", "eps_gamma"):
            value = _number(body, lineno, head)
            if value <= 0:
                raise ConfigError(f"line {lineno}: {head} must be positive")
            setattr(config, head, value)

        elif head == "mode":
            if body not in ("literal", "permeability"):
                raise ConfigError(
                    f"line {lineno}: mode must be literal or permeability"
                )
            config.mode = body

        elif head == "solver":
            if body not in ("saddle", "schur"):
                raise ConfigError(
                    f"line {lineno}: solver must be saddle or schur"
                )
            config.solver = body

        elif head == "name":
            if not body:
                raise ConfigError(f"line {lineno}: name needs a value")
            config.name = body

        elif head == "output_dir":
            config.output_dir = body

        else:
            raise ConfigError(
                f"line {lineno}: unknown directive {head!r}"
            )

    if not saw_geometry:
        raise ConfigError("no geometry directive in the scenario")
    if config.geometry_kind == "two_block" and (
        config.nx is None or config.ny is None
    ):
        raise ConfigError("two_block geometry needs nx and ny")
    if not config.coeff_rules:
        raise ConfigError("no coeff directives in the scenario")
    return config


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, name=path.stem, base_dir=path.parent)


def bundled_config(name: str) -> Path:
    """Path of a scenario shipped with the package (case_i, case_ii,
    case_iii, fault3d)."""
    root = resources.files("faultflow") / "data" / f"{name}.cfg"
    path = Path(str(root))
    if not path.exists():
        raise ConfigError(f"no bundled scenario named {name!r}")
    return path


# ---------------------------------------------------------------------------
# geometry / coefficients / boundary conditions
# ---------------------------------------------------------------------------


def build_geometry(config: RunConfig) -> MixedDimGeometry:
    if config.geometry_kind == "two_block":
        return build_two_block_geometry(config.nx, config.ny)
    return import_mesh(config.base_dir / config.mesh_path)


def _coeff_targets(region: str):
    if region == "matrix":
        return [("matrix", None)]
    if region == "fault":
        return [("fault", None)]
    if region == "damage":
        return [("damage", s) for s in SIDES]
    return [("damage", region.split("_", 1)[1])]


def resolve_coefficients(
    config: RunConfig, geometry: MixedDimGeometry
) -> CoefficientSet:
    tables = {
        "matrix": np.full(geometry.matrix.n_cells, np.nan),
        "fault": np.full(geometry.fault.n_cells, np.nan),
        "damage": {
            s: np.full(geometry.damage[s].n_cells, np.nan) for s in SIDES
        },
    }
    centroids = {
        "matrix": geometry.matrix.cell_centroids(),
        "fault": geometry.fault.cell_centroids(),
        "damage": {
            s: geometry.damage[s].cell_centroids() for s in SIDES
        },
    }
    for rule in config.coeff_rules:
        for kind, side in _coeff_targets(rule.region):
            table = tables[kind][side] if side else tables[kind]
            points = (
                centroids[kind][side] if side else centroids[kind]
            )
            mask = (
                rule.predicate.mask(points)
                if rule.predicate
                else np.ones(len(table), dtype=bool)
            )
            table[mask] = rule.value
    for kind in ("matrix", "fault"):
        if np.any(np.isnan(tables[kind])):
            raise ConfigError(
                f"some {kind} cells have no coefficient; add a coeff "
                f"{kind} line without a predicate first"
            )
    for s in SIDES:
        if np.any(np.isnan(tables["damage"][s])):
            raise ConfigError(
                f"some damage_{s} cells have no coefficient; add a "
                "coeff damage line without a predicate first"
            )
    return coefficients_from_mode(
        geometry,
        {
            "matrix": tables["matrix"],
            "damage": tables["damage"],
            "fault": tables["fault"],
        },
        config.mode,
        eps_mu=config.eps_mu,
        eps_gamma=config.eps_gamma,
    )


def _bc_targets(domain: str):
    if domain == "matrix":
        return ["matrix"]
    if domain == "fault":
        return ["fault"]
    if domain == "damage":
        return [f"damage_{s}" for s in SIDES]
    if domain == "layers":
        return [f"damage_{s}" for s in SIDES] + ["fault"]
    return [domain]


def resolve_boundary_conditions(
    config: RunConfig, geometry: MixedDimGeometry
) -> BoundaryConditions:
    meshes = {
        "matrix": geometry.matrix,
        "damage_left": geometry.damage["left"],
        "damage_right": geometry.damage["right"],
        "fault": geometry.fault,
    }
    plane = {
        int(f) for s in SIDES for f in geometry.matrix_damage[s].pairs[:, 0]
    }
    external = {}
    for dom, mesh in meshes.items():
        faces = [int(f) for f in mesh.boundary_faces()]
        if dom == "matrix":
            faces = [f for f in faces if f not in plane]
        external[dom] = faces

    bc = BoundaryConditions()
    for rule in config.bc_rules:
        matched = 0
        for dom in _bc_targets(rule.domain):
            mesh = meshes[dom]
            if rule.tag and rule.tag != "boundary":
                tagged = set(
                    int(f) for f in mesh.faces_with_tag(rule.tag)
                )
                faces = [f for f in external[dom] if f in tagged]
            elif rule.predicate is not None:
                mask = rule.predicate.mask(mesh.face_centroids())
                faces = [f for f in external[dom] if mask[f]]
            else:
                faces = external[dom]
            matched += len(faces)
            for f in faces:
                bc.pressure.pop((dom, f), None)
                bc.flux.pop((dom, f), None)
                if rule.kind == "pressure":
                    bc.pressure[(dom, f)] = rule.value
                else:
                    bc.flux[(dom, f)] = rule.value
        if matched == 0:
            raise ConfigError(
                f"line {rule.line}: the rule matches no boundary face"
            )
    return bc


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    config: RunConfig
    geometry: MixedDimGeometry
    system: BlockSystem
    solution: MixedSolution
    diagnostics: dict
    outputs: list[Path]


def _diagnostics(system, solution, solver_report) -> dict:
    conservation = conservation_residuals(system, solution)
    laws = interface_law_residuals(system, solution)
    out = {
        "conservation_max": max(
            float(np.max(np.abs(v))) for v in conservation.values()
        ),
        "interface_max": max(
            float(np.max(np.abs(laws[name][side])))
            for name in ("matrix_damage", "damage_fault")
            for side in SIDES
        ),
        "balance": float(global_balance(system, solution)),
    }
    if solver_report is not None:
        out["iterations"] = solver_report["iterations"]
    return out


def _float_repr(value) -> str:
    return repr(float(value))


def _write_outputs(
    out_dir: Path, config: RunConfig, system, solution, diagnostics
) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    geometry = system.geometry
    vels = cell_velocities(system, solution)
    outputs = []
    domains = {
        "matrix": (geometry.matrix, solution.matrix_pressure, "matrix"),
        "damage_left": (
            geometry.damage["left"],
            solution.damage_pressure["left"],
            "damage_left",
        ),
        "damage_right": (
            geometry.damage["right"],
            solution.damage_pressure["right"],
            "damage_right",
        ),
        "fault": (geometry.fault, solution.fault_pressure, "fault"),
    }
    for name, (mesh, pressure, vel_key) in domains.items():
        path = out_dir / f"{name}.vtk"
        write_vtk(
            path,
            mesh,
            {"pressure": pressure, "velocity": vels[vel_key]},
            title=f"{config.name} {name}",
        )
        outputs.append(path)

    rows = [
        ("name", config.name),
        ("mode", config.mode),
        ("solver", config.solver),
        ("eps_mu", _float_repr(config.eps_mu)),
        ("eps_gamma", _float_repr(config.eps_gamma)),
        ("cells_matrix", geometry.matrix.n_cells),
        ("cells_damage_left", geometry.damage["left"].n_cells),
        ("cells_damage_right", geometry.damage["right"].n_cells),
        ("cells_fault", geometry.fault.n_cells),
        ("dofs", system.n_dofs),
    ]
    for dom, values in (
        ("matrix", solution.matrix_pressure),
        ("damage_left", solution.damage_pressure["left"]),
        ("damage_right", solution.damage_pressure["right"]),
        ("fault", solution.fault_pressure),
    ):
        rows.append((f"p_{dom}_min", _float_repr(np.min(values))))
        rows.append((f"p_{dom}_max", _float_repr(np.max(values))))
        rows.append((f"p_{dom}_mean", _float_repr(np.mean(values))))
    exchange_max = max(
        float(np.max(np.abs(solution.exchange_flux[s]))) for s in SIDES
    )
    rows.append(("exchange_abs_max", _float_repr(exchange_max)))
    for key in ("conservation_max", "interface_max", "balance"):
        rows.append((key, _float_repr(diagnostics[key])))
    if "iterations" in diagnostics:
        rows.append(("iterations", diagnostics["iterations"]))

    summary = out_dir / "summary.csv"
    with open(summary, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["key", "value"])
        for key, value in rows:
            writer.writerow([key, value])
    outputs.append(summary)
    return outputs


def _resolve_output_dir(config: RunConfig, output_dir) -> Path | None:
    if output_dir is not None:
        return Path(output_dir)
    env = os.environ.get("FAULTFLOW_OUTDIR")
    if env:
        return Path(env)
    if config.output_dir:
        return config.base_dir / config.output_dir
    return None


def run_scenario(config: RunConfig | str | Path, output_dir=None) -> RunResult:
    """Build, solve, and optionally write one scenario."""
    if not isinstance(config, RunConfig):
        config = load_config(config)
    geometry = build_geometry(config)
    coeff = resolve_coefficients(config, geometry)
    bc = resolve_boundary_conditions(config, geometry)
    system = assemble(geometry, coeff, bc)
    if config.solver == "schur":
        solution, report = solve_schur(system)
    else:
        solution, report = solve_saddle(system), None
    diagnostics = _diagnostics(system, solution, report)

    outputs = []
    out_dir = _resolve_output_dir(config, output_dir)
    if out_dir is not None:
        outputs = _write_outputs(out_dir, config, system, solution, diagnostics)
    return RunResult(
        config=config,
        geometry=geometry,
        system=system,
        solution=solution,
        diagnostics=diagnostics,
        outputs=outputs,
    )


# ---------------------------------------------------------------------------
# equi-dimensional reference and the thickness sweep
# ---------------------------------------------------------------------------


def _strip_bands(config: RunConfig) -> dict[str, tuple[float, float]]:
    half = config.eps_gamma / 2.0
    return {
        "damage_left": (1.0 - half - config.eps_mu, 1.0 - half),
        "fault": (1.0 - half, 1.0 + half),
        "damage_right": (1.0 + half, 1.0 + half + config.eps_mu),
    }


def _resist_from_table(k: np.ndarray, mode: str) -> np.ndarray:
    return k if mode == "literal" else 1.0 / k


def equidim_reference(
    config: RunConfig, eta: float, eta_coarse: float
) -> tuple:
    """Solve the scenario with the layers at physical width.

    The strips are meshed at size ``eta`` and the surrounding matrix
    graded up to ``eta_coarse``.  Conductivities come from the same coeff
    rules, evaluated at the cells of the layered mesh; boundary data maps
    mesh tags onto the strip bands (a layer's y0/y1 data lands on the
    bottom/top boundary pieces of its strip, matrix data on the rest).
    Returns (mesh, solution).
    """
    if config.geometry_kind != "two_block":
        raise ConfigError(
            "the equi-dimensional reference needs a two_block scenario"
        )
    mesh = build_layered_equidim_mesh(
        config.eps_mu, config.eps_gamma, eta=eta, eta_coarse=eta_coarse
    )

    # conductivity table per cell, from the same rules
    k = np.full(mesh.n_cells, np.nan)
    centroids = mesh.cell_centroids()
    regions = mesh.cell_regions
    for rule in config.coeff_rules:
        if rule.region == "matrix":
            targets = regions == "matrix"
        elif rule.region == "fault":
            targets = regions == "fault"
        elif rule.region == "damage":
            targets = (regions == "damage_left") | (
                regions == "damage_right"
            )
        else:
            targets = regions == rule.region
        mask = (
            rule.predicate.mask(centroids)
            if rule.predicate
            else np.ones(mesh.n_cells, dtype=bool)
        )
        k[targets & mask] = rule.value
    if np.any(np.isnan(k)):
        raise ConfigError(
            "the coeff rules leave reference cells uncovered"
        )
    resist = _resist_from_table(k, config.mode)

    # boundary data: map each boundary face to its mixed-model home
    bands = _strip_bands(config)
    mids = mesh.face_centroids()
    pressure_bc: dict[int, float] = {}
    flux_bc: dict[int, float] = {}
    tag_of = {}
    for tag in ("left", "right", "top", "bottom"):
        for f in mesh.faces_with_tag(tag):
            tag_of[int(f)] = tag

    def face_home(f: int) -> tuple[str, str]:
        tag = tag_of[f]
        if tag in ("left", "right"):
            return "matrix", tag
        x = mids[f, 0]
        for name, (lo, hi) in bands.items():
            if lo <= x <= hi:
                return name, "y1" if tag == "top" else "y0"
        return "matrix", tag

    for f in sorted(tag_of):
        dom, tag = face_home(f)
        assigned = None
        for rule in config.bc_rules:
            if dom not in _bc_targets(rule.domain):
                continue
            if rule.tag and rule.tag != "boundary" and rule.tag != tag:
                continue
            if rule.predicate is not None and not rule.predicate.mask(
                mids[f : f + 1]
            )[0]:
                continue
            assigned = rule
        if assigned is None:
            continue
        if assigned.kind == "pressure":
            pressure_bc[f] = assigned.value
        else:
            flux_bc[f] = assigned.value

    solution = solve_equidim(
        mesh, resist, pressure_bc=pressure_bc, flux_bc=flux_bc
    )
    return mesh, solution


def _matrix_pressure_at(config: RunConfig, n: int) -> tuple:
    cfg = replace(config, nx=n, ny=n, solver="saddle")
    geometry = build_geometry(cfg)
    coeff = resolve_coefficients(cfg, geometry)
    bc = resolve_boundary_conditions(cfg, geometry)
    system = assemble(geometry, coeff, bc)
    solution = solve_saddle(system)
    return geometry.matrix, solution.matrix_pressure


def sweep(
    config: RunConfig,
    eps_values,
    h: float = 1.0 / 32.0,
    h2: float = 1.0 / 64.0,
    eta_factor: float = 0.25,
    eta_coarse: float = 1.0 / 48.0,
    modes=("permeability", "literal"),
    output_path=None,
) -> list[dict]:
    """Model-error bounds across layer thicknesses.

    For each thickness and mode: solve the reduced problem at grid
    spacings ``h`` and ``h2``, solve the layered reference with strip
    resolution ``eta_factor * eps``, and record the error bracket.
    """
    if config.geometry_kind != "two_block":
        raise ConfigError("sweep needs a two_block scenario")
    rows = []
    for eps in eps_values:
        for mode in modes:
            cfg = replace(
                config, eps_mu=float(eps), eps_gamma=float(eps), mode=mode
            )
            mesh_ref, reference = equidim_reference(
                cfg, eta=eta_factor * float(eps), eta_coarse=eta_coarse
            )
            mesh_h, p_h = _matrix_pressure_at(cfg, round(1.0 / h))
            mesh_h2, p_h2 = _matrix_pressure_at(cfg, round(1.0 / h2))
            bounds = error_bounds(
                mesh_ref, reference.pressure, mesh_h, p_h, mesh_h2, p_h2
            )
            rows.append(
                {
                    "eps": float(eps),
                    "case": config.name,
                    "mode": mode,
                    "e_tilde": bounds.estimate,
                    "delta_p": bounds.gap,
                    "lower": bounds.lower,
                    "upper": bounds.upper,
                }
            )
    if output_path is not None:
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["eps", "case", "mode", "e_tilde", "delta_p", "lower", "upper"]
            )
            for row in rows:
                writer.writerow(
                    [
                        _float_repr(row["eps"]),
                        row["case"],
                        row["mode"],
                        _float_repr(row["e_tilde"]),
                        _float_repr(row["delta_p"]),
                        _float_repr(row["lower"]),
                        _float_repr(row["upper"]),
                    ]
                )
    return rows
