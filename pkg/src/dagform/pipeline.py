"""Scenario pipeline from structural validation through simulation to exported files."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormationError, ScenarioValidationError, UncertifiedFormation
from .geometry import SimilarityParams, check_collocation, solve_similarity_params
from .graph import FormationGraph, ValidationReport, validate_topology
from .laplacian import (
    BlockLaplacian,
    LocalizabilityReport,
    assemble_laplacian,
    localizability_report,
    nominal_residual,
    normalize_laplacian,
)
from .reference import random_initial
from .scenario import Scenario
from .simulator import ErrorSeries, Trajectory, simulate, tracking_error
from .weights import EdgeWeight, FollowerWeightTriple, synthesize_weights

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNCERTIFIED = 2
EXIT_NOT_CONVERGED = 3


@dataclass(eq=False)
class Certification:
    """Everything learned about a scenario before simulating it."""

    structure: ValidationReport
    weight_errors: list[str] = field(default_factory=list)
    laplacian: BlockLaplacian | None = None
    report: LocalizabilityReport | None = None
    nominal_residual: float | None = None
    leader_fit: SimilarityParams | None = None
    leader_fit_error: str | None = None
    tolerances: dict = field(default_factory=dict)

    @property
    def structurally_valid(self) -> bool:
        return self.structure.ok and not self.weight_errors

    @property
    def leaders_feasible(self) -> bool:
        return self.leader_fit is not None and self.leader_fit.feasible(self.tolerances["image"])

    @property
    def nominal_ok(self) -> bool:
        return self.nominal_residual is not None and self.nominal_residual <= 1e-9 * (
            1.0 + float(np.abs(self.laplacian.matrix).max())
        )

    @property
    def certified(self) -> bool:
        return (
            self.structurally_valid
            and self.report is not None
            and self.report.certified
            and self.nominal_ok
            and self.leaders_feasible
        )

    @property
    def exit_code(self) -> int:
        if not self.structurally_valid:
            return EXIT_INPUT
        return EXIT_OK if self.certified else EXIT_UNCERTIFIED

    def failures(self) -> list[str]:
        out = [f"[{v.rule}] {v.message}" for v in self.structure]
        out += self.weight_errors
        if self.report is not None and not self.report.certified:
            out.append("localizability not certified: " + json.dumps(
                {k: self.report.to_dict()[k] for k in ("ff_nonsingular", "null_space_dim", "min_real_part")}
            ))
        if self.laplacian is not None and not self.nominal_ok:
            out.append(f"weights do not annihilate the nominal image (residual {self.nominal_residual:.3g})")
        if self.leader_fit_error:
            out.append(f"leader positions: {self.leader_fit_error}")
        elif self.leader_fit is not None and not self.leaders_feasible:
            out.append(
                "leader positions are not a similar copy of their nominal positions "
                f"(residual {self.leader_fit.residual:.3g})"
            )
        return out

    def to_dict(self) -> dict:
        return {
            "certified": self.certified,
            "exit_code": self.exit_code,
            "structure": self.structure.to_dict(),
            "weight_errors": self.weight_errors,
            "localizability": self.report.to_dict() if self.report else None,
            "nominal_residual": self.nominal_residual,
            "leader_fit": None if self.leader_fit is None else {
                "residual": self.leader_fit.residual,
                "feasible": self.leaders_feasible,
                "alpha": self.leader_fit.alpha,
                "theta": self.leader_fit.theta,
                "b": self.leader_fit.b.tolist(),
            },
            "failures": self.failures(),
        }


def scenario_graph(sc: Scenario) -> FormationGraph:
    return FormationGraph.from_neighbors(sc.n, sc.leaders, sc.neighbors)


def _triples(sc: Scenario, g: FormationGraph) -> dict[int, FollowerWeightTriple]:
    params = {i: (w["c1"], w["c2"]) for i, w in sc.weights.items() if "c1" in w}
    nbrs = {i: g.neighbors(i) for i in g.followers}
    triples = synthesize_weights(nbrs, sc.nominal, params)
    for i, w in sc.weights.items():
        if "blocks" not in w:
            continue
        j, k = nbrs[i]
        blocks = w["blocks"]
        if set(blocks) != {i, j, k}:
            raise ValueError(f"follower {i}: block overrides must cover columns {sorted({i, j, k})}")
        triples[i] = FollowerWeightTriple(
            i, (j, k), EdgeWeight.from_matrix(blocks[j]),
            EdgeWeight.from_matrix(blocks[k]), EdgeWeight.from_matrix(blocks[i]),
        )
    return triples


def certify_scenario(sc: Scenario) -> Certification:
    """Run every pre-simulation check, collecting rather than stopping at failures."""
    g = scenario_graph(sc)
    tol = sc.tolerances
    structure = validate_topology(g) + check_collocation(sc.nominal, tol["collocation"])
    cert = Certification(structure=structure, tolerances=dict(tol))
    bad_keys = [i for i in sc.weights if i in sc.leaders]
    if bad_keys:
        cert.weight_errors.append(f"weight overrides given for leaders {bad_keys}")

    try:
        fit_target = sc.leader_schedule().positions_at(0.0)
        cert.leader_fit = solve_similarity_params(fit_target, sc.leader_nominal(), tol["collocation"])
    except FormationError as exc:
        cert.leader_fit_error = str(exc)

    if not structure.ok or bad_keys:
        return cert
    try:
        raw = assemble_laplacian(g, _triples(sc, g))
        L = normalize_laplacian(raw)
    except (FormationError, ValueError) as exc:
        cert.weight_errors.append(str(exc))
        return cert
    cert.laplacian = L
    cert.report = localizability_report(L, g, tol["rank"])
    cert.nominal_residual = nominal_residual(L, sc.nominal)
    return cert


def initial_state(sc: Scenario) -> np.ndarray:
    if isinstance(sc.initial, str):
        p0 = random_initial(np.random.default_rng(sc.seed), sc.nominal, sc.leaders)
    else:
        p0 = sc.initial.reshape(-1).copy()
    schedule = sc.leader_schedule()
    lead = np.array([[2 * i - 2, 2 * i - 1] for i in sc.leaders]).reshape(-1)
    p0[lead] = schedule.positions_at(0.0)
    return p0


@dataclass
class RunSummary:
    name: str
    certified: bool
    converged: bool
    min_eig_real: float
    max_eig_real: float
    max_eig_abs_imag: float
    initial_tracking_error: float
    final_tracking_error: float
    final_control_norm: float
    final_transform: dict
    wall_time: float
    seed: int
    T: float
    dt: float
    samples: int
    schedule: str
    label: str
    files: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.converged else EXIT_NOT_CONVERGED

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["exit_code"] = self.exit_code
        return d


def trajectory_header(n: int) -> str:
    pos = [f"{a}{i}" for i in range(1, n + 1) for a in ("x", "y")]
    inp = [f"u_{a}{i}" for i in range(1, n + 1) for a in ("x", "y")]
    return ",".join(["t"] + pos + inp)


def error_path_for(path: Path) -> Path:
    return path.with_name(path.stem + "_error.csv")


def export_trajectory(traj: Trajectory, path, errors: ErrorSeries | None = None) -> list[Path]:
    """Write the trajectory CSV and, if given, the sibling ``*_error.csv``.

    Values use 17 significant digits, which round-trips doubles exactly.
    """
    if len(traj) == 0:
        raise ValueError("cannot export an empty trajectory")
    path = Path(path)
    data = np.column_stack([traj.times, traj.states, traj.inputs])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=trajectory_header(traj.n), comments="")
    written = [path]
    if errors is not None:
        epath = error_path_for(path)
        np.savetxt(epath, np.column_stack([errors.times, errors.values]),
                   fmt="%.17g", delimiter=",", header="t,error", comments="")
        written.append(epath)
    return written


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    n = (len(header) - 1) // 4
    if header != trajectory_header(n).split(","):
        raise ValueError(f"{path}: unexpected header")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trajectory(data[:, 0], data[:, 1 : 1 + 2 * n], data[:, 1 + 2 * n :])


def read_error_series(path) -> ErrorSeries:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ErrorSeries(data[:, 0], data[:, 1])


@dataclass(eq=False)
class RunResult:
    scenario: Scenario
    certification: Certification
    trajectory: Trajectory
    errors: ErrorSeries
    summary: RunSummary


def execute(sc: Scenario) -> RunResult:
    """Certify and simulate in memory; raises instead of returning on failure."""
    t0 = time.perf_counter()
    cert = certify_scenario(sc)
    if not cert.structurally_valid:
        raise ScenarioValidationError("; ".join(cert.failures()), cert)
    if not cert.certified:
        raise UncertifiedFormation("; ".join(cert.failures()), cert)
    L = cert.laplacian
    schedule = sc.leader_schedule()
    traj = simulate(L, initial_state(sc), schedule, sc.T, sc.dt)
    traj.metadata["seed"] = sc.seed
    errors = tracking_error(traj, L, schedule)

    final = traj.positions(len(traj) - 1)
    fit = solve_similarity_params(final, sc.nominal, sc.tolerances["collocation"])
    ev = cert.report.ff_eigenvalues
    conv_tol = sc.tolerances["convergence"]
    u_final = float(np.linalg.norm(traj.inputs[-1]))
    if schedule.is_static:
        converged = errors.final < conv_tol and u_final < conv_tol
    else:
        converged = True  # no convergence claim for moving leaders
    summary = RunSummary(
        name=sc.name,
        certified=True,
        converged=bool(converged),
        min_eig_real=float(ev.real.min()),
        max_eig_real=float(ev.real.max()),
        max_eig_abs_imag=float(np.abs(ev.imag).max()),
        initial_tracking_error=float(errors.values[0]),
        final_tracking_error=errors.final,
        final_control_norm=u_final,
        final_transform={
            "alpha": fit.alpha, "theta": fit.theta,
            "b": fit.b.tolist(), "residual": fit.residual,
        },
        wall_time=time.perf_counter() - t0,
        seed=sc.seed,
        T=sc.T,
        dt=sc.dt,
        samples=len(traj),
        schedule=schedule.mode,
        label=traj.metadata.get("label", ""),
    )
    return RunResult(sc, cert, traj, errors, summary)


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_scenario(sc: Scenario, out_dir, plots: bool = False) -> RunSummary:
    """Run one scenario and write its artifacts into ``out_dir/<name>/``.

    ``certification.json`` is written whenever the scenario parsed, so a
    refused run still leaves its reasons on disk.
    """
    out = Path(out_dir) / sc.name
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = execute(sc)
    except (ScenarioValidationError, UncertifiedFormation) as exc:
        cert = exc.report if isinstance(exc, ScenarioValidationError) else exc.certification
        write_json(out / "certification.json", cert.to_dict())
        raise
    write_json(out / "certification.json", result.certification.to_dict())
    files = export_trajectory(result.trajectory, out / "trajectory.csv", result.errors)
    summary = result.summary
    summary.files = {"trajectory": files[0].name, "error": files[1].name}
    if plots:
        from .plotting import render_report

        figs = render_report(result, out)
        summary.files.update({k: p.name for k, p in figs.items()})
    write_json(out / "summary.json", summary.to_dict())
    return summary
