"""Run configuration, convergence-study driver and table emitters."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, fields
from pathlib import Path

from .condensed_system import METHODS, build_trace_space, solve_problem
from .error_analysis import (
    ConvergenceReport,
    ErrorRecord,
    field_norms,
    l2_error_sigma,
    l2_error_u,
)
from .local_solver import PENALTIES
from .mesh import generate_uniform_quadrilateral, generate_uniform_triangular, read_mesh
from .problems import check_problem
from .reference import reference_dofs

log = logging.getLogger(__name__)

FAMILIES = {"tri": generate_uniform_triangular, "quad": generate_uniform_quadrilateral}
NORMS = ("relative", "absolute")
CSV_COLUMNS = ("method", "k", "mesh", "n", "h", "dofs",
               "err_u", "rate_u", "err_sigma", "rate_sigma")


class ConfigError(ValueError):
    pass


class RunError(RuntimeError):
    """A refinement failed; the message names ``method``, ``k`` and ``n``."""


@dataclass
class RunConfig:
    """Settings of one convergence sweep.

    ``mesh`` is ``"tri"``, ``"quad"`` or a mesh file path. A path may
    contain ``{n}``, which is replaced by each level; otherwise the file
    is read once and ``levels`` must hold a single entry.
    ``dump_matrix`` follows the same ``{n}`` rule and otherwise receives
    the finest level's matrix.
    """

    method: str = "edg"
    k: int = 0
    mesh: str = "tri"
    levels: tuple = (4, 8, 16, 32, 64)
    solver: str = "direct"
    tol: float = 1e-12
    penalty: str = "edge"
    norm: str = "relative"
    cell_exactness: int | None = None
    edge_npoints: int | None = None
    csv: str | None = None
    md: str | None = None
    dump_matrix: str | None = None

    def __post_init__(self):
        self.method = str(self.method).lower()
        self.k = int(self.k)
        self.levels = tuple(int(n) for n in self.levels)
        self.tol = float(self.tol)
        self.validate()

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.k < 0:
            raise ConfigError("k must be non-negative")
        if not self.levels:
            raise ConfigError("levels must not be empty")
        if any(n <= 0 for n in self.levels):
            raise ConfigError("levels must be positive")
        if any(a >= b for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError(f"levels must be strictly increasing, got {list(self.levels)}")
        if self.solver not in ("direct", "cg"):
            raise ConfigError(f"solver must be 'direct' or 'cg', got {self.solver!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.penalty not in PENALTIES:
            raise ConfigError(f"penalty must be one of {PENALTIES}, got {self.penalty!r}")
        if self.norm not in NORMS:
            raise ConfigError(f"norm must be one of {NORMS}, got {self.norm!r}")
        if self.is_file_mesh and "{n}" not in self.mesh and len(self.levels) != 1:
            raise ConfigError("a single mesh file needs exactly one level")

    @property
    def is_file_mesh(self) -> bool:
        return self.mesh not in FAMILIES

    def to_text(self) -> str:
        """Flat ``key=value`` lines in field order; unset options are omitted."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "levels":
                v = ",".join(str(n) for n in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
        known = {f.name for f in fields(cls)}
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in known:
                raise ConfigError(f"line {lineno}: cannot parse {raw!r}")
            kw[key] = value
        try:
            if "levels" in kw:
                kw["levels"] = tuple(int(n) for n in kw["levels"].split(","))
            for key in ("cell_exactness", "edge_npoints"):
                if key in kw:
                    kw[key] = int(kw[key])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


def build_mesh(config: RunConfig, n: int):
    if not config.is_file_mesh:
        return FAMILIES[config.mesh](n)
    return read_mesh(config.mesh.replace("{n}", str(n)))


def _mesh_label(config: RunConfig) -> str:
    return config.mesh if not config.is_file_mesh else Path(config.mesh).name


def run_convergence(config: RunConfig, problem) -> ConvergenceReport:
    """Solve on every level and collect errors against the exact solution."""
    if problem.u is None or problem.sigma is None:
        raise ConfigError(f"problem {problem.name!r} has no exact solution")
    check_problem(problem)
    if config.norm == "relative":
        scale_u, scale_s = field_norms(problem)
    else:
        scale_u = scale_s = 1.0
    report = ConvergenceReport(config.method, config.k, _mesh_label(config), config.norm)
    for i, n in enumerate(config.levels):
        try:
            mesh = build_mesh(config, n)
            sol, system = solve_problem(
                mesh, problem, config.k, config.method, config.solver, config.tol,
                config.cell_exactness, config.edge_npoints, config.penalty,
            )
            # error quadrature stays two degrees above the assembly rule
            q = None if config.cell_exactness is None else config.cell_exactness + 2
            rec = ErrorRecord(
                mesh=report.mesh,
                n=n,
                h=mesh.h,
                n_dofs=system.space.n_interior,
                err_u=l2_error_u(sol, problem.u, q) / scale_u,
                err_sigma=l2_error_sigma(sol, problem.sigma, q) / scale_s,
            )
            if config.dump_matrix:
                if "{n}" in config.dump_matrix:
                    system.dump_matrix(config.dump_matrix.replace("{n}", str(n)))
                elif i == len(config.levels) - 1:
                    system.dump_matrix(config.dump_matrix)
        except Exception as exc:
            raise RunError(f"method={config.method} k={config.k} n={n}: {exc}") from exc
        log.info("%s k=%d n=%d: err_u=%.3e err_sigma=%.3e",
                 config.method, config.k, n, rec.err_u, rec.err_sigma)
        report.records.append(rec)
    return report


def _rows(report: ConvergenceReport):
    ru = [None] + report.rates("err_u")
    rs = [None] + report.rates("err_sigma")
    for rec, a, b in zip(report.records, ru, rs):
        yield rec, a, b


def _num(v) -> str:
    # shortest round-trip text, empty for undefined rates
    return "" if v is None else repr(float(v))


def report_to_csv(report: ConvergenceReport) -> str:
    """CSV text with one row per refinement; rates are empty where undefined."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec, ru, rs in _rows(report):
        w.writerow([
            report.method, report.k, report.mesh, rec.n, _num(rec.h), rec.n_dofs,
            _num(rec.err_u), _num(ru), _num(rec.err_sigma), _num(rs),
        ])
    return buf.getvalue()


def _fmt_rate(r):
    return "-" if r is None else f"{r:.3f}"


def report_to_markdown(report: ConvergenceReport) -> str:
    """Convergence history table; every row repeats method, k and n."""
    kind = "relative " if report.norm == "relative" else ""
    lines = [
        f"{report.method.upper()}, k={report.k}, {report.mesh} meshes ({kind}L2 errors)",
        "",
        "| method | k | n | mesh | dofs | ‖u−u_h‖ | rate | ‖σ−σ_h‖ | rate |",
        "|---|---|---|---|---|---|---|---|---|",
    ]
    for rec, ru, rs in _rows(report):
        lines.append(
            f"| {report.method} | {report.k} | {rec.n} | {rec.n}×{rec.n} | {rec.n_dofs} "
            f"| {rec.err_u:.3e} | {_fmt_rate(ru)} | {rec.err_sigma:.3e} | {_fmt_rate(rs)} |"
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DofRow:
    k: int
    n: int
    family: str
    method: str
    computed: int
    reference: int | None

    @property
    def mismatch(self) -> bool:
        return self.reference is not None and self.reference != self.computed


def run_dof_comparison(ks, ns) -> list:
    """Interior trace dof counts of both methods on both uniform families,
    paired with the tabulated reference counts where available."""
    rows = []
    for k in ks:
        for n in ns:
            for family, gen in FAMILIES.items():
                mesh = gen(n)
                for method in METHODS:
                    count = build_trace_space(mesh, k, method).n_interior
                    ref = reference_dofs(family, method, k, n)
                    rows.append(DofRow(k, n, family, method, count, ref))
    return rows


def dofs_to_markdown(rows) -> str:
    """Dof table with a flag column; mismatching reference counts are listed."""
    lines = [
        "| k | n | mesh | method | dofs | reference | flag |",
        "|---|---|---|---|---|---|---|",
    ]
    for r in rows:
        ref = "-" if r.reference is None else str(r.reference)
        flag = "MISMATCH" if r.mismatch else ""
        lines.append(f"| {r.k} | {r.n} | {r.family} | {r.method} | {r.computed} | {ref} | {flag} |")
    bad = [r for r in rows if r.mismatch]
    if bad:
        lines.append("")
        for r in bad:
            lines.append(
                f"mismatch: k={r.k} n={r.n} {r.family} {r.method}: "
                f"computed {r.computed}, reference {r.reference}"
            )
    return "\n".join(lines) + "\n"
