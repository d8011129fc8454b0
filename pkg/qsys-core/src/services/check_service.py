import time

from loguru import logger

from ..config import settings
from ..engine.errors import SchemaError
from ..engine.functoriality import check_functor, check_modification, check_transformation
from ..engine.linalg import Tolerance
from ..engine.qsystem import check_bimodule, check_qsystem
from ..engine.twocat import Presentation, validate
from ..models.report_models import Report
from .loader_service import Workspace


class CheckService:
    """Runs the axiom checkers on loaded structures"""

    KINDS = ("qsystem", "bimodule", "functor", "transformation", "modification")

    def __init__(self, tol: float | None = None, seed: int | None = None):
        self.tol = Tolerance(settings.qsys_tol if tol is None else tol, settings.qsys_rel_tol)
        self.seed = settings.qsys_seed if seed is None else seed

    def validate(self, pres: Presentation) -> Report:
        started = time.perf_counter()
        report = validate(pres, self.tol)
        report.timing = time.perf_counter() - started
        logger.info(
            f"Validated {pres.name or '<unnamed>'}: {len(report.checks)} checks, "
            f"max residual {report.max_residual():.3e}, {report.timing:.3f}s"
        )
        return report

    def check(self, workspace: Workspace, kind: str, name: str) -> Report:
        """
        Check one named structure of a workspace.

        Args:
            workspace: Loaded workspace
            kind: One of qsystem, bimodule, functor, transformation, modification
            name: Key of the structure in the workspace

        Returns:
            Report of the matching checker
        """
        table = {
            "qsystem": workspace.qsystems,
            "bimodule": workspace.bimodules,
            "functor": workspace.functors,
            "transformation": workspace.transformations,
            "modification": workspace.modifications,
        }[kind]
        if name not in table:
            known = ", ".join(sorted(table)) or "none"
            raise SchemaError(f"no {kind} named '{name}' (known: {known})", location=f"--{kind}")
        target = table[name]

        started = time.perf_counter()
        if kind == "qsystem":
            report = check_qsystem(target, self.tol)
        elif kind == "bimodule":
            report = check_bimodule(target, self.tol)
        elif kind == "functor":
            report = check_functor(target, self.tol)
        elif kind == "transformation":
            report = check_transformation(target, self.tol, self.seed)
        else:
            report = check_modification(target, self.tol)
        report.timing = time.perf_counter() - started

        logger.info(f"Checked {kind} {name}: {report.summary.value} ({report.timing:.3f}s)")
        if not report.passed:
            logger.warning(f"{kind} {name} failed: {', '.join(report.failed_ids())}")
        return report
