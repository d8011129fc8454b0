from loguru import logger

from ..config import settings
from ..engine.completion import Completion, build_completion
from ..engine.errors import QSysError, SchemaError
from ..engine.linalg import Tolerance
from ..engine.qsystem import QSystem, check_qsystem, trivial_qsystem
from ..engine.twocat import Presentation
from ..models.report_models import Report
from .check_service import CheckService
from .loader_service import LoaderService, Workspace


TRIVIAL_PREFIX = "trivial:"


class CompletionService:
    """Builds, validates and exports completions of workspace Q-systems"""

    def __init__(self, tol: float | None = None, seed: int | None = None):
        self.tol = Tolerance(settings.qsys_tol if tol is None else tol, settings.qsys_rel_tol)
        self.seed = settings.qsys_seed if seed is None else seed
        self.loader = LoaderService()
        self.checker = CheckService(tol=self.tol.atol, seed=self.seed)

    def resolve_qsystems(self, workspace: Workspace, names: list[str] | None) -> list[QSystem]:
        """
        Look up the Q-systems to complete.

        Names are workspace keys or `trivial:<object>`; with no names every object
        of the single presentation gets its trivial Q-system.
        """
        if not names:
            if len(workspace.presentations) != 1:
                raise SchemaError("--qsystems is required when the workspace has several presentations", "--qsystems")
            pres = next(iter(workspace.presentations.values()))
            return [trivial_qsystem(pres, a) for a in pres.objects]

        resolved = []
        for name in names:
            if name in workspace.qsystems:
                resolved.append(workspace.qsystems[name])
            elif name.startswith(TRIVIAL_PREFIX):
                resolved.append(self._trivial(workspace, name[len(TRIVIAL_PREFIX) :]))
            else:
                raise SchemaError(f"unknown Q-system '{name}'", location="--qsystems")
        return resolved

    def _trivial(self, workspace: Workspace, obj: str) -> QSystem:
        owners = [pres for pres in workspace.presentations.values() if obj in pres.objects]
        if len(owners) != 1:
            raise SchemaError(f"object '{obj}' must belong to exactly one presentation", location="--qsystems")
        return trivial_qsystem(owners[0], obj)

    def build(self, qsystems: list[QSystem], name: str = "") -> Completion:
        for q in qsystems:
            report = check_qsystem(q, self.tol)
            if not report.passed:
                raise QSysError(f"Q-system {q.label()} fails {', '.join(report.failed_ids())}")
        try:
            completion = build_completion(qsystems, self.tol, self.seed, name=name)
        except QSysError as e:
            logger.error(f"Error building completion: {str(e)}")
            raise
        logger.info(f"Completed {len(qsystems)} Q-systems into {len(completion.presentation.simples)} simples")
        return completion

    def complete(self, workspace: Workspace, names: list[str] | None) -> tuple[Presentation, Report]:
        """
        Complete the named Q-systems and validate the result.

        Returns:
            The skeletal presentation and its validation report
        """
        qsystems = self.resolve_qsystems(workspace, names)
        base = qsystems[0].pres
        completion = self.build(qsystems, name=f"QSys({base.name})" if base.name else "")
        report = self.checker.validate(completion.presentation)
        return completion.presentation, report

    def export(self, pres: Presentation, out: str | None) -> str:
        text = self.loader.export_presentation(pres)
        if out:
            self.loader.write_presentation(pres, out)
        return text
