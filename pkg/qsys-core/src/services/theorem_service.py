"""
Theorem suites: one report row per verified instance.

Each row summarises a sub-report produced by the engine checkers. A failing
construction becomes a failing row so that the remaining rows still run.
"""

import time
from collections.abc import Callable
from itertools import product

from loguru import logger

from ..config import settings
from ..engine import bundled
from ..engine.completion import Completion, build_completion
from ..engine.errors import QSysError, UnknownObject
from ..engine.functoriality import (
    DagFunctor,
    check_functor,
    check_modification,
    check_transformation,
    dagger_mod,
    identity_functor,
)
from ..engine.linalg import Tolerance
from ..engine.qsystem import (
    QSystem,
    check_qsystem,
    condensation_from_qsystem,
    intertwiner_space,
    qsys_pentagon_residual,
    qsys_triangle_residual,
    same_qsystem,
    trivial_qsystem,
)
from ..engine.transport import (
    iota,
    psi_F,
    qsys_ambient,
    qsys_functor,
    qsys_modification,
    qsys_tensorator,
    qsys_transformation,
    tensorator_associativity,
    trivial_bimodule,
    twist_projection_report,
    verify_strict_1_functoriality,
)
from ..engine.twocat import Presentation, TwoCell, id2, validate
from ..models.report_models import Report
from .loader_service import Workspace


ANCHORS = {
    "validate": "pentagon and triangle of the completed presentation",
    "census": "simple bimodules between the listed Q-systems",
    "pentagon": "pentagon of the completed associator",
    "triangle": "triangle of the completed unitors",
    "strictness": "QSys(G)∘QSys(F)=QSys(G∘F)",
    "qsys-functor": "QSys(F) is a dagger 2-functor",
    "qsys-transformation": "QSys(φ) is a unitary 2-transformation",
    "qsys-modification": "QSys(n) is a 2-modification",
    "dagger": "QSys(n^*)=QSys(n)^*",
    "tensorator": "QSys⊗ is unitary",
    "tensorator-associativity": "QSys⊗ is compatible with the associator",
    "twist-projection": "twisting projection",
    "inclusion": "canonical inclusion is a strict dagger 2-functor",
    "local-equivalence": "ι is locally an equivalence",
    "lift": "an invertible transformation ψ^F",
    "dominance": "ι_C is dominant",
    "qsystem": "associativity, unit, Frobenius and separability",
    "functor": "coheretors of a 2-functor",
    "transformation": "an invertible F(a)−F′(b) bimodular 2-cell",
}


def _unitarity(cell: TwoCell) -> float:
    return max((cell.adj @ cell).distance(id2(cell.dom)), (cell @ cell.adj).distance(id2(cell.cod)))


class TheoremService:
    """Runs the bundled theorem suites and the workspace suite"""

    SUITES = ("vec", "z2", "z2-perturbed")

    def __init__(self, tol: float | None = None, seed: int | None = None):
        self.tol = Tolerance(settings.qsys_tol if tol is None else tol, settings.qsys_rel_tol)
        self.seed = settings.qsys_seed if seed is None else seed

    # -- row plumbing ----------------------------------------------------------

    def _row(self, report: Report, check_id: str, kind: str, run: Callable[[], Report | float]) -> None:
        """Run one instance and add its row; a raised engine error fails only this row."""
        anchor = ANCHORS[kind]
        started = time.perf_counter()
        try:
            outcome = run()
        except QSysError as e:
            logger.error(f"Error verifying {check_id}: {str(e)}")
            report.fail(check_id, self.tol.bound(), str(e), anchor=anchor)
            return
        if isinstance(outcome, Report):
            report.summarize(check_id, outcome, anchor=anchor)
        else:
            report.record(check_id, outcome, self.tol.bound(), anchor=anchor)
        logger.debug(f"{check_id}: {time.perf_counter() - started:.3f}s")

    def _complete(self, qsystems: list[QSystem], name: str = "") -> Completion:
        return build_completion(qsystems, self.tol, self.seed, name=name)

    def _trivial_completion(self, pres: Presentation) -> Completion:
        return self._complete([trivial_qsystem(pres, a) for a in pres.objects], name=f"QSys({pres.name})")

    # -- instance families -------------------------------------------------------

    def _completion_rows(self, report: Report, completion: Completion, tag: str) -> None:
        bimodules = list(completion.simples.values())
        self._row(report, f"validate[{tag}]", "validate", lambda: validate(completion.presentation, self.tol))

        def pentagons() -> float:
            residual = 0.0
            for k, l, m, n in product(bimodules, repeat=4):  # noqa: E741
                if same_qsystem(k.right, l.left) and same_qsystem(l.right, m.left) and same_qsystem(m.right, n.left):
                    residual = max(residual, qsys_pentagon_residual(k, l, m, n))
            return residual

        def triangles() -> float:
            residual = 0.0
            for m, n in product(bimodules, repeat=2):
                if same_qsystem(m.right, n.left):
                    residual = max(residual, qsys_triangle_residual(m, n))
            return residual

        self._row(report, f"pentagon[{tag}]", "pentagon", pentagons)
        self._row(report, f"triangle[{tag}]", "triangle", triangles)

    def _census_row(self, report: Report, completion: Completion, expected: dict[tuple[int, int], int]) -> None:
        def census() -> float:
            pres = completion.presentation
            names = completion.names
            counts = {(a, b): len(pres.hom(names[a], names[b])) for a, b in expected}
            detail = ", ".join(f"{names[a]}->{names[b]}: {n}" for (a, b), n in counts.items())
            logger.info(f"Census: {detail}")
            return float(sum(abs(counts[key] - n) for key, n in expected.items()))

        self._row(report, "census", "census", census)

    def _inclusion_rows(self, report: Report, pres: Presentation, completion: Completion, tag: str) -> None:
        self._row(report, f"inclusion[{tag}]", "inclusion", lambda: check_functor(iota(pres, completion), self.tol))

        def local_equivalence() -> float:
            defect = 0
            for s in pres.simples:
                for t in pres.simples:
                    if (s.src, s.tgt) != (t.src, t.tgt):
                        continue
                    x, y = trivial_bimodule(pres.simple_cell(s.name)), trivial_bimodule(pres.simple_cell(t.name))
                    defect += abs(len(intertwiner_space(x, y)) - (1 if s == t else 0))
            return float(defect)

        self._row(report, f"local-equivalence[{tag}]", "local-equivalence", local_equivalence)

    def _lift_row(self, report: Report, functor: DagFunctor) -> None:
        def lift() -> Report:
            source = self._trivial_completion(functor.src)
            target = self._trivial_completion(functor.tgt)
            return check_transformation(psi_F(functor, source, target), self.tol, self.seed)

        self._row(report, f"lift[{functor.name}]", "lift", lift)

    def _dominance_rows(self, report: Report, qsystems: list[QSystem]) -> None:
        for q in qsystems:

            def dominance(q: QSystem = q) -> Report:
                check = check_qsystem(q, self.tol)
                if not check.passed:
                    return check
                return condensation_from_qsystem(q, self.tol).report

            self._row(report, f"dominance[{q.label()}]", "dominance", dominance)

    # -- suites ----------------------------------------------------------------

    def _vec_suite(self, report: Report) -> None:
        pres = bundled.vec()
        triv = trivial_qsystem(pres, bundled.POINT)
        completion = self._complete([triv], name="QSys(Vec)")
        self._completion_rows(report, completion, "Vec")
        self._census_row(report, completion, {(0, 0): 1})
        identity = identity_functor(pres)
        self._row(
            report,
            "strictness[id,id]",
            "strictness",
            lambda: verify_strict_1_functoriality(identity, identity, completion, completion, completion, self.tol),
        )
        self._row(
            report,
            "qsys-functor[id]",
            "qsys-functor",
            lambda: check_functor(qsys_functor(identity, completion, completion), self.tol),
        )
        self._inclusion_rows(report, pres, completion, "Vec")
        self._lift_row(report, identity)
        self._dominance_rows(report, [triv])

    def _z2_suite(self, report: Report, perturbed: bool) -> None:
        pres = bundled.vec_z2()
        triv = trivial_qsystem(pres, bundled.POINT)
        algebra = bundled.group_algebra(pres)
        source = self._complete([triv, algebra], name="QSys(Vec_Z2)")
        self._completion_rows(report, source, "Vec_Z2")
        self._census_row(report, source, {(0, 0): 2, (0, 1): 1, (1, 0): 1, (1, 1): 2})

        twist, incl = bundled.twisted_autoequivalence(), bundled.inclusion_functor()
        identity = identity_functor(pres)
        target = self._complete(
            [triv, algebra, qsys_ambient(twist).on_qsystem(algebra)], name="QSys(Vec_Z2)+twist"
        )
        self._row(
            report,
            "strictness[twist,twist]",
            "strictness",
            lambda: verify_strict_1_functoriality(twist, twist, source, target, target, self.tol),
        )

        def through_inclusion() -> Report:
            vec_completion = self._trivial_completion(bundled.vec())
            return verify_strict_1_functoriality(twist, incl, vec_completion, source, target, self.tol)

        self._row(report, "strictness[twist,incl]", "strictness", through_inclusion)

        for functor in (identity, twist):
            self._row(
                report,
                f"qsys-functor[{functor.name}]",
                "qsys-functor",
                lambda functor=functor: check_functor(qsys_functor(functor, source, target), self.tol),
            )

        beta = bundled.coboundary_transformation()
        beta_inv = bundled.inverse_coboundary_transformation()
        for phi in (beta, beta_inv):
            self._row(
                report,
                f"qsys-transformation[{phi.name}]",
                "qsys-transformation",
                lambda phi=phi: check_transformation(qsys_transformation(phi, source, target), self.tol, self.seed),
            )
            self._row(
                report,
                f"twist-projection[{phi.name}]",
                "twist-projection",
                lambda phi=phi: twist_projection_report(phi, source, target),
            )

        phase = bundled.scalar_modification()
        self._row(
            report,
            f"qsys-modification[{phase.name}]",
            "qsys-modification",
            lambda: check_modification(qsys_modification(phase, source, target), self.tol),
        )

        def dagger() -> float:
            moved = qsys_modification(phase, source, target)
            moved_adjoint = qsys_modification(dagger_mod(phase), source, target)
            return max(moved_adjoint.comp[a].distance(moved.comp[a].adj) for a in moved.comp)

        self._row(report, f"dagger[{phase.name}]", "dagger", dagger)

        def tensorator() -> Report:
            mod = qsys_tensorator(beta, beta_inv, source, target)
            sub = check_modification(mod, self.tol)
            for a, cell in mod.comp.items():
                sub.record(f"unitary[{a}]", _unitarity(cell), self.tol.bound(), anchor=ANCHORS["tensorator"])
            return sub

        self._row(report, f"tensorator[{beta.name},{beta_inv.name}]", "tensorator", tensorator)
        self._row(
            report,
            f"tensorator-associativity[{beta.name},{beta_inv.name},{beta.name}]",
            "tensorator-associativity",
            lambda: tensorator_associativity(beta, beta_inv, beta, source, target),
        )

        self._inclusion_rows(report, pres, source, "Vec_Z2")
        for functor in (identity, twist, incl):
            self._lift_row(report, functor)

        dominance = [triv, algebra]
        if perturbed:
            dominance.append(bundled.scaled_qsystem(algebra, 1.1))
        self._dominance_rows(report, dominance)

    def run_suite(self, suite: str) -> Report:
        """
        Run one bundled suite.

        Args:
            suite: vec, z2 or z2-perturbed

        Returns:
            Report with one row per theorem instance
        """
        if suite not in self.SUITES:
            raise UnknownObject(f"Unknown suite '{suite}' (known: {', '.join(self.SUITES)})")
        started = time.perf_counter()
        report = Report(title=f"theorems {suite}")
        if suite == "vec":
            self._vec_suite(report)
        else:
            self._z2_suite(report, perturbed=suite == "z2-perturbed")
        report.timing = time.perf_counter() - started
        logger.info(f"Suite {suite}: {len(report.checks)} rows, {report.summary.value} in {report.timing:.2f}s")
        return report

    def run_workspace(self, workspace: Workspace) -> Report:
        """Validate every presentation and check every structure of a workspace, with lifts and dominance."""
        started = time.perf_counter()
        report = Report(title="theorems workspace")
        for name, pres in workspace.presentations.items():
            self._row(report, f"validate[{name}]", "validate", lambda pres=pres: validate(pres, self.tol))
        for name, q in workspace.qsystems.items():
            self._row(report, f"qsystem[{name}]", "qsystem", lambda q=q: check_qsystem(q, self.tol))
        self._dominance_rows(report, list(workspace.qsystems.values()))
        for functor in workspace.functors.values():
            self._row(
                report, f"functor[{functor.name}]", "functor", lambda f=functor: check_functor(f, self.tol)
            )
            self._lift_row(report, functor)
        for phi in workspace.transformations.values():
            self._row(
                report,
                f"transformation[{phi.name}]",
                "transformation",
                lambda phi=phi: check_transformation(phi, self.tol, self.seed),
            )
        report.timing = time.perf_counter() - started
        return report
