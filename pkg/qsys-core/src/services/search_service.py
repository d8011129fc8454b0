"""
Bounded search for Q-system structures on small 1-cells.

Candidate 1-cells are multiplicity maps on the endomorphism simples of one
object that contain the unit once and whose Frobenius-Perron dimension stays
under the bound. On each candidate the axiom defects are minimised over the
complex entries of m and i from seeded random starts. This is a heuristic: a
missing candidate says nothing about existence.
"""

from itertools import product

import numpy as np
from loguru import logger
from scipy.optimize import least_squares

from ..config import settings
from ..engine.errors import QSysError, UnknownObject
from ..engine.linalg import Tolerance, seeded_rng
from ..engine.qsystem import QSystem, check_qsystem, qsystem_defects
from ..engine.twocat import OneCell, Presentation, TwoCell, tensor_1cells
from ..models.schema_models import QSystemDoc, SearchCandidate, SearchResult
from .loader_service import blocks_to_doc


# Slack on the dimension bound so that exact FP dimensions are admitted
DIM_SLACK = 1e-9


class SearchService:
    """Finds Q-system structures by residual minimisation"""

    def __init__(self, tol: float | None = None, seed: int | None = None):
        self.tol = Tolerance(settings.qsys_tol if tol is None else tol, settings.qsys_rel_tol)
        self.seed = settings.qsys_seed if seed is None else seed
        self.starts = settings.search_starts
        self.max_nfev = settings.search_max_nfev

    def fp_dimensions(self, pres: Presentation, b: str) -> dict[str, float]:
        """Largest eigenvalue of the left fusion matrix of each simple in hom(b, b)."""
        endo = pres.hom(b, b)
        dims = {}
        for s in endo:
            matrix = np.array([[pres.N(s, j, k) for j in endo] for k in endo], dtype=float)
            dims[s] = float(np.max(np.abs(np.linalg.eigvals(matrix))))
        return dims

    def candidate_cells(self, pres: Presentation, b: str, dim_bound: float) -> list[dict[str, int]]:
        dims = self.fp_dimensions(pres, b)
        unit = pres.unit[b]
        budget = dim_bound - dims[unit] + DIM_SLACK
        others = [s for s in pres.hom(b, b) if s != unit]
        ranges = [range(int(budget // dims[s]) + 1) for s in others]
        candidates = []
        for counts in product(*ranges):
            if sum(n * dims[s] for s, n in zip(others, counts, strict=True)) <= budget:
                mult = {unit: 1, **{s: n for s, n in zip(others, counts, strict=True) if n}}
                candidates.append(mult)
        candidates.sort(key=lambda mult: (sum(n * dims[s] for s, n in mult.items()), sorted(mult)))
        return candidates

    def _frames(self, cell: OneCell) -> tuple[TwoCell, TwoCell]:
        pres = cell.pres
        zero_m = TwoCell(tensor_1cells(cell, cell), cell, {})
        zero_i = TwoCell(pres.unit_cell(cell.src), cell, {})
        return zero_m, zero_i

    def _unpack(self, x: np.ndarray, zero_m: TwoCell, zero_i: TwoCell) -> tuple[TwoCell, TwoCell]:
        z = x[0::2] + 1j * x[1::2]
        offset = 0
        cells = []
        for frame in (zero_m, zero_i):
            blocks = {}
            for s, block in frame.blocks.items():
                size = block.size
                blocks[s] = z[offset : offset + size].reshape(block.shape)
                offset += size
            cells.append(TwoCell(frame.dom, frame.cod, blocks))
        return cells[0], cells[1]

    def solve(self, cell: OneCell, name: str = "") -> tuple[QSystem, float, int] | None:
        """
        Minimise the axiom defects on one candidate 1-cell.

        Args:
            cell: Endomorphism 1-cell carrying the structure
            name: Label for the resulting Q-system

        Returns:
            (Q-system, max residual, start index) for the first start that passes, else None
        """
        zero_m, zero_i = self._frames(cell)
        size = sum(block.size for block in zero_m.blocks.values()) + sum(b.size for b in zero_i.blocks.values())

        def residuals(x: np.ndarray) -> np.ndarray:
            m, i = self._unpack(x, zero_m, zero_i)
            defects = qsystem_defects(QSystem(cell.src, cell, m, i))
            flat = np.concatenate([block.ravel() for d in defects.values() for block in d.blocks.values()])
            return np.concatenate([flat.real, flat.imag])

        for start in range(self.starts):
            rng = seeded_rng(self.seed + start)
            x0 = rng.standard_normal(2 * size)
            try:
                fit = least_squares(residuals, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=self.max_nfev)
            except (QSysError, ValueError) as e:
                logger.warning(f"Search start {start} on {cell.label()} aborted: {str(e)}")
                continue
            m, i = self._unpack(fit.x, zero_m, zero_i)
            q = QSystem(cell.src, cell, m, i, name=name)
            report = check_qsystem(q, self.tol)
            logger.debug(f"Search start {start} on {cell.label()}: cost {fit.cost:.3e}, {fit.nfev} evaluations")
            if report.passed:
                return q, report.max_residual(), start
        return None

    def find(self, pres: Presentation, b: str, dim_bound: float) -> SearchResult:
        if b not in pres.objects:
            raise UnknownObject(f"Unknown object '{b}'")
        if dim_bound < 1:
            raise ValueError(f"Dimension bound must be at least 1, got {dim_bound}")
        dims = self.fp_dimensions(pres, b)
        result = SearchResult(presentation=pres.name, base=b, dim_bound=dim_bound)
        for mult in self.candidate_cells(pres, b, dim_bound):
            cell = pres.cell(mult, b, b)
            result.tried.append(mult)
            found = self.solve(cell, name=f"Q[{cell.label()}]")
            if found is None:
                logger.info(f"No Q-system found on {cell.label()} after {self.starts} starts")
                continue
            q, residual, start = found
            logger.info(f"Found Q-system on {cell.label()} (residual {residual:.3e}, start {start})")
            result.candidates.append(
                SearchCandidate(
                    multiplicities=mult,
                    fp_dim=sum(n * dims[s] for s, n in mult.items()),
                    residual=residual,
                    start=start,
                    qsystem=QSystemDoc(
                        presentation=pres.name or "C", base=b, Q=mult, m=blocks_to_doc(q.m), i=blocks_to_doc(q.i)
                    ),
                )
            )
        return result
