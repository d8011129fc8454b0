import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import ValidationError

from ..engine import bundled
from ..engine.errors import QSysError, SchemaError
from ..engine.functoriality import (
    DagFunctor,
    Modification,
    Transformation,
    identity_functor,
    identity_modification,
    identity_transformation,
)
from ..engine.qsystem import Bimodule, QSystem, regular_bimodule, trivial_qsystem
from ..engine.twocat import OneCell, Presentation, Simple, TwoCell, id2, tensor_1cells
from ..models.schema_models import (
    BimoduleDoc,
    Blocks,
    FunctorDoc,
    Matrix,
    ModificationDoc,
    PresentationDoc,
    QSystemDoc,
    TransformationDoc,
    WorkspaceDoc,
)


BUNDLED_PREFIX = "bundled:"
DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@dataclass
class Workspace:
    presentations: dict[str, Presentation] = field(default_factory=dict)
    qsystems: dict[str, QSystem] = field(default_factory=dict)
    bimodules: dict[str, Bimodule] = field(default_factory=dict)
    functors: dict[str, DagFunctor] = field(default_factory=dict)
    transformations: dict[str, Transformation] = field(default_factory=dict)
    modifications: dict[str, Modification] = field(default_factory=dict)


def matrix_to_doc(matrix: np.ndarray) -> Matrix:
    return [[(float(z.real), float(z.imag)) for z in row] for row in np.asarray(matrix)]


def blocks_to_doc(cell: TwoCell) -> Blocks:
    return {s: matrix_to_doc(block) for s, block in cell.blocks.items() if block.size}


def _lookup(table: dict, key: str, kind: str, location: str):
    try:
        return table[key]
    except KeyError as e:
        raise SchemaError(f"unknown {kind} '{key}'", location=location) from e


class LoaderService:
    """Reads schema "1" documents into engine objects and writes presentations back out"""

    # -- parsing -------------------------------------------------------------

    def read_json(self, path: str | Path) -> dict:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            logger.error(f"Error reading {path}: {str(e)}")
            raise SchemaError(f"cannot read file: {e.strerror}", location=str(path)) from e
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise SchemaError(e.msg, location=f"{path}:{e.lineno}:{e.colno}") from e

    def _validate(self, model, data: dict, path: str | Path):
        try:
            return model.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(part) for part in first["loc"])
            raise SchemaError(first["msg"], location=f"{path}: {where}") from e

    def load_presentation(self, source: str) -> Presentation:
        """A presentation from a `bundled:<name>` reference or a presentation document."""
        if source.startswith(BUNDLED_PREFIX):
            return self._bundled(source, location="command line")
        data = self.read_json(source)
        if "presentations" in data:
            workspace = self.load_workspace(source)
            if len(workspace.presentations) != 1:
                raise SchemaError("workspace must hold exactly one presentation to validate", location=source)
            return next(iter(workspace.presentations.values()))
        doc = self._validate(PresentationDoc, data, source)
        return self.presentation_from_doc(doc, location=str(source))

    def load_workspace(self, source: str) -> Workspace:
        if source.startswith(BUNDLED_PREFIX):
            workspace = Workspace()
            workspace.presentations[source[len(BUNDLED_PREFIX) :]] = self._bundled(source, "command line")
            return workspace
        data = self.read_json(source)
        if "presentations" not in data and "objects" in data:
            data = {"presentations": {"C": data}}
        doc = self._validate(WorkspaceDoc, data, source)
        workspace = self.workspace_from_doc(doc, location=str(source))
        logger.info(
            f"Loaded workspace {source}: {len(workspace.presentations)} presentations, "
            f"{len(workspace.qsystems)} Q-systems, {len(workspace.functors)} functors"
        )
        return workspace

    def _bundled(self, reference: str, location: str) -> Presentation:
        name = reference[len(BUNDLED_PREFIX) :]
        try:
            return bundled.bundled_presentation(name)
        except QSysError as e:
            raise SchemaError(str(e), location=location) from e

    # -- documents -> engine ---------------------------------------------------

    def presentation_from_doc(self, doc: PresentationDoc, location: str = "") -> Presentation:
        fusion: dict[tuple[str, str], dict[str, int]] = {}
        for entry in doc.fusion:
            fusion.setdefault((entry.i, entry.j), {})[entry.k] = entry.n
        try:
            pres = Presentation(
                tuple(doc.objects),
                tuple(Simple(s.id, s.src, s.tgt) for s in doc.simples),
                dict(doc.unit),
                fusion,
                name=doc.name,
            )
        except QSysError as e:
            raise SchemaError(str(e), location=location) from e
        for entry in doc.assoc:
            pres.assoc[(entry.i, entry.j, entry.k, entry.l)] = self._matrix(entry.F, f"{location}: assoc")
        for side, values in (("lunit", doc.lunit), ("runit", doc.runit)):
            unknown = sorted(set(values) - {s.id for s in doc.simples})
            if unknown:
                raise SchemaError(f"{side} names unknown simples: {', '.join(unknown)}", location=location)
        pres.lunit = {s: complex(*value) for s, value in doc.lunit.items()}
        pres.runit = {s: complex(*value) for s, value in doc.runit.items()}
        return pres

    def _matrix(self, data: Matrix, location: str) -> np.ndarray:
        if not data:
            return np.zeros((0, 0), dtype=np.complex128)
        widths = {len(row) for row in data}
        if len(widths) != 1:
            raise SchemaError("ragged matrix rows", location=location)
        return np.array([[complex(re, im) for re, im in row] for row in data], dtype=np.complex128).reshape(
            len(data), widths.pop()
        )

    def _cell(self, pres: Presentation, mult: dict[str, int], src: str, tgt: str, location: str) -> OneCell:
        try:
            return pres.cell(mult, src, tgt)
        except QSysError as e:
            raise SchemaError(str(e), location=location) from e

    def _two_cell(self, dom: OneCell, cod: OneCell, blocks: Blocks, location: str) -> TwoCell:
        arrays = {}
        for s, data in blocks.items():
            if s not in dom.mult and s not in cod.mult:
                raise SchemaError(f"block for simple '{s}' outside {dom.label()} => {cod.label()}", location=location)
            matrix = self._matrix(data, location=f"{location}.{s}")
            shape = (cod.copies(s), dom.copies(s))
            if matrix.size == 0 and 0 in shape:
                continue
            if matrix.shape != shape:
                raise SchemaError(f"block '{s}' has shape {matrix.shape}, expected {shape}", location=location)
            arrays[s] = matrix
        return TwoCell(dom, cod, arrays)

    def workspace_from_doc(self, doc: WorkspaceDoc, location: str = "") -> Workspace:
        workspace = Workspace()
        for name, entry in doc.presentations.items():
            where = f"{location}: presentations.{name}"
            if isinstance(entry, str):
                if not entry.startswith(BUNDLED_PREFIX):
                    raise SchemaError("presentation references must start with 'bundled:'", location=where)
                workspace.presentations[name] = self._bundled(entry, where)
            else:
                workspace.presentations[name] = self.presentation_from_doc(entry, where)
        for name, entry in doc.qsystems.items():
            workspace.qsystems[name] = self._qsystem(workspace, name, entry, f"{location}: qsystems.{name}")
        for name, entry in doc.bimodules.items():
            workspace.bimodules[name] = self._bimodule(workspace, name, entry, f"{location}: bimodules.{name}")
        for name, entry in doc.functors.items():
            workspace.functors[name] = self._functor(workspace, name, entry, f"{location}: functors.{name}")
        for name, entry in doc.transformations.items():
            where = f"{location}: transformations.{name}"
            workspace.transformations[name] = self._transformation(workspace, name, entry, where)
        for name, entry in doc.modifications.items():
            where = f"{location}: modifications.{name}"
            workspace.modifications[name] = self._modification(workspace, name, entry, where)
        return workspace

    def _qsystem(self, workspace: Workspace, name: str, doc: QSystemDoc, location: str) -> QSystem:
        pres = _lookup(workspace.presentations, doc.presentation, "presentation", location)
        if doc.base not in pres.objects:
            raise SchemaError(f"unknown object '{doc.base}'", location=location)
        if doc.builtin == "trivial":
            q = trivial_qsystem(pres, doc.base)
        elif doc.builtin == "group_algebra":
            q = bundled.group_algebra(pres)
            q = QSystem(q.base, q.Q, q.m, q.i, name=name)
        else:
            cell = self._cell(pres, doc.Q, doc.base, doc.base, location)
            m = self._two_cell(tensor_1cells(cell, cell), cell, doc.m, f"{location}.m")
            i = self._two_cell(pres.unit_cell(doc.base), cell, doc.i, f"{location}.i")
            q = QSystem(doc.base, cell, m, i, name=name)
        if doc.scale_m != 1.0:
            q = QSystem(q.base, q.Q, q.m * doc.scale_m, q.i, name=name)
        return q

    def _bimodule(self, workspace: Workspace, name: str, doc: BimoduleDoc, location: str) -> Bimodule:
        left = _lookup(workspace.qsystems, doc.left, "Q-system", location)
        right = _lookup(workspace.qsystems, doc.right, "Q-system", location)
        if doc.builtin == "regular":
            if left is not right:
                raise SchemaError("the regular bimodule needs left = right", location=location)
            return regular_bimodule(left)
        if left.pres is not right.pres:
            raise SchemaError("left and right Q-systems live in different presentations", location=location)
        x = self._cell(left.pres, doc.X, left.base, right.base, location)
        lam = self._two_cell(tensor_1cells(left.Q, x), x, doc.lam, f"{location}.lam")
        rho = self._two_cell(tensor_1cells(x, right.Q), x, doc.rho, f"{location}.rho")
        return Bimodule(left, right, x, lam, rho, name=name)

    def _functor(self, workspace: Workspace, name: str, doc: FunctorDoc, location: str) -> DagFunctor:
        src = _lookup(workspace.presentations, doc.src, "presentation", location)
        tgt = _lookup(workspace.presentations, doc.tgt, "presentation", location)
        if doc.builtin is not None:
            functor = {
                "identity": lambda: identity_functor(src),
                "twist": bundled.twisted_autoequivalence,
                "incl": bundled.inclusion_functor,
            }[doc.builtin]()
            if functor.src is not src or functor.tgt is not tgt:
                raise SchemaError(f"builtin functor '{doc.builtin}' does not match src/tgt", location=location)
            return functor

        obj_map = dict(doc.objects)
        functor = DagFunctor(src, tgt, obj_map, {}, {}, {}, name=name)
        try:
            for s in src.simples:
                mult = _lookup(doc.cells, s.name, "cell image of simple", location)
                functor.cell_map[s.name] = self._cell(tgt, mult, functor.obj(s.src), functor.obj(s.tgt), location)
            for entry in doc.F2:
                cs, ct = src.simple_cell(entry.s), src.simple_cell(entry.t)
                dom = tensor_1cells(functor.on_1cell(cs), functor.on_1cell(ct))
                cod = functor.on_1cell(tensor_1cells(cs, ct))
                functor.F2[(entry.s, entry.t)] = self._two_cell(dom, cod, entry.blocks, f"{location}.F2")
            for a, blocks in doc.F1.items():
                dom, cod = tgt.unit_cell(functor.obj(a)), functor.on_1cell(src.unit_cell(a))
                functor.F1[a] = self._two_cell(dom, cod, blocks, f"{location}.F1.{a}")
        except SchemaError:
            raise
        except QSysError as e:
            raise SchemaError(str(e), location=location) from e
        return functor

    def _transformation(
        self, workspace: Workspace, name: str, doc: TransformationDoc, location: str
    ) -> Transformation:
        source = _lookup(workspace.functors, doc.source, "functor", location)
        target = _lookup(workspace.functors, doc.target, "functor", location)
        if doc.builtin is not None:
            trans = {
                "identity": lambda: identity_transformation(source),
                "coboundary": bundled.coboundary_transformation,
                "inverse_coboundary": bundled.inverse_coboundary_transformation,
            }[doc.builtin]()
            if trans.source is not source or trans.target is not target:
                raise SchemaError(f"builtin transformation '{doc.builtin}' does not match its functors", location)
            return trans

        pres = source.tgt
        comp0 = {}
        try:
            for a in source.src.objects:
                mult = _lookup(doc.comp0, a, "component object", location)
                comp0[a] = self._cell(pres, mult, source.obj(a), target.obj(a), f"{location}.comp0.{a}")
            comp1 = {}
            for s, blocks in doc.comp1.items():
                simple = source.src.simple(s)
                x = source.src.simple_cell(s)
                dom = tensor_1cells(source.on_1cell(x), comp0[simple.tgt])
                cod = tensor_1cells(comp0[simple.src], target.on_1cell(x))
                comp1[s] = self._two_cell(dom, cod, blocks, f"{location}.comp1.{s}")
        except SchemaError:
            raise
        except QSysError as e:
            raise SchemaError(str(e), location=location) from e
        missing = [s.name for s in source.src.simples if s.name not in comp1]
        if missing:
            raise SchemaError(f"missing components for {', '.join(missing)}", location=location)
        return Transformation(source, target, comp0, comp1, name=name)

    def _modification(self, workspace: Workspace, name: str, doc: ModificationDoc, location: str) -> Modification:
        source = _lookup(workspace.transformations, doc.source, "transformation", location)
        target = _lookup(workspace.transformations, doc.target, "transformation", location)
        if doc.builtin == "identity" or doc.scalar is not None:
            if source is not target:
                raise SchemaError("identity and scalar modifications need source = target", location=location)
            if doc.scalar is None:
                return identity_modification(source)
            c = complex(*doc.scalar)
            return Modification(source, target, {a: id2(cell) * c for a, cell in source.comp0.items()}, name=name)
        comp = {}
        for a, blocks in doc.comp.items():
            if a not in source.comp0:
                raise SchemaError(f"unknown object '{a}'", location=location)
            comp[a] = self._two_cell(source.comp0[a], target.comp0[a], blocks, f"{location}.comp.{a}")
        return Modification(source, target, comp, name=name)

    # -- engine -> documents ---------------------------------------------------

    def presentation_to_doc(self, pres: Presentation) -> PresentationDoc:
        fusion = [
            {"i": i, "j": j, "k": k, "n": n}
            for (i, j) in sorted(pres.fusion, key=lambda key: (pres.order(key[0]), pres.order(key[1])))
            for k, n in pres.products(i, j)
        ]
        assoc = [
            {**dict(zip("ijkl", key, strict=True)), "F": matrix_to_doc(pres.assoc[key])}
            for key in sorted(pres.assoc, key=lambda entry: tuple(pres.order(s) for s in entry))
        ]
        return PresentationDoc(
            name=pres.name,
            objects=list(pres.objects),
            simples=[{"id": s.name, "src": s.src, "tgt": s.tgt} for s in pres.simples],
            unit=dict(pres.unit),
            fusion=fusion,
            assoc=assoc,
            lunit={s.name: (pres.lunit_of(s.name).real, pres.lunit_of(s.name).imag) for s in pres.simples},
            runit={s.name: (pres.runit_of(s.name).real, pres.runit_of(s.name).imag) for s in pres.simples},
        )

    def export_presentation(self, pres: Presentation) -> str:
        """Schema "1" JSON; byte-identical for identical presentations."""
        return json.dumps(self.presentation_to_doc(pres).model_dump(mode="json"), indent=2) + "\n"

    def write_presentation(self, pres: Presentation, path: str | Path) -> None:
        try:
            Path(path).write_text(self.export_presentation(pres), encoding="utf-8")
        except OSError as e:
            logger.error(f"Error writing presentation to {path}: {str(e)}")
            raise SchemaError(f"cannot write file: {e.strerror}", location=str(path)) from e
        logger.info(f"Wrote presentation {pres.name or '<unnamed>'} to {path}")
