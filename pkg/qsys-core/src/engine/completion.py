"""
Skeletal presentation of the Q-system completion over a finite list of Q-systems.

Objects are the listed Q-systems, simples are representatives of the simple
bimodules between them, fusion channels are isometric intertwiners into relative
tensor products and F tensors are the coordinates of the completed associator
in the resulting fusion-tree bases.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from ..config import settings
from .errors import ObjectMismatch, QSystemMismatch, StructuralError
from .linalg import Tolerance, default_tolerance
from .qsystem import (
    Bimodule,
    QSystem,
    intertwiner_space,
    qsys_associator,
    rel_tensor,
    same_qsystem,
    simple_bimodules,
    tensor_intertwiners,
    unitor_left,
    unitor_right,
)
from .twocat import OneCell, Presentation, Simple, TwoCell, decomposition, id2, tensor_1cells


@dataclass(frozen=True, eq=False)
class Realization:
    """A bimodule together with its decomposition into completion simples."""

    bimodule: Bimodule
    cell: OneCell
    embeddings: dict[str, list[TwoCell]]

    def embedding(self, s: str, copy: int) -> TwoCell:
        return self.embeddings[s][copy]


def scalar(g: TwoCell) -> complex:
    """The scalar c with g = c·id on a simple bimodule."""
    dim = g.dom.dim
    return g.trace() / dim if dim else 0j


@dataclass(eq=False)
class Completion:
    base: Presentation
    qsystems: tuple[QSystem, ...]
    tol: Tolerance
    seed: int
    names: tuple[str, ...] = ()
    simples: dict[str, Bimodule] = field(default_factory=dict)
    channels: dict[tuple[str, str, str], list[TwoCell]] = field(default_factory=dict)
    presentation: Presentation | None = None

    def name_of(self, q: QSystem) -> str:
        found = self.find_object(q)
        for name, candidate in zip(self.names, self.qsystems, strict=True):
            if candidate is found:
                return name
        raise QSystemMismatch(f"Q-system {q.label()} is not an object of this completion")

    def find_object(self, q: QSystem) -> QSystem | None:
        """The completion object equal to q, by identity first and then by data."""
        for candidate in self.qsystems:
            if candidate is q:
                return candidate
        for candidate in self.qsystems:
            if same_qsystem(candidate, q, self.tol):
                return candidate
        return None

    def adopt(self, bim: Bimodule) -> Bimodule:
        """Rebind a bimodule over data-equal Q-systems onto the completion objects."""
        left, right = self.find_object(bim.left), self.find_object(bim.right)
        if left is None or right is None:
            raise QSystemMismatch(f"Bimodule {bim.label()} is not over objects of the completion")
        if left is bim.left and right is bim.right:
            return bim
        return Bimodule(left, right, bim.X, bim.lam, bim.rho, name=bim.name)

    def simple(self, sid: str) -> Bimodule:
        try:
            return self.simples[sid]
        except KeyError as e:
            raise ObjectMismatch(f"Unknown completion simple '{sid}'") from e

    def channel(self, s: str, t: str, k: str, mu: int) -> TwoCell:
        """Isometric intertwiner v: K => S⊗_Q T for the fusion channel mu."""
        return self.channels[(s, t, k)][mu]

    def realize_simple(self, sid: str) -> Realization:
        bim = self.simple(sid)
        return Realization(bim, self.presentation.simple_cell(sid), {sid: [id2(bim.X)]})

    def decompose(self, bim: Bimodule) -> Realization:
        """Express a bimodule as a direct sum of completion simples through isometric embeddings."""
        bim = self.adopt(bim)
        src, tgt = self.name_of(bim.left), self.name_of(bim.right)
        embeddings: dict[str, list[TwoCell]] = {}
        total = TwoCell(bim.X, bim.X, {})
        for sid in self.presentation.hom(src, tgt):
            rep = self.simples[sid]
            dim = rep.X.dim
            isometries = [f * math.sqrt(dim) for f in intertwiner_space(rep, bim)]
            if isometries:
                embeddings[sid] = isometries
                for e in isometries:
                    total = total + e @ e.adj
        defect = total.distance(id2(bim.X))
        if not self.tol.accepts(defect):
            raise StructuralError(f"Bimodule {bim.label()} is not a sum of completion simples (defect {defect:.3e})")
        cell = self.presentation.cell({sid: len(e) for sid, e in embeddings.items()}, src, tgt)
        return Realization(bim, cell, embeddings)

    def tensor_realization(self, x: Realization, y: Realization) -> Realization:
        """Realization of X⊗_Q Y whose embeddings follow the canonical decomposition of x.cell⊗y.cell."""
        product = rel_tensor(x.bimodule, y.bimodule, self.tol).result
        embeddings: dict[str, list[TwoCell]] = {}
        for k, entries in decomposition(x.cell, y.cell).items():
            embeddings[k] = [
                tensor_intertwiners(
                    x.embedding(s, a), y.embedding(t, b), self.simples[s], self.simples[t], x.bimodule, y.bimodule
                )
                @ self.channel(s, t, k, mu)
                for s, a, t, b, mu in entries
            ]
        return Realization(product, tensor_1cells(x.cell, y.cell), embeddings)

    def coordinates(self, g: TwoCell, dom: Realization, cod: Realization) -> TwoCell:
        """The presentation 2-cell dom.cell => cod.cell representing the intertwiner g."""
        if g.dom != dom.bimodule.X or g.cod != cod.bimodule.X:
            raise ObjectMismatch("Intertwiner does not match the given realizations")
        blocks = {}
        for s in set(dom.cell.mult) | set(cod.cell.mult):
            block = np.zeros((cod.cell.copies(s), dom.cell.copies(s)), dtype=np.complex128)
            for r, e_out in enumerate(cod.embeddings.get(s, [])):
                for c, e_in in enumerate(dom.embeddings.get(s, [])):
                    block[r, c] = scalar(e_out.adj @ g @ e_in)
            blocks[s] = block
        return TwoCell(dom.cell, cod.cell, blocks)

    def ambient(self, f: TwoCell, dom: Realization, cod: Realization) -> TwoCell:
        """Inverse of coordinates: the intertwiner dom.bimodule => cod.bimodule with blocks f."""
        g = TwoCell(dom.bimodule.X, cod.bimodule.X, {})
        for s, block in f.blocks.items():
            for r, c in zip(*np.nonzero(block), strict=True):
                g = g + cod.embedding(s, r) @ dom.embedding(s, c) * block[r, c]
        return g


def _object_names(qsystems: tuple[QSystem, ...]) -> tuple[str, ...]:
    names = []
    for k, q in enumerate(qsystems):
        name = q.name or f"Q{k}"
        if name in names:
            name = f"{name}_{k}"
        names.append(name)
    return tuple(names)


def _fusion_channels(completion: Completion, s: str, t: str) -> dict[str, list[TwoCell]]:
    reps = completion.simples
    left, right = reps[s], reps[t]
    pres = completion.presentation
    unit_left = pres.is_unit(s)
    unit_right = pres.is_unit(t)
    if unit_left:
        return {t: [unitor_left(right).adj]}
    if unit_right:
        return {s: [unitor_right(left).adj]}

    product = rel_tensor(left, right, completion.tol).result
    channels = {}
    for k in pres.hom(pres.simple(s).src, pres.simple(t).tgt):
        rep = reps[k]
        isometries = [f * math.sqrt(rep.X.dim) for f in intertwiner_space(rep, product)]
        if isometries:
            channels[k] = isometries
    return channels


def _fsymbol(completion: Completion, i: str, j: str, k: str, l: str) -> np.ndarray:  # noqa: E741
    pres = completion.presentation
    reps = completion.simples
    left_trees = pres.left_trees(i, j, k, l)
    right_trees = pres.right_trees(i, j, k, l)
    bi, bj, bk = reps[i], reps[j], reps[k]
    ij = rel_tensor(bi, bj, completion.tol).result
    jk = rel_tensor(bj, bk, completion.tol).result
    alpha = qsys_associator(bi, bj, bk)

    left = []
    for m, a, b in left_trees:
        lift = tensor_intertwiners(completion.channel(i, j, m, a), id2(bk.X), reps[m], bk, ij, bk)
        left.append(lift @ completion.channel(m, k, l, b))
    right = []
    for n, c, d in right_trees:
        lift = tensor_intertwiners(id2(bi.X), completion.channel(j, k, n, c), bi, reps[n], bi, jk)
        right.append(lift @ completion.channel(i, n, l, d))

    matrix = np.zeros((len(left), len(right)), dtype=np.complex128)
    for r, e_left in enumerate(left):
        moved = alpha @ e_left
        for c, e_right in enumerate(right):
            matrix[r, c] = scalar(e_right.adj @ moved)
    return matrix


def build_completion(
    qsystems: list[QSystem], tol: Tolerance | None = None, seed: int | None = None, name: str = ""
) -> Completion:
    """
    Compute the skeletal presentation of the completion on the given Q-systems.

    Args:
        qsystems: Nonempty list of Q-systems over one base presentation
        tol: Tolerance for splittings and decompositions
        seed: First seed of the eigen-splitting schedule

    Returns:
        Completion holding the representatives, channels and the new Presentation
    """
    if not qsystems:
        raise QSystemMismatch("Completion needs at least one Q-system")
    tol = tol or default_tolerance()
    seed = settings.qsys_seed if seed is None else seed
    base = qsystems[0].pres
    if any(q.pres is not base for q in qsystems):
        raise QSystemMismatch("All Q-systems must live in the same presentation")

    qs = tuple(qsystems)
    completion = Completion(base, qs, tol, seed, names=_object_names(qs))

    simples: list[Simple] = []
    units: dict[str, str] = {}
    for a, qa in zip(completion.names, qs, strict=True):
        for b, qb in zip(completion.names, qs, strict=True):
            reps = simple_bimodules(qa, qb, tol, seed)
            logger.info(f"Completion: {len(reps)} simple bimodules {a} -> {b}")
            for k, rep in enumerate(reps):
                sid = f"{a}|{b}:{k}"
                completion.simples[sid] = rep
                simples.append(Simple(sid, a, b))
            if a == b:
                units[a] = f"{a}|{a}:0"

    # Fusion data needs the presentation's lookups; F tensors are filled in afterwards
    skeleton = Presentation(tuple(completion.names), tuple(simples), units, {}, name=name)
    completion.presentation = skeleton
    for s in skeleton.simples:
        for t in skeleton.simples:
            if s.tgt != t.src:
                continue
            channels = _fusion_channels(completion, s.name, t.name)
            for k, isometries in channels.items():
                completion.channels[(s.name, t.name, k)] = isometries
            skeleton.fusion[(s.name, t.name)] = {k: len(v) for k, v in channels.items()}
    skeleton._memo.clear()

    for s in skeleton.simples:
        rep = completion.simples[s.name]
        lam = unitor_left(rep) @ completion.channel(skeleton.unit[s.src], s.name, s.name, 0)
        rho = unitor_right(rep) @ completion.channel(s.name, skeleton.unit[s.tgt], s.name, 0)
        skeleton.lunit[s.name] = scalar(lam)
        skeleton.runit[s.name] = scalar(rho)

    count = 0
    for i, j, k in skeleton.chains(3):
        targets = {l for m, _ in skeleton.products(i, j) for l, _ in skeleton.products(m, k)}
        for l in sorted(targets, key=skeleton.order):  # noqa: E741
            skeleton.assoc[(i, j, k, l)] = _fsymbol(completion, i, j, k, l)
            count += 1
    logger.info(f"Completion: {len(simples)} simples, {count} F tensors")
    return completion


def complete(
    qsystems: list[QSystem], tol: Tolerance | None = None, seed: int | None = None, name: str = ""
) -> Presentation:
    return build_completion(qsystems, tol, seed, name).presentation
