"""
Dagger 2-functors, 2-transformations and 2-modifications between presentations.

Functors are given on simples and extended additively. The copies of a target
simple r inside F(X) are ordered by (source simple s, copy of s in X, copy of r
in F(s)); composite functors keep the nested order G(F(X)) instead.
"""

from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from loguru import logger
from scipy import linalg as sla

from ..config import settings
from ..models.report_models import Report
from .errors import DomainMismatch, ObjectMismatch
from .linalg import Tolerance, default_tolerance, seeded_rng
from .twocat import (
    OneCell,
    Presentation,
    TwoCell,
    associator,
    id2,
    inclusion,
    summands,
    tensor_1cells,
    tensor_2cells,
    unitor_l,
    unitor_r,
)


@dataclass(eq=False)
class DagFunctor:
    src: Presentation
    tgt: Presentation
    obj_map: dict[str, str]
    cell_map: dict[str, OneCell]
    F2: dict[tuple[str, str], TwoCell]
    F1: dict[str, TwoCell]
    name: str = ""
    factors: tuple["DagFunctor", "DagFunctor"] | None = None

    def obj(self, a: str) -> str:
        try:
            return self.obj_map[a]
        except KeyError as e:
            raise ObjectMismatch(f"Functor {self.name} is not defined on object '{a}'") from e

    def on_1cell(self, x: OneCell) -> OneCell:
        if x.pres is not self.src:
            raise ObjectMismatch(f"1-cell is not in the source of {self.name}")
        if self.factors is not None:
            outer, inner = self.factors
            return outer.on_1cell(inner.on_1cell(x))
        mult: dict[str, int] = {}
        for s, n in x.mult.items():
            for r, k in self.cell_map[s].mult.items():
                mult[r] = mult.get(r, 0) + n * k
        return self.tgt.cell(mult, self.obj(x.src), self.obj(x.tgt))

    def on_2cell(self, f: TwoCell) -> TwoCell:
        if self.factors is not None:
            outer, inner = self.factors
            return outer.on_2cell(inner.on_2cell(f))
        dom, cod = self.on_1cell(f.dom), self.on_1cell(f.cod)
        support = sorted(set(f.dom.mult) | set(f.cod.mult), key=self.src.order)
        blocks = {}
        for r in set(dom.mult) | set(cod.mult):
            pieces = [
                np.kron(f.block(s), np.eye(self.cell_map[s].copies(r)))
                for s in support
                if self.cell_map[s].copies(r)
            ]
            blocks[r] = sla.block_diag(*pieces) if pieces else None
        return TwoCell(dom, cod, {r: b for r, b in blocks.items() if b is not None})

    def coheretor(self, x: OneCell, y: OneCell) -> TwoCell:
        """F²_{X,Y}: F(X)⊗F(Y) => F(X⊗Y), extended from simples through inclusions."""
        if self.factors is not None:
            outer, inner = self.factors
            return outer.on_2cell(inner.coheretor(x, y)) @ outer.coheretor(inner.on_1cell(x), inner.on_1cell(y))
        if x.dim == 1 and y.dim == 1:
            return self.F2[(next(iter(x.mult)), next(iter(y.mult)))]
        fx, fy = self.on_1cell(x), self.on_1cell(y)
        fxy = self.on_1cell(tensor_1cells(x, y))
        total = TwoCell(tensor_1cells(fx, fy), fxy, {})
        for s, a in summands(x):
            ix = inclusion(x, s, a)
            for t, b in summands(y):
                iy = inclusion(y, t, b)
                total = total + (
                    self.on_2cell(tensor_2cells(ix, iy))
                    @ self.F2[(s, t)]
                    @ tensor_2cells(self.on_2cell(ix), self.on_2cell(iy)).adj
                )
        return total

    def unit_coheretor(self, a: str) -> TwoCell:
        return self.F1[a]


def identity_functor(pres: Presentation) -> DagFunctor:
    key = ("identity_functor",)
    cached = pres._cache.get(key)
    if cached is None:
        cells = {s.name: pres.simple_cell(s.name) for s in pres.simples}
        cached = DagFunctor(
            pres,
            pres,
            {a: a for a in pres.objects},
            cells,
            {(s, t): id2(tensor_1cells(cells[s], cells[t])) for s, t in pres.chains(2)},
            {a: id2(pres.unit_cell(a)) for a in pres.objects},
            name=f"id_{pres.name}" if pres.name else "id",
        )
        pres._cache[key] = cached
    return cached


@lru_cache(maxsize=settings.engine_cache_size)
def compose_functors(g: DagFunctor, f: DagFunctor) -> DagFunctor:
    """G∘F with (G∘F)² = G(F²) ⋆ G² and (G∘F)¹ = G(F¹) ⋆ G¹."""
    if f.tgt is not g.src:
        raise ObjectMismatch(f"Cannot compose {g.name} after {f.name}")
    composite = DagFunctor(
        f.src,
        g.tgt,
        {a: g.obj(f.obj(a)) for a in f.src.objects},
        {},
        {},
        {},
        name=f"{g.name}∘{f.name}",
        factors=(g, f),
    )
    cells = {s.name: f.src.simple_cell(s.name) for s in f.src.simples}
    composite.cell_map = {s: composite.on_1cell(c) for s, c in cells.items()}
    composite.F2 = {(s, t): composite.coheretor(cells[s], cells[t]) for s, t in f.src.chains(2)}
    composite.F1 = {a: g.on_2cell(f.F1[a]) @ g.F1[f.obj(a)] for a in f.src.objects}
    return composite


def _structure_residual(functor: DagFunctor) -> float:
    for s in functor.src.simples:
        cell = functor.cell_map.get(s.name)
        if cell is None or (cell.src, cell.tgt) != (functor.obj(s.src), functor.obj(s.tgt)):
            return float("inf")
    if set(functor.F2) != set(functor.src.chains(2)) or set(functor.F1) != set(functor.src.objects):
        return float("inf")
    for (s, t), f2 in functor.F2.items():
        cs, ct = functor.src.simple_cell(s), functor.src.simple_cell(t)
        if f2.dom != tensor_1cells(functor.on_1cell(cs), functor.on_1cell(ct)):
            return float("inf")
        if f2.cod != functor.on_1cell(tensor_1cells(cs, ct)):
            return float("inf")
    for a, f1 in functor.F1.items():
        if f1.dom != functor.tgt.unit_cell(functor.obj(a)) or f1.cod != functor.on_1cell(functor.src.unit_cell(a)):
            return float("inf")
    return 0.0


def _unitarity(f: TwoCell) -> float:
    return max((f.adj @ f).distance(id2(f.dom)), (f @ f.adj).distance(id2(f.cod)))


def check_functor(functor: DagFunctor, tol: Tolerance | None = None) -> Report:
    """Unitary coheretors, hexagon associativity equation and triangles."""
    tol = tol or default_tolerance()
    bound = tol.bound()
    src = functor.src
    report = Report(title=f"functor {functor.name}")
    structure = _structure_residual(functor)
    report.record("structure", structure, bound, anchor="coheretors of a 2-functor")
    if structure != 0.0:
        return report

    cells = {s.name: src.simple_cell(s.name) for s in src.simples}
    for s, t in src.chains(2):
        report.record(f"F2-unitary[{s},{t}]", _unitarity(functor.F2[(s, t)]), bound, anchor="F² is unitary")
    for a in src.objects:
        report.record(f"F1-unitary[{a}]", _unitarity(functor.F1[a]), bound, anchor="F¹ is unitary")

    on1, on2 = functor.on_1cell, functor.on_2cell
    for s, t, w in src.chains(3):
        x, y, z = cells[s], cells[t], cells[w]
        lhs = (
            on2(associator(x, y, z))
            @ functor.coheretor(tensor_1cells(x, y), z)
            @ tensor_2cells(functor.coheretor(x, y), id2(on1(z)))
        )
        rhs = (
            functor.coheretor(x, tensor_1cells(y, z))
            @ tensor_2cells(id2(on1(x)), functor.coheretor(y, z))
            @ associator(on1(x), on1(y), on1(z))
        )
        report.record(f"hexagon[{s},{t},{w}]", lhs.distance(rhs), bound, anchor="hexagon associativity equation")

    for s in src.simples:
        x = cells[s.name]
        one_src, one_tgt = src.unit_cell(s.src), src.unit_cell(s.tgt)
        lhs = on2(unitor_l(x)) @ functor.coheretor(one_src, x) @ tensor_2cells(functor.F1[s.src], id2(on1(x)))
        report.record(f"triangle-left[{s.name}]", lhs.distance(unitor_l(on1(x))), bound, anchor="triangle")
        rhs = on2(unitor_r(x)) @ functor.coheretor(x, one_tgt) @ tensor_2cells(id2(on1(x)), functor.F1[s.tgt])
        report.record(f"triangle-right[{s.name}]", rhs.distance(unitor_r(on1(x))), bound, anchor="triangle")
    return report


# -- transformations -----------------------------------------------------------


@dataclass(eq=False)
class Transformation:
    """φ: F => G with 1-cells φ_a: F(a) -> G(a) and unitaries φ_X: F(X)⊗φ_b => φ_a⊗G(X)."""

    source: DagFunctor
    target: DagFunctor
    comp0: dict[str, OneCell]
    comp1: dict[str, TwoCell]
    formula: Callable[[OneCell], TwoCell] | None = field(default=None, repr=False)
    name: str = ""

    def component(self, x: OneCell) -> TwoCell:
        if self.formula is not None:
            return self.formula(x)
        if x.dim == 1:
            return self.comp1[next(iter(x.mult))]
        phi_a, phi_b = self.comp0[x.src], self.comp0[x.tgt]
        fx, gx = self.source.on_1cell(x), self.target.on_1cell(x)
        total = TwoCell(tensor_1cells(fx, phi_b), tensor_1cells(phi_a, gx), {})
        for s, a in summands(x):
            i = inclusion(x, s, a)
            total = total + (
                tensor_2cells(id2(phi_a), self.target.on_2cell(i))
                @ self.comp1[s]
                @ tensor_2cells(self.source.on_2cell(i).adj, id2(phi_b))
            )
        return total


def _transformation_from_formula(
    source: DagFunctor,
    target: DagFunctor,
    comp0: dict[str, OneCell],
    formula: Callable[[OneCell], TwoCell],
    name: str,
) -> Transformation:
    pres = source.src
    comp1 = {s.name: formula(pres.simple_cell(s.name)) for s in pres.simples}
    return Transformation(source, target, comp0, comp1, formula=formula, name=name)


def identity_transformation(functor: DagFunctor) -> Transformation:
    comp0 = {a: functor.tgt.unit_cell(functor.obj(a)) for a in functor.src.objects}

    def formula(x: OneCell) -> TwoCell:
        fx = functor.on_1cell(x)
        return unitor_l(fx).adj @ unitor_r(fx)

    return _transformation_from_formula(functor, functor, comp0, formula, name=f"id_{functor.name}")


def _same_functor(f: DagFunctor, g: DagFunctor) -> bool:
    if f is g:
        return True
    if f.src is not g.src or f.tgt is not g.tgt or f.obj_map != g.obj_map:
        return False
    if any(f.cell_map[s] != g.cell_map[s] for s in f.cell_map):
        return False
    return all(f.F2[k].distance(g.F2[k]) == 0 for k in f.F2) and all(f.F1[a].distance(g.F1[a]) == 0 for a in f.F1)


def compose_trans(phi: Transformation, psi: Transformation) -> Transformation:
    """1-composite φ⊗ψ: F => H of φ: F => G and ψ: G => H, with (φ⊗ψ)_a = φ_a⊗ψ_a."""
    if not _same_functor(phi.target, psi.source):
        raise ObjectMismatch(f"Cannot compose {phi.name} with {psi.name}")
    comp0 = {a: tensor_1cells(phi.comp0[a], psi.comp0[a]) for a in phi.comp0}
    middle = phi.target

    def formula(x: OneCell) -> TwoCell:
        fx, gx, hx = phi.source.on_1cell(x), middle.on_1cell(x), psi.target.on_1cell(x)
        pa, pb = phi.comp0[x.src], phi.comp0[x.tgt]
        qa, qb = psi.comp0[x.src], psi.comp0[x.tgt]
        return (
            associator(pa, qa, hx).adj
            @ tensor_2cells(id2(pa), psi.component(x))
            @ associator(pa, gx, qb)
            @ tensor_2cells(phi.component(x), id2(qb))
            @ associator(fx, pb, qb).adj
        )

    return _transformation_from_formula(phi.source, psi.target, comp0, formula, name=f"{phi.name}⊗{psi.name}")


def whisker_left(g: DagFunctor, phi: Transformation) -> Transformation:
    """G∘φ: G∘F => G∘F' with components G²^* ⋆ G(φ_X) ⋆ G²."""
    source, target = compose_functors(g, phi.source), compose_functors(g, phi.target)
    comp0 = {a: g.on_1cell(phi.comp0[a]) for a in phi.comp0}

    def formula(x: OneCell) -> TwoCell:
        pa, pb = phi.comp0[x.src], phi.comp0[x.tgt]
        fx, f2x = phi.source.on_1cell(x), phi.target.on_1cell(x)
        return g.coheretor(pa, f2x).adj @ g.on_2cell(phi.component(x)) @ g.coheretor(fx, pb)

    return _transformation_from_formula(source, target, comp0, formula, name=f"{g.name}∘{phi.name}")


def whisker_right(gamma: Transformation, f: DagFunctor) -> Transformation:
    """γ∘F: G∘F => G'∘F with components γ_{F(X)}."""
    source, target = compose_functors(gamma.source, f), compose_functors(gamma.target, f)
    comp0 = {a: gamma.comp0[f.obj(a)] for a in f.src.objects}

    def formula(x: OneCell) -> TwoCell:
        return gamma.component(f.on_1cell(x))

    return _transformation_from_formula(source, target, comp0, formula, name=f"{gamma.name}∘{f.name}")


def hcompose_trans(gamma: Transformation, phi: Transformation) -> Transformation:
    """Cubical horizontal composite γ∘φ := (G∘φ)⊗(γ∘F')."""
    return compose_trans(whisker_left(gamma.source, phi), whisker_right(gamma, phi.target))


def check_transformation(trans: Transformation, tol: Tolerance | None = None, seed: int = 0) -> Report:
    """Unitary components, compatibility with F² and F¹, naturality on a random 2-cell."""
    tol = tol or default_tolerance()
    bound = tol.bound()
    f, g = trans.source, trans.target
    pres = f.src
    anchor = "an invertible F(a)−F′(b) bimodular 2-cell"
    report = Report(title=f"transformation {trans.name}")
    if f.src is not g.src or f.tgt is not g.tgt:
        report.fail("structure", bound, "source and target functors have different endpoints", anchor=anchor)
        return report
    for a in pres.objects:
        phi_a = trans.comp0.get(a)
        if phi_a is None or (phi_a.src, phi_a.tgt) != (f.obj(a), g.obj(a)):
            report.fail(f"structure[{a}]", bound, "component 1-cell has wrong endpoints", anchor=anchor)
            return report

    cells = {s.name: pres.simple_cell(s.name) for s in pres.simples}
    for s in pres.simples:
        report.record(f"unitary[{s.name}]", _unitarity(trans.component(cells[s.name])), bound, anchor=anchor)

    for s, t in pres.chains(2):
        x, y = cells[s], cells[t]
        pa, pb, pc = trans.comp0[x.src], trans.comp0[x.tgt], trans.comp0[y.tgt]
        fx, fy, gx, gy = f.on_1cell(x), f.on_1cell(y), g.on_1cell(x), g.on_1cell(y)
        lhs = (
            tensor_2cells(id2(pa), g.coheretor(x, y))
            @ associator(pa, gx, gy)
            @ tensor_2cells(trans.component(x), id2(gy))
            @ associator(fx, pb, gy).adj
            @ tensor_2cells(id2(fx), trans.component(y))
            @ associator(fx, fy, pc)
        )
        rhs = trans.component(tensor_1cells(x, y)) @ tensor_2cells(f.coheretor(x, y), id2(pc))
        report.record(f"monoidal[{s},{t}]", lhs.distance(rhs), bound, anchor=anchor)

    for a in pres.objects:
        pa = trans.comp0[a]
        one = pres.unit_cell(a)
        lhs = trans.component(one) @ tensor_2cells(f.F1[a], id2(pa))
        rhs = tensor_2cells(id2(pa), g.F1[a]) @ unitor_r(pa).adj @ unitor_l(pa)
        report.record(f"unit[{a}]", lhs.distance(rhs), bound, anchor=anchor)

    rng = seeded_rng(seed)
    for a in pres.objects:
        for b in pres.objects:
            hom = pres.hom(a, b)
            if not hom:
                continue
            x = pres.cell({s: 2 if k == 0 else 1 for k, s in enumerate(hom)}, a, b)
            blocks = {
                s: rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for s, n in x.mult.items()
            }
            h = TwoCell(x, x, blocks)
            lhs = trans.component(x) @ tensor_2cells(f.on_2cell(h), id2(trans.comp0[b]))
            rhs = tensor_2cells(id2(trans.comp0[a]), g.on_2cell(h)) @ trans.component(x)
            report.record(f"naturality[{a},{b}]", lhs.distance(rhs), bound * max(1.0, h.opnorm()), anchor=anchor)
    return report


# -- modifications -------------------------------------------------------------


@dataclass(eq=False)
class Modification:
    """n: φ => ψ with 2-cells n_a: φ_a => ψ_a."""

    source: Transformation
    target: Transformation
    comp: dict[str, TwoCell]
    name: str = ""


def check_modification(mod: Modification, tol: Tolerance | None = None) -> Report:
    """Sliding equation ψ_X ⋆ (id⊗n_b) = (n_a⊗id) ⋆ φ_X on every simple."""
    tol = tol or default_tolerance()
    bound = tol.bound()
    phi, psi = mod.source, mod.target
    anchor = "consists of a 2-cell n_a"
    report = Report(title=f"modification {mod.name}")
    if not (_same_functor(phi.source, psi.source) and _same_functor(phi.target, psi.target)):
        report.fail("structure", bound, "transformations have different functors", anchor=anchor)
        return report
    pres = phi.source.src
    for a in pres.objects:
        n_a = mod.comp.get(a)
        if n_a is None or n_a.dom != phi.comp0[a] or n_a.cod != psi.comp0[a]:
            report.fail(f"structure[{a}]", bound, "component has wrong domain or codomain", anchor=anchor)
            return report

    for s in pres.simples:
        x = pres.simple_cell(s.name)
        fx, gx = phi.source.on_1cell(x), phi.target.on_1cell(x)
        lhs = psi.component(x) @ tensor_2cells(id2(fx), mod.comp[s.tgt])
        rhs = tensor_2cells(mod.comp[s.src], id2(gx)) @ phi.component(x)
        report.record(f"sliding[{s.name}]", lhs.distance(rhs), bound, anchor=anchor)
    return report


def identity_modification(phi: Transformation) -> Modification:
    return Modification(phi, phi, {a: id2(c) for a, c in phi.comp0.items()}, name=f"id_{phi.name}")


def vcompose_mods(second: Modification, first: Modification) -> Modification:
    """(n'⋆n)_a := n'_a ⋆ n_a."""
    if first.target is not second.source:
        raise DomainMismatch(f"Cannot compose {second.name} after {first.name}")
    comp = {a: second.comp[a] @ first.comp[a] for a in first.comp}
    return Modification(first.source, second.target, comp, name=f"{second.name}⋆{first.name}")


def hcompose_mods(n: Modification, t: Modification) -> Modification:
    """n⊗t: φ⊗ψ => φ'⊗ψ' with components n_a⊗t_a."""
    source = compose_trans(n.source, t.source)
    target = compose_trans(n.target, t.target)
    comp = {a: tensor_2cells(n.comp[a], t.comp[a]) for a in n.comp}
    return Modification(source, target, comp, name=f"{n.name}⊗{t.name}")


def dagger_mod(n: Modification) -> Modification:
    return Modification(n.target, n.source, {a: c.adj for a, c in n.comp.items()}, name=f"{n.name}^*")


def modification_norm(n: Modification) -> float:
    return max((c.opnorm() for c in n.comp.values()), default=0.0)


def interchanger(phi: Transformation, gamma: Transformation) -> Modification:
    """χ: (G∘φ)⊗(γ∘F') => (γ∘F)⊗(G'∘φ) with χ_a := γ_{φ_a}."""
    if phi.target.tgt is not gamma.source.src:
        raise ObjectMismatch(f"Cannot interchange {phi.name} and {gamma.name}")
    cubical = hcompose_trans(gamma, phi)
    opcubical = compose_trans(whisker_right(gamma, phi.source), whisker_left(gamma.target, phi))
    comp = {a: gamma.component(phi.comp0[a]) for a in phi.source.src.objects}
    return Modification(cubical, opcubical, comp, name=f"χ[{phi.name},{gamma.name}]")


# -- structure of 1-composition in Fun ----------------------------------------


def associator_modification(phi: Transformation, psi: Transformation, chi: Transformation) -> Modification:
    """(φ⊗ψ)⊗χ => φ⊗(ψ⊗χ), componentwise the associator of the target presentation."""
    source = compose_trans(compose_trans(phi, psi), chi)
    target = compose_trans(phi, compose_trans(psi, chi))
    comp = {a: associator(phi.comp0[a], psi.comp0[a], chi.comp0[a]) for a in phi.comp0}
    return Modification(source, target, comp, name=f"α[{phi.name},{psi.name},{chi.name}]")


def left_unitor_modification(phi: Transformation) -> Modification:
    source = compose_trans(identity_transformation(phi.source), phi)
    comp = {a: unitor_l(c) for a, c in phi.comp0.items()}
    return Modification(source, phi, comp, name=f"λ[{phi.name}]")


def right_unitor_modification(phi: Transformation) -> Modification:
    source = compose_trans(phi, identity_transformation(phi.target))
    comp = {a: unitor_r(c) for a, c in phi.comp0.items()}
    return Modification(source, phi, comp, name=f"ρ[{phi.name}]")


def reindexing(f: DagFunctor, g: DagFunctor, x: OneCell) -> TwoCell:
    """Permutation G(X) => F(X) between the copy orders of two functors with the same cells on simples."""
    total = TwoCell(g.on_1cell(x), f.on_1cell(x), {})
    for s, a in summands(x):
        i = inclusion(x, s, a)
        total = total + f.on_2cell(i) @ g.on_2cell(i).adj
    return total


def functor_deviation(f: DagFunctor, g: DagFunctor) -> float:
    """Largest entrywise difference of the data of two functors; inf if the shapes differ."""
    if f.src is not g.src or f.tgt is not g.tgt or f.obj_map != g.obj_map:
        return float("inf")
    if any(f.cell_map[s] != g.cell_map[s] for s in f.cell_map):
        return float("inf")
    try:
        deviation = max((f.F2[k].distance(g.F2[k]) for k in f.F2), default=0.0)
        deviation = max(deviation, max((f.F1[a].distance(g.F1[a]) for a in f.F1), default=0.0))
    except (KeyError, DomainMismatch) as e:
        logger.debug(f"Functor data differs structurally: {str(e)}")
        return float("inf")
    return deviation

