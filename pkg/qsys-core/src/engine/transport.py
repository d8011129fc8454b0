"""
Transport of functors, transformations and modifications through completion.

Every construction is first carried out on ambient Q-systems and bimodules and
then read off in the skeletal presentations of the completions through
`Completion.coordinates`.
"""

from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache

from loguru import logger

from ..config import settings
from ..models.report_models import Report
from .completion import Completion, Realization
from .errors import QSystemMismatch
from .functoriality import (
    DagFunctor,
    Modification,
    Transformation,
    compose_functors,
    compose_trans,
    functor_deviation,
    reindexing,
)
from .linalg import Tolerance, default_tolerance, is_projection
from .qsystem import (
    Bimodule,
    QSystem,
    free_bimodule,
    rel_tensor,
    same_qsystem,
    split_subbimodule,
    trivial_qsystem,
)
from .twocat import (
    OneCell,
    Presentation,
    TwoCell,
    associator,
    decomposition,
    id2,
    inclusion,
    tensor_1cells,
    tensor_2cells,
    unitor_l,
    unitor_r,
)


# -- ambient QSys(F) -----------------------------------------------------------


@dataclass(eq=False)
class QSysFunctor:
    """QSys(F) on ambient Q-systems, bimodules and intertwiners; one of these per functor."""

    base: DagFunctor
    _qsystems: dict[QSystem, QSystem] = field(default_factory=dict, repr=False)
    _bimodules: dict[Bimodule, Bimodule] = field(default_factory=dict, repr=False)

    @property
    def name(self) -> str:
        return f"QSys({self.base.name})"

    def on_qsystem(self, q: QSystem) -> QSystem:
        image = self._qsystems.get(q)
        if image is None:
            f = self.base
            m = f.on_2cell(q.m) @ f.coheretor(q.Q, q.Q)
            i = f.on_2cell(q.i) @ f.unit_coheretor(q.base)
            image = QSystem(f.obj(q.base), f.on_1cell(q.Q), m, i, name=f"{f.name}({q.label()})")
            self._qsystems[q] = image
        return image

    def on_bimodule(self, bim: Bimodule) -> Bimodule:
        image = self._bimodules.get(bim)
        if image is None:
            f = self.base
            lam = f.on_2cell(bim.lam) @ f.coheretor(bim.left.Q, bim.X)
            rho = f.on_2cell(bim.rho) @ f.coheretor(bim.X, bim.right.Q)
            image = Bimodule(
                self.on_qsystem(bim.left), self.on_qsystem(bim.right), f.on_1cell(bim.X), lam, rho, name=bim.name
            )
            self._bimodules[bim] = image
        return image

    def on_intertwiner(self, g: TwoCell) -> TwoCell:
        return self.base.on_2cell(g)

    def coheretor(self, m: Bimodule, n: Bimodule) -> TwoCell:
        """F(u_{M,N}) ⋆ F²_{X,Y} ⋆ u^*_{F(M),F(N)}: F(M)⊗F(N) => F(M⊗N)."""
        f = self.base
        return (
            f.on_2cell(rel_tensor(m, n).u)
            @ f.coheretor(m.X, n.X)
            @ rel_tensor(self.on_bimodule(m), self.on_bimodule(n)).u.adj
        )

    def unit_coheretor(self, q: QSystem) -> TwoCell:
        return id2(self.on_qsystem(q).Q)


@lru_cache(maxsize=settings.engine_cache_size)
def qsys_ambient(functor: DagFunctor) -> QSysFunctor:
    return QSysFunctor(functor)


@dataclass(eq=False)
class ComposedQSysFunctor:
    """QSys(G)∘QSys(F), composed level by level."""

    outer: QSysFunctor
    inner: QSysFunctor

    def on_qsystem(self, q: QSystem) -> QSystem:
        return self.outer.on_qsystem(self.inner.on_qsystem(q))

    def on_bimodule(self, bim: Bimodule) -> Bimodule:
        return self.outer.on_bimodule(self.inner.on_bimodule(bim))

    def on_intertwiner(self, g: TwoCell) -> TwoCell:
        return self.outer.on_intertwiner(self.inner.on_intertwiner(g))

    def coheretor(self, m: Bimodule, n: Bimodule) -> TwoCell:
        inner = self.inner
        return self.outer.on_intertwiner(inner.coheretor(m, n)) @ self.outer.coheretor(
            inner.on_bimodule(m), inner.on_bimodule(n)
        )

    def unit_coheretor(self, q: QSystem) -> TwoCell:
        return self.outer.on_intertwiner(self.inner.unit_coheretor(q)) @ self.outer.unit_coheretor(
            self.inner.on_qsystem(q)
        )


def compose_qsys_functors(outer: QSysFunctor, inner: QSysFunctor) -> ComposedQSysFunctor:
    if inner.base.tgt is not outer.base.src:
        raise QSystemMismatch(f"Cannot compose {outer.name} after {inner.name}")
    return ComposedQSysFunctor(outer, inner)


# -- skeletal functors into completions -----------------------------------------


@dataclass(eq=False)
class Transport:
    """A skeletal functor into a completion together with the ambient images of the source simples."""

    functor: DagFunctor
    target: Completion
    realizations: dict[str, Realization]
    on_intertwiner: Callable[[TwoCell], TwoCell] = field(repr=False)
    ambient: QSysFunctor | None = None
    source: Completion | None = None


def _image_realization(
    target: Completion,
    bimodule: Bimodule,
    inner: list[tuple[str, TwoCell]],
    outer_map: Callable[[TwoCell], TwoCell],
    outer: dict[str, Realization],
    cell: OneCell,
) -> Realization:
    """
    Realization of an image whose copies are ordered (inner summand, copy in its image).

    `inner` lists the summands (simple, ambient embedding) in order; `outer` holds
    the realization of the image of each simple.
    """
    embeddings: dict[str, list[TwoCell]] = {}
    for s, e in inner:
        image = outer_map(e)
        for r, maps in outer[s].embeddings.items():
            embeddings.setdefault(r, []).extend(image @ v for v in maps)
    return Realization(target.adopt(bimodule), cell, embeddings)


def _skeletal_functor(
    src: Presentation,
    target: Completion,
    obj_map: dict[str, str],
    realizations: dict[str, Realization],
    on_intertwiner: Callable[[TwoCell], TwoCell],
    product_image: Callable[[str, str], tuple[Bimodule, TwoCell]],
    channel_embedding: Callable[[str, str, str, int], TwoCell],
    unit_image: Callable[[str], tuple[Realization, TwoCell]],
    name: str,
) -> DagFunctor:
    """
    Shared assembly of skeletal functors.

    product_image(s, t) gives the ambient image of s⊗t and the ambient coheretor;
    channel_embedding(s, t, k, mu) embeds the k-summand of s⊗t ambiently before
    the functor is applied; unit_image(a) gives the realization of the image of
    1_a and the ambient unit coheretor.
    """
    pres = target.presentation
    cell_map = {s: r.cell for s, r in realizations.items()}
    f2 = {}
    for s, t in src.chains(2):
        dom = target.tensor_realization(realizations[s], realizations[t])
        image, coheretor = product_image(s, t)
        inner = [
            (k, channel_embedding(s, t, k, mu))
            for k, entries in decomposition(src.simple_cell(s), src.simple_cell(t)).items()
            for (_, _, _, _, mu) in entries
        ]
        mult: dict[str, int] = {}
        for k, _ in inner:
            for r, n in cell_map[k].mult.items():
                mult[r] = mult.get(r, 0) + n
        cod_cell = pres.cell(mult, obj_map[src.simple(s).src], obj_map[src.simple(t).tgt])
        cod = _image_realization(target, image, inner, on_intertwiner, realizations, cod_cell)
        f2[(s, t)] = target.coordinates(coheretor, dom, cod)

    f1 = {}
    for a in src.objects:
        unit_real, ambient = unit_image(a)
        f1[a] = target.coordinates(ambient, target.realize_simple(pres.unit[obj_map[a]]), unit_real)
    return DagFunctor(src, pres, obj_map, cell_map, f2, f1, name=name)


@lru_cache(maxsize=settings.engine_cache_size)
def transport_functor(functor: DagFunctor, source: Completion, target: Completion) -> Transport:
    """QSys(F) between the skeletal presentations of two completions."""
    if functor.src is not source.base or functor.tgt is not target.base:
        raise QSystemMismatch(f"Completions do not match the endpoints of {functor.name}")
    qf = qsys_ambient(functor)
    obj_map = {}
    for name, q in zip(source.names, source.qsystems, strict=True):
        found = target.find_object(qf.on_qsystem(q))
        if found is None:
            raise QSystemMismatch(f"{qf.name} sends {q.label()} outside the target completion")
        obj_map[name] = target.name_of(found)

    realizations = {
        s.name: target.decompose(qf.on_bimodule(source.simple(s.name))) for s in source.presentation.simples
    }

    def product_image(s: str, t: str) -> tuple[Bimodule, TwoCell]:
        bs, bt = source.simple(s), source.simple(t)
        return qf.on_bimodule(rel_tensor(bs, bt, source.tol).result), qf.coheretor(bs, bt)

    def unit_image(a: str) -> tuple[Realization, TwoCell]:
        q = source.qsystems[source.names.index(a)]
        unit = source.simple(source.presentation.unit[a])
        return target.decompose(qf.on_bimodule(unit)), qf.unit_coheretor(q)

    skeletal = _skeletal_functor(
        source.presentation,
        target,
        obj_map,
        realizations,
        qf.on_intertwiner,
        product_image,
        source.channel,
        unit_image,
        name=qf.name,
    )
    logger.info(f"Transported {functor.name} to {len(source.presentation.simples)} completion simples")
    return Transport(skeletal, target, realizations, qf.on_intertwiner, ambient=qf, source=source)


def qsys_functor(functor: DagFunctor, source: Completion, target: Completion) -> DagFunctor:
    return transport_functor(functor, source, target).functor


# -- strictness of QSys on 1-composites ------------------------------------------


@lru_cache(maxsize=settings.engine_cache_size)
def transport_composite(
    g: DagFunctor, f: DagFunctor, source: Completion, middle: Completion, target: Completion
) -> Transport:
    """
    QSys(G∘F) with the realizations inherited from QSys(F) and QSys(G).

    The image of a simple is decomposed as G(F(M)) = ⊕ G(r) over the summands r
    of F(M), so its embeddings are G(e) ⋆ v for e from QSys(F) and v from QSys(G).
    """
    tf = transport_functor(f, source, middle)
    tg = transport_functor(g, middle, target)
    functor = compose_functors(g, f)
    qgf = qsys_ambient(functor)
    obj_map = {a: tg.functor.obj(tf.functor.obj(a)) for a in source.names}

    realizations = {}
    for s in source.presentation.simples:
        inner = tf.realizations[s.name]
        realizations[s.name] = _image_realization(
            target,
            qgf.on_bimodule(source.simple(s.name)),
            [(r, e) for r, maps in inner.embeddings.items() for e in maps],
            tg.ambient.on_intertwiner,
            tg.realizations,
            tg.functor.on_1cell(inner.cell),
        )

    def product_image(s: str, t: str) -> tuple[Bimodule, TwoCell]:
        bs, bt = source.simple(s), source.simple(t)
        return qgf.on_bimodule(rel_tensor(bs, bt, source.tol).result), qgf.coheretor(bs, bt)

    def unit_image(a: str) -> tuple[Realization, TwoCell]:
        q = source.qsystems[source.names.index(a)]
        return realizations[source.presentation.unit[a]], qgf.unit_coheretor(q)

    skeletal = _skeletal_functor(
        source.presentation,
        target,
        obj_map,
        realizations,
        qgf.on_intertwiner,
        product_image,
        source.channel,
        unit_image,
        name=qgf.name,
    )
    return Transport(skeletal, target, realizations, qgf.on_intertwiner, ambient=qgf, source=source)


def _qsystem_deviation(a: QSystem, b: QSystem) -> float:
    if a.base != b.base or a.Q != b.Q:
        return float("inf")
    return max(a.m.distance(b.m), a.i.distance(b.i))


def _bimodule_deviation(a: Bimodule, b: Bimodule) -> float:
    if a.X != b.X:
        return float("inf")
    return max(
        _qsystem_deviation(a.left, b.left),
        _qsystem_deviation(a.right, b.right),
        a.lam.distance(b.lam),
        a.rho.distance(b.rho),
    )


def _in_copy_order(whole: DagFunctor, parts: DagFunctor) -> DagFunctor:
    """parts with F² moved into the copy order of whole, which lists G(F(k)) per summand k of s⊗t."""
    src = parts.src
    f2 = {}
    for (s, t), cell in parts.F2.items():
        product = tensor_1cells(src.simple_cell(s), src.simple_cell(t))
        f2[(s, t)] = reindexing(whole, parts, product) @ cell
    return DagFunctor(parts.src, parts.tgt, parts.obj_map, parts.cell_map, f2, parts.F1, name=parts.name)


def verify_strict_1_functoriality(
    g: DagFunctor,
    f: DagFunctor,
    source: Completion,
    middle: Completion,
    target: Completion,
    tol: Tolerance | None = None,
) -> Report:
    """
    Compare QSys(G∘F) with QSys(G)∘QSys(F).

    Ambient rows cover the object map, the action on the source simples and on
    their endomorphisms, the coheretors of every composable pair and the unit
    coheretors. The skeletal row compares the functor data between the
    completions once both sides list their copies in the same order.
    """
    tol = tol or default_tolerance()
    bound = tol.bound()
    anchor = "QSys(G)∘QSys(F)=QSys(G∘F)"
    whole = qsys_ambient(compose_functors(g, f))
    parts = compose_qsys_functors(qsys_ambient(g), qsys_ambient(f))
    report = Report(title=f"strictness {g.name}∘{f.name}")
    qsystems, bimodules = source.qsystems, list(source.simples.values())

    report.record(
        "objects",
        max((_qsystem_deviation(whole.on_qsystem(q), parts.on_qsystem(q)) for q in qsystems), default=0.0),
        bound,
        anchor=anchor,
    )
    report.record(
        "unit-coheretors",
        max((whole.unit_coheretor(q).distance(parts.unit_coheretor(q)) for q in qsystems), default=0.0),
        bound,
        anchor=anchor,
    )
    report.record(
        "bimodules",
        max((_bimodule_deviation(whole.on_bimodule(m), parts.on_bimodule(m)) for m in bimodules), default=0.0),
        bound,
        anchor=anchor,
    )
    deviation = 0.0
    for m in bimodules:
        for cell in (m.lam, m.rho, m.lam.adj @ m.lam):
            deviation = max(deviation, whole.on_intertwiner(cell).distance(parts.on_intertwiner(cell)))
    report.record("intertwiners", deviation, bound, anchor=anchor)

    deviation = 0.0
    for m in bimodules:
        for n in bimodules:
            if same_qsystem(m.right, n.left, tol):
                deviation = max(deviation, whole.coheretor(m, n).distance(parts.coheretor(m, n)))
    report.record("coheretors", deviation, bound, anchor=anchor)

    skeletal = transport_composite(g, f, source, middle, target).functor
    composite = compose_functors(qsys_functor(g, middle, target), qsys_functor(f, source, middle))
    report.record("skeletal", functor_deviation(skeletal, _in_copy_order(skeletal, composite)), bound, anchor=anchor)
    logger.info(f"Strictness of {g.name}∘{f.name}: max residual {report.max_residual():.3e}")
    return report


# -- canonical inclusion -----------------------------------------------------------


def trivial_bimodule(x: OneCell) -> Bimodule:
    """X as a 1_a-1_b bimodule through the unitors."""
    pres = x.pres
    return pres.memo(
        ("trivial_bimodule", x.key),
        lambda: Bimodule(
            trivial_qsystem(pres, x.src), trivial_qsystem(pres, x.tgt), x, unitor_l(x), unitor_r(x), name=x.label()
        ),
    )


@lru_cache(maxsize=settings.engine_cache_size)
def transport_iota(completion: Completion) -> Transport:
    """ι: C -> QSys(C) sending objects to trivial Q-systems; the coheretors are the canonical identifications."""
    pres = completion.base
    obj_map = {}
    for a in pres.objects:
        found = completion.find_object(trivial_qsystem(pres, a))
        if found is None:
            raise QSystemMismatch(f"The completion has no trivial Q-system on {a}")
        obj_map[a] = completion.name_of(found)

    realizations = {s.name: completion.decompose(trivial_bimodule(pres.simple_cell(s.name))) for s in pres.simples}

    def product_image(s: str, t: str) -> tuple[Bimodule, TwoCell]:
        bs, bt = trivial_bimodule(pres.simple_cell(s)), trivial_bimodule(pres.simple_cell(t))
        return trivial_bimodule(tensor_1cells(bs.X, bt.X)), rel_tensor(bs, bt, completion.tol).u.adj

    def channel_embedding(s: str, t: str, k: str, mu: int) -> TwoCell:
        product = tensor_1cells(pres.simple_cell(s), pres.simple_cell(t))
        return inclusion(product, k, mu)

    def unit_image(a: str) -> tuple[Realization, TwoCell]:
        one = pres.unit_cell(a)
        return completion.decompose(trivial_bimodule(one)), id2(one)

    skeletal = _skeletal_functor(
        pres,
        completion,
        obj_map,
        realizations,
        lambda g: g,
        product_image,
        channel_embedding,
        unit_image,
        name=f"ι_{pres.name}" if pres.name else "ι",
    )
    return Transport(skeletal, completion, realizations, lambda g: g)


def iota(pres: Presentation, completion: Completion) -> DagFunctor:
    if completion.base is not pres:
        raise QSystemMismatch("The completion is not over this presentation")
    return transport_iota(completion).functor


# -- QSys(φ), QSys(n), QSys⊗ ------------------------------------------------------


@dataclass(eq=False)
class TransportedTransformation:
    transformation: Transformation
    twisted: dict[str, Bimodule]
    coisometries: dict[str, TwoCell]
    projections: dict[str, TwoCell]
    realizations: dict[str, Realization]


def twist_projection(phi: Transformation, q: QSystem) -> tuple[Bimodule, TwoCell]:
    """
    The projection on (F(Q)⊗φ_b)⊗G(Q) whose image is QSys(φ)_Q.

    Returns:
        (free bimodule on φ_b, projection)
    """
    fq = qsys_ambient(phi.source).on_qsystem(q)
    gq = qsys_ambient(phi.target).on_qsystem(q)
    a, b, c = fq.Q, phi.comp0[q.base], gq.Q
    free = free_bimodule(fq, b, gq)
    idc = id2(c)
    p = (
        tensor_2cells(id2(tensor_1cells(a, b)), gq.m)
        @ associator(tensor_1cells(a, b), c, c)
        @ tensor_2cells(associator(a, b, c).adj, idc)
        @ tensor_2cells(tensor_2cells(id2(a), phi.component(q.Q)), idc)
        @ tensor_2cells(associator(a, a, b), idc)
        @ tensor_2cells(tensor_2cells(fq.m.adj, id2(b)), idc)
    )
    return free, p


def _ambient_component(
    phi: Transformation, m: Bimodule, twisted: dict[QSystem, tuple[Bimodule, TwoCell]], tol: Tolerance
) -> TwoCell:
    """QSys(φ)_M: F(M)⊗_{F(Q)} Z_Q => Z_P⊗_{G(P)} G(M)."""
    fm = qsys_ambient(phi.source).on_bimodule(m)
    gm = qsys_ambient(phi.target).on_bimodule(m)
    zp, up = twisted[m.left]
    zq, uq = twisted[m.right]
    x, g = fm.X, gm.X
    pf, qf = fm.left.Q, fm.right.Q
    pg, qg = gm.left.Q, gm.right.Q
    ba, bb = phi.comp0[m.left.base], phi.comp0[m.right.base]
    chain = [
        rel_tensor(fm, zq, tol).u.adj,
        tensor_2cells(id2(x), uq.adj),
        associator(x, tensor_1cells(qf, bb), qg).adj,
        tensor_2cells(associator(x, qf, bb).adj, id2(qg)),
        tensor_2cells(tensor_2cells(fm.rho, id2(bb)), id2(qg)),
        tensor_2cells(tensor_2cells(fm.lam.adj, id2(bb)), id2(qg)),
        tensor_2cells(associator(pf, x, bb), id2(qg)),
        tensor_2cells(tensor_2cells(id2(pf), phi.component(m.X)), id2(qg)),
        associator(pf, tensor_1cells(ba, g), qg),
        tensor_2cells(id2(pf), associator(ba, g, qg)),
        tensor_2cells(id2(pf), tensor_2cells(id2(ba), gm.rho)),
        tensor_2cells(id2(pf), tensor_2cells(id2(ba), gm.lam.adj)),
        tensor_2cells(id2(pf), associator(ba, pg, g).adj),
        associator(pf, tensor_1cells(ba, pg), g).adj,
        tensor_2cells(associator(pf, ba, pg).adj, id2(g)),
        tensor_2cells(up, id2(g)),
        rel_tensor(zp, gm, tol).u,
    ]
    result = chain[0]
    for step in chain[1:]:
        result = step @ result
    return result


@lru_cache(maxsize=settings.engine_cache_size)
def transport_transformation(
    phi: Transformation, source: Completion, target: Completion
) -> TransportedTransformation:
    """QSys(φ): QSys(F) => QSys(G) between the skeletal presentations of the completions."""
    tol = target.tol
    f_transport = transport_functor(phi.source, source, target)
    g_transport = transport_functor(phi.target, source, target)

    twisted: dict[QSystem, tuple[Bimodule, TwoCell]] = {}
    by_name: dict[str, Bimodule] = {}
    coisometries: dict[str, TwoCell] = {}
    projections: dict[str, TwoCell] = {}
    realizations: dict[str, Realization] = {}
    for name, q in zip(source.names, source.qsystems, strict=True):
        free, p = twist_projection(phi, q)
        z, u = split_subbimodule(free, p, tol)
        twisted[q] = (z, u)
        by_name[name] = z
        coisometries[name] = u
        projections[name] = p
        realizations[name] = target.decompose(z)

    comp1 = {}
    for s in source.presentation.simples:
        m = source.simple(s.name)
        ambient = _ambient_component(phi, m, twisted, tol)
        dom = target.tensor_realization(f_transport.realizations[s.name], realizations[s.tgt])
        cod = target.tensor_realization(realizations[s.src], g_transport.realizations[s.name])
        comp1[s.name] = target.coordinates(ambient, dom, cod)

    comp0 = {a: r.cell for a, r in realizations.items()}
    transformation = Transformation(
        f_transport.functor, g_transport.functor, comp0, comp1, name=f"QSys({phi.name})"
    )
    return TransportedTransformation(transformation, by_name, coisometries, projections, realizations)


def qsys_transformation(phi: Transformation, source: Completion, target: Completion) -> Transformation:
    return transport_transformation(phi, source, target).transformation


def twist_projection_report(phi: Transformation, source: Completion, target: Completion) -> Report:
    """Projection residuals of the twisting projections before they are split."""
    transported = transport_transformation(phi, source, target)
    report = Report(title=f"twist projections {phi.name}")
    tol = target.tol
    for name, p in transported.projections.items():
        for s, block in p.blocks.items():
            residual = is_projection(block, tol)
            report.record(
                f"projection[{name},{s}]", residual.value, residual.bound, anchor="twisting projection"
            )
    return report


def qsys_modification(n: Modification, source: Completion, target: Completion) -> Modification:
    """QSys(n)_Q = u^ψ_Q ⋆ ((id ⊗ n_b) ⊗ id) ⋆ (u^φ_Q)^*."""
    phi = transport_transformation(n.source, source, target)
    psi = transport_transformation(n.target, source, target)
    comp = {}
    for name, q in zip(source.names, source.qsystems, strict=True):
        fq = qsys_ambient(n.source.source).on_qsystem(q)
        gq = qsys_ambient(n.source.target).on_qsystem(q)
        ambient = (
            psi.coisometries[name]
            @ tensor_2cells(tensor_2cells(id2(fq.Q), n.comp[q.base]), id2(gq.Q))
            @ phi.coisometries[name].adj
        )
        comp[name] = target.coordinates(ambient, phi.realizations[name], psi.realizations[name])
    return Modification(phi.transformation, psi.transformation, comp, name=f"QSys({n.name})")


@lru_cache(maxsize=settings.engine_cache_size)
def composite_transformation(phi: Transformation, psi: Transformation) -> Transformation:
    """φ⊗ψ, memoized so that QSys(φ⊗ψ) is transported once."""
    return compose_trans(phi, psi)


def _tensorator_ambient(
    phi: Transformation, psi: Transformation, name: str, q: QSystem, source: Completion, target: Completion
) -> TwoCell:
    """Z^φ_Q ⊗_{G(Q)} Z^ψ_Q => Z^{φ⊗ψ}_Q: merge the two copies of G(Q), pass it through ψ, merge H(Q)."""
    tp = transport_transformation(phi, source, target)
    tq = transport_transformation(psi, source, target)
    tpq = transport_transformation(composite_transformation(phi, psi), source, target)
    up, uq, upq = tp.coisometries[name], tq.coisometries[name], tpq.coisometries[name]

    a = qsys_ambient(phi.source).on_qsystem(q).Q
    gq = qsys_ambient(phi.target).on_qsystem(q)
    hq = qsys_ambient(psi.target).on_qsystem(q)
    b, c, d, e = phi.comp0[q.base], gq.Q, psi.comp0[q.base], hq.Q
    ab = tensor_1cells(a, b)
    abc = tensor_1cells(ab, c)
    chain = [
        rel_tensor(tp.twisted[name], tq.twisted[name], target.tol).u.adj,
        tensor_2cells(up.adj, uq.adj),
        associator(abc, tensor_1cells(c, d), e).adj,
        tensor_2cells(associator(abc, c, d).adj, id2(e)),
        tensor_2cells(tensor_2cells(associator(ab, c, c), id2(d)), id2(e)),
        tensor_2cells(tensor_2cells(tensor_2cells(id2(ab), gq.m), id2(d)), id2(e)),
        tensor_2cells(associator(ab, c, d), id2(e)),
        tensor_2cells(tensor_2cells(id2(ab), psi.component(q.Q)), id2(e)),
        associator(ab, tensor_1cells(d, e), e),
        tensor_2cells(id2(ab), associator(d, e, e)),
        tensor_2cells(id2(ab), tensor_2cells(id2(d), hq.m)),
        associator(ab, d, e).adj,
        tensor_2cells(associator(a, b, d), id2(e)),
        upq,
    ]
    result = chain[0]
    for step in chain[1:]:
        result = step @ result
    return result


def qsys_tensorator(phi: Transformation, psi: Transformation, source: Completion, target: Completion) -> Modification:
    """QSys⊗_{φ,ψ}: QSys(φ)⊗QSys(ψ) => QSys(φ⊗ψ)."""
    tp = transport_transformation(phi, source, target)
    tq = transport_transformation(psi, source, target)
    tpq = transport_transformation(composite_transformation(phi, psi), source, target)
    comp = {}
    for name, q in zip(source.names, source.qsystems, strict=True):
        ambient = _tensorator_ambient(phi, psi, name, q, source, target)
        dom = target.tensor_realization(tp.realizations[name], tq.realizations[name])
        comp[name] = target.coordinates(ambient, dom, tpq.realizations[name])
    return Modification(
        composite_transformation(tp.transformation, tq.transformation),
        tpq.transformation,
        comp,
        name=f"QSys⊗[{phi.name},{psi.name}]",
    )


def tensorator_associativity(
    phi: Transformation, psi: Transformation, chi: Transformation, source: Completion, target: Completion
) -> float:
    """
    Residual of the square relating QSys⊗ to the associators of 1-composition:

    QSys(α) ⋆ QSys⊗_{φ⊗ψ,χ} ⋆ (QSys⊗_{φ,ψ} ⊗ id) = QSys⊗_{φ,ψ⊗χ} ⋆ (id ⊗ QSys⊗_{ψ,χ}) ⋆ α
    """
    phi_psi, psi_chi = composite_transformation(phi, psi), composite_transformation(psi, chi)
    t_pq = qsys_tensorator(phi, psi, source, target)
    t_pq_c = qsys_tensorator(phi_psi, chi, source, target)
    t_qc = qsys_tensorator(psi, chi, source, target)
    t_p_qc = qsys_tensorator(phi, psi_chi, source, target)
    alpha = Modification(
        composite_transformation(phi_psi, chi),
        composite_transformation(phi, psi_chi),
        {a: associator(phi.comp0[a], psi.comp0[a], chi.comp0[a]) for a in phi.comp0},
        name=f"α[{phi.name},{psi.name},{chi.name}]",
    )
    moved = qsys_modification(alpha, source, target)
    zp = transport_transformation(phi, source, target).transformation.comp0
    zq = transport_transformation(psi, source, target).transformation.comp0
    zc = transport_transformation(chi, source, target).transformation.comp0
    residual = 0.0
    for a in source.names:
        lhs = moved.comp[a] @ t_pq_c.comp[a] @ tensor_2cells(t_pq.comp[a], id2(zc[a]))
        rhs = t_p_qc.comp[a] @ tensor_2cells(id2(zp[a]), t_qc.comp[a]) @ associator(zp[a], zq[a], zc[a])
        residual = max(residual, lhs.distance(rhs))
    return residual


# -- the lift ψ^F ----------------------------------------------------------------


def psi_F(functor: DagFunctor, source: Completion, target: Completion) -> Transformation:  # noqa: N802
    """
    ψ^F: ι_D∘F => QSys(F)∘ι_C with ψ^F_b = 1_{F(b)}.

    Both completions must be over trivial Q-systems only.
    """
    tol = target.tol
    iota_c, iota_d = transport_iota(source), transport_iota(target)
    qf_transport = transport_functor(functor, source, target)
    qf = qsys_ambient(functor)
    c, d = functor.src, functor.tgt
    src_functor = compose_functors(iota_d.functor, functor)
    tgt_functor = compose_functors(qf_transport.functor, iota_c.functor)

    units: dict[str, Bimodule] = {}
    unit_real: dict[str, Realization] = {}
    for b in c.objects:
        fb = functor.obj(b)
        right = qf.on_qsystem(trivial_qsystem(c, b))
        one = d.unit_cell(fb)
        rho = functor.F1[b].adj @ unitor_l(right.Q)
        units[b] = Bimodule(trivial_qsystem(d, fb), right, one, unitor_l(one), rho, name=f"ψ_{b}")
        unit_real[b] = target.decompose(units[b])

    comp1 = {}
    for s in c.simples:
        x = c.simple_cell(s.name)
        fx = functor.cell_map[s.name]
        left_image = trivial_bimodule(fx)
        right_image = qf.on_bimodule(trivial_bimodule(x))
        ambient = (
            rel_tensor(units[s.src], right_image, tol).u
            @ right_image.lam.adj
            @ left_image.rho
            @ rel_tensor(left_image, units[s.tgt], tol).u.adj
        )
        dom_real = _image_realization(
            target,
            left_image,
            [(t, inclusion(fx, t, k)) for t, n in fx.mult.items() for k in range(n)],
            lambda g: g,
            iota_d.realizations,
            src_functor.cell_map[s.name],
        )
        inner = source.decompose(trivial_bimodule(x))
        cod_real = _image_realization(
            target,
            right_image,
            [(t, e) for t, maps in inner.embeddings.items() for e in maps],
            qf.on_intertwiner,
            qf_transport.realizations,
            tgt_functor.cell_map[s.name],
        )
        dom = target.tensor_realization(dom_real, unit_real[s.tgt])
        cod = target.tensor_realization(unit_real[s.src], cod_real)
        comp1[s.name] = target.coordinates(ambient, dom, cod)

    comp0 = {b: r.cell for b, r in unit_real.items()}
    return Transformation(src_functor, tgt_functor, comp0, comp1, name=f"ψ^{functor.name}")

