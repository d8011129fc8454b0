from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator


ComplexPair = tuple[float, float]
Matrix = list[list[ComplexPair]]
Blocks = dict[str, Matrix]
Multiplicities = dict[str, int]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SimpleDoc(StrictModel):
    id: str
    src: str
    tgt: str


class FusionEntry(StrictModel):
    i: str
    j: str
    k: str
    n: int = Field(default=1, ge=0)


class AssocEntry(StrictModel):
    i: str
    j: str
    k: str
    l: str  # noqa: E741
    F: Matrix  # noqa: N815


class PresentationDoc(StrictModel):
    schema_version: Literal["1"] = "1"
    name: str = ""
    objects: list[str]
    simples: list[SimpleDoc]
    unit: dict[str, str]
    fusion: list[FusionEntry] = Field(default=[])
    assoc: list[AssocEntry] = Field(default=[])
    lunit: dict[str, ComplexPair] = Field(default={})
    runit: dict[str, ComplexPair] = Field(default={})

    @field_validator("objects")
    @classmethod
    def objects_not_empty(cls, value: list[str]) -> list[str]:
        if not value:
            raise ValueError("a presentation needs at least one object")
        if len(set(value)) != len(value):
            raise ValueError("object labels must be distinct")
        return value


class QSystemDoc(StrictModel):
    presentation: str
    base: str
    builtin: Literal["trivial", "group_algebra"] | None = None
    Q: Multiplicities = Field(default={})  # noqa: N815
    m: Blocks = Field(default={})
    i: Blocks = Field(default={})
    scale_m: float = 1.0


class BimoduleDoc(StrictModel):
    left: str
    right: str
    builtin: Literal["regular"] | None = None
    X: Multiplicities = Field(default={})  # noqa: N815
    lam: Blocks = Field(default={})
    rho: Blocks = Field(default={})


class CoheretorEntry(StrictModel):
    s: str
    t: str
    blocks: Blocks = Field(default={})


class FunctorDoc(StrictModel):
    src: str
    tgt: str
    builtin: Literal["identity", "twist", "incl"] | None = None
    objects: dict[str, str] = Field(default={})
    cells: dict[str, Multiplicities] = Field(default={})
    F2: list[CoheretorEntry] = Field(default=[])  # noqa: N815
    F1: dict[str, Blocks] = Field(default={})  # noqa: N815


class TransformationDoc(StrictModel):
    source: str
    target: str
    builtin: Literal["identity", "coboundary", "inverse_coboundary"] | None = None
    comp0: dict[str, Multiplicities] = Field(default={})
    comp1: dict[str, Blocks] = Field(default={})


class ModificationDoc(StrictModel):
    source: str
    target: str
    builtin: Literal["identity"] | None = None
    scalar: ComplexPair | None = None
    comp: dict[str, Blocks] = Field(default={})


class WorkspaceDoc(StrictModel):
    """A set of named presentations and structures; presentations may be `bundled:<name>` references."""

    schema_version: Literal["1"] = "1"
    presentations: dict[str, PresentationDoc | str] = Field(default={})
    qsystems: dict[str, QSystemDoc] = Field(default={})
    bimodules: dict[str, BimoduleDoc] = Field(default={})
    functors: dict[str, FunctorDoc] = Field(default={})
    transformations: dict[str, TransformationDoc] = Field(default={})
    modifications: dict[str, ModificationDoc] = Field(default={})


class SearchCandidate(StrictModel):
    multiplicities: Multiplicities
    fp_dim: float
    residual: float
    start: int
    qsystem: QSystemDoc


class SearchResult(StrictModel):
    schema_version: Literal["1"] = "1"
    presentation: str
    base: str
    dim_bound: float
    tried: list[Multiplicities] = Field(default=[])
    candidates: list[SearchCandidate] = Field(default=[])
