import math
from enum import Enum
from typing import Any

from pydantic import BaseModel, Field, computed_field, field_serializer, model_serializer


SCHEMA_VERSION = "1"


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"


class CheckResult(BaseModel):
    id: str
    anchor: str = ""
    residual: float
    tol: float
    passed: bool = Field(serialization_alias="pass")
    detail: str | None = None

    @field_serializer("residual")
    def serialize_residual(self, residual: float) -> float | None:
        return residual if math.isfinite(residual) else None

    @model_serializer(mode="wrap")
    def serialize_model(self, handler) -> dict[str, Any]:
        data = handler(self)
        if not data.get("detail"):
            data.pop("detail", None)
        return data


class ReportDocument(BaseModel):
    """The JSON form of a Report."""

    schema_version: str = SCHEMA_VERSION
    title: str = ""
    summary: CheckStatus
    checks: list[CheckResult]
    timing: float | None = None


class Report(BaseModel):
    title: str = ""
    checks: list[CheckResult] = Field(default=[])
    timing: float | None = None

    @computed_field
    @property
    def summary(self) -> CheckStatus:
        return CheckStatus.PASS if self.passed else CheckStatus.FAIL

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def record(
        self, check_id: str, residual: float, bound: float, anchor: str = "", detail: str | None = None
    ) -> CheckResult:
        residual = float(residual)
        check = CheckResult(
            id=check_id,
            anchor=anchor,
            residual=residual,
            tol=bound,
            passed=math.isfinite(residual) and residual <= bound,
            detail=detail,
        )
        self.checks.append(check)
        return check

    def fail(self, check_id: str, bound: float, detail: str, anchor: str = "") -> CheckResult:
        return self.record(check_id, math.inf, bound, anchor=anchor, detail=detail)

    def merge(self, other: "Report", prefix: str = "") -> "Report":
        for check in other.checks:
            self.checks.append(check.model_copy(update={"id": f"{prefix}{check.id}"}))
        return self

    def summarize(self, check_id: str, other: "Report", anchor: str = "") -> CheckResult:
        """One row for a whole sub-report: its worst residual, passing iff every row of other passes."""
        worst = max(other.checks, key=lambda c: c.residual, default=None)
        failed = other.failed_ids()
        if failed:
            detail = f"failed: {', '.join(failed[:5])}" + (f" (+{len(failed) - 5})" if len(failed) > 5 else "")
        else:
            detail = f"{len(other.checks)} checks"
        check = CheckResult(
            id=check_id,
            anchor=anchor,
            residual=worst.residual if worst else 0.0,
            tol=worst.tol if worst else 0.0,
            passed=other.passed,
            detail=detail,
        )
        self.checks.append(check)
        return check

    def max_residual(self) -> float:
        return max((check.residual for check in self.checks), default=0.0)

    def failed_ids(self) -> list[str]:
        return [check.id for check in self.checks if not check.passed]

    def get(self, check_id: str) -> CheckResult:
        for check in self.checks:
            if check.id == check_id:
                return check
        raise KeyError(check_id)

    def to_json(self, include_timing: bool = False) -> str:
        """Stable JSON: checks sorted by id, timing left out unless asked for."""
        document = ReportDocument(
            title=self.title,
            summary=self.summary,
            checks=sorted(self.checks, key=lambda c: c.id),
            timing=self.timing if include_timing else None,
        )
        exclude = {"timing"} if document.timing is None else None
        return document.model_dump_json(by_alias=True, exclude=exclude, indent=2)
