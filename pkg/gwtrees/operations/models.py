import math
from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator

from gwtrees.config import settings


class EstimateRow(BaseModel):
    index: int
    mean: float
    stderr: float
    reps: int


class EstimateTable(BaseModel):
    source: str
    statistic: str
    reps: int
    censored: int = 0
    rows: list[EstimateRow]

    def mean(self, index: int) -> float:
        return self.row(index).mean

    def stderr(self, index: int) -> float:
        return self.row(index).stderr

    def row(self, index: int) -> EstimateRow:
        for r in self.rows:
            if r.index == index:
                return r
        return EstimateRow(index=index, mean=0.0, stderr=0.0, reps=self.reps)


class FnPolynomial(BaseModel):
    """f_n(z) = sum_k E P_k(T_n) z^k; coeffs[k - 1] is the z^k coefficient."""

    n: int
    offspring: str
    coeffs: list[float]

    def coefficient(self, k: int) -> float:
        if 1 <= k <= len(self.coeffs):
            return self.coeffs[k - 1]
        return 0.0


class PsiEstimate(BaseModel):
    n: int
    t: float
    psi: float
    stderr: float
    reps: int


class SuiteResult(BaseModel):
    """Outcome of one verification suite."""

    name: str
    anchor: str
    passed: bool
    metrics: dict[str, Any]
    header: list[str]
    rows: list[list[Any]]


class RunConfig(BaseModel):
    """Validated command-line request; every report embeds it."""

    command: Literal["sample", "exact", "oracle", "verify", "profile"]
    suite: str | None = None
    offspring: list[str] | None = None
    eta: list[str] | None = None
    n: list[int] | None = None
    k: int | None = None
    lmax: int | None = None
    mmax: int | None = None
    reps: int | None = None
    count: int = 1
    seed: int = Field(default_factory=lambda: settings.seed)
    beta: float = math.pi / 8
    delta: float = 0.05
    grid: int = 200
    t: list[float] | None = None
    quantities: list[str] = Field(default_factory=list)
    source: Literal["conditioned", "unconditioned", "fringe"] = "conditioned"
    max_depth: int | None = None
    statistic: str | None = None
    x: list[float] | None = None
    out: str | None = None
    format: Literal["csv", "json"] = Field(default_factory=lambda: settings.output_format)

    @field_validator("n")
    @classmethod
    def _sizes_positive(cls, value: list[int] | None) -> list[int] | None:
        if value is not None and any(n < 1 for n in value):
            raise ValueError("every n must be at least 1")
        return value

    @field_validator("k", "lmax", "mmax", "max_depth")
    @classmethod
    def _caps_non_negative(cls, value: int | None) -> int | None:
        if value is not None and value < 0:
            raise ValueError("caps must be non-negative")
        return value

    @field_validator("reps")
    @classmethod
    def _reps_at_least_two(cls, value: int | None) -> int | None:
        if value is not None and value < 2:
            raise ValueError("reps must be at least 2")
        return value

    @field_validator("count", "grid")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @field_validator("beta")
    @classmethod
    def _beta_in_range(cls, value: float) -> float:
        if not 0 < value < math.pi / 2:
            raise ValueError("beta must lie in (0, pi/2)")
        return value

    @field_validator("delta")
    @classmethod
    def _delta_positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("delta must be positive")
        return value

    @field_validator("t")
    @classmethod
    def _t_in_range(cls, value: list[float] | None) -> list[float] | None:
        if value is not None and any(abs(t) > math.pi for t in value):
            raise ValueError("t must lie in [-pi, pi]")
        return value
