from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class UsageRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    user_id: str = Field(min_length=1)
    site_or_page: str = Field(min_length=1)
    first_visit: int
    last_visit: int
    sessions: int = Field(ge=1)
    site: str | None = None

    @model_validator(mode="after")
    def validate_interval(self) -> UsageRecord:
        if self.first_visit > self.last_visit:
            raise ValueError("first_visit must not be later than last_visit.")
        return self


class MergeRule(BaseModel):
    model_config = ConfigDict(frozen=True)

    prefix: str
    merged_name: str = Field(min_length=1)

    def matches(self, value: str) -> bool:
        return value.startswith(self.prefix.removesuffix("*"))


class IngestConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    min_sessions: int = Field(default=20, ge=0)
    window_start: int | None = None
    window_end: int | None = None
    merge_map: tuple[MergeRule, ...] = ()
    site_filter: frozenset[str] | None = None

    @model_validator(mode="after")
    def validate_window(self) -> IngestConfig:
        if (
            self.window_start is not None
            and self.window_end is not None
            and self.window_start >= self.window_end
        ):
            raise ValueError("window_start must be earlier than window_end.")
        return self


class IngestConfigFile(BaseModel):
    """On-disk ingest configuration; list files are relative to the config file."""

    min_sessions: int | None = Field(default=None, ge=0)
    window_start: int | None = None
    window_end: int | None = None
    merge_map_path: str | None = None
    site_filter_path: str | None = None


class ConceptDocument(BaseModel):
    id: int
    extent: list[str]
    intent: list[str]


class LatticeDocument(BaseModel):
    concepts: list[ConceptDocument]
    edges: list[tuple[int, int]]


class StabilityEntryDocument(BaseModel):
    id: int
    extent_size: int
    sigma: float
    generator_count: str | None


class CriterionDocument(BaseModel):
    kind: str
    value: float | int
    exclude_extremes: bool | None = None


class SelectionDocument(LatticeDocument):
    criterion: CriterionDocument


class RunManifest(BaseModel):
    command: str
    argv: list[str]
    inputs: list[str]
    outputs: list[str]
    config: dict[str, Any]
    tool_version: str
    stage_seconds: dict[str, float] = Field(default_factory=dict)
    concept_count: int | None = None
    criterion: CriterionDocument | None = None
