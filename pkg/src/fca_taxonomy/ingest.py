"""From session-aggregated web-usage logs to user x site (or user x page) contexts.

External logs carry one row per user and visited site; internal logs add the
page of the target site. ``build_context`` applies the site allowlist, the
merge map, the observation window and the strict session threshold, then
keeps only users and attributes that still have an incidence.
"""

from __future__ import annotations

import csv
import io
import logging
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Literal

import pandas as pd
from pydantic import ValidationError

from fca_taxonomy.context import FormalContext
from fca_taxonomy.models import IngestConfig, IngestConfigFile, MergeRule, UsageRecord
from fca_taxonomy.paths import resolve_relative_to

logger = logging.getLogger(__name__)

type LogKind = Literal["external", "internal"]

EXTERNAL_HEADER = ("user_id", "site", "first_visit", "last_visit", "sessions")
INTERNAL_HEADER = ("user_id", "site", "page", "first_visit", "last_visit", "sessions")
_UNDECODABLE = re.compile("[\udc80-\udcff]")


class LogFormatError(ValueError):
    pass


class IngestConfigError(ValueError):
    pass


class EmptyContextError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class RejectedRow:
    line_no: int
    raw: str
    reason: str


@dataclass(frozen=True, slots=True)
class ParsedLog:
    records: tuple[UsageRecord, ...]
    rejects: tuple[RejectedRow, ...]


def parse_usage_log(stream: BinaryIO, kind: LogKind) -> ParsedLog:
    expected = EXTERNAL_HEADER if kind == "external" else INTERNAL_HEADER
    # undecodable bytes survive as lone surrogates so only their row is rejected
    text = io.TextIOWrapper(stream, encoding="utf-8-sig", errors="surrogateescape", newline="")
    try:
        lines = list(csv.reader(text))
    except csv.Error as exc:
        raise LogFormatError(f"{kind} usage log is not valid CSV: {exc}") from exc
    finally:
        text.detach()

    numbered = [(line_no, row) for line_no, row in enumerate(lines, start=1) if any(row)]
    if not numbered:
        raise LogFormatError(f"{kind} usage log is empty; header {','.join(expected)} is required.")
    header_line, header = numbered[0]
    if tuple(cell.strip().lower() for cell in header) != expected:
        raise LogFormatError(
            f"{kind} usage log line {header_line} must be the header "
            f"{','.join(expected)!r}, got {','.join(header)!r}."
        )

    records: list[UsageRecord] = []
    rejects: list[RejectedRow] = []
    for line_no, row in numbered[1:]:
        raw = ",".join(row)
        if _UNDECODABLE.search(raw):
            printable = raw.encode("utf-8", "surrogateescape").decode("utf-8", "replace")
            rejects.append(RejectedRow(line_no, printable, "row is not valid UTF-8"))
            continue
        if len(row) != len(expected):
            rejects.append(
                RejectedRow(line_no, raw, f"expected {len(expected)} fields, got {len(row)}")
            )
            continue
        fields = dict(zip(expected, (cell.strip() for cell in row), strict=True))
        try:
            records.append(
                UsageRecord(
                    user_id=fields["user_id"],
                    site_or_page=fields["page"] if kind == "internal" else fields["site"],
                    site=fields["site"],
                    first_visit=fields["first_visit"],
                    last_visit=fields["last_visit"],
                    sessions=fields["sessions"],
                )
            )
        except ValidationError as exc:
            reason = "; ".join(
                f"{'.'.join(str(part) for part in error['loc']) or 'row'}: {error['msg']}"
                for error in exc.errors()
            )
            rejects.append(RejectedRow(line_no, raw, reason))

    if rejects:
        logger.warning("parse_usage_log kind=%s rejected_rows=%s", kind, len(rejects))
    return ParsedLog(records=tuple(records), rejects=tuple(rejects))


def apply_merge_map(
    records: Iterable[UsageRecord], merge_map: Sequence[MergeRule]
) -> list[UsageRecord]:
    """Rename sites/pages by the first matching rule and combine what coincides.

    Values that already are a merged name are left alone, so applying the same
    map twice is the same as applying it once.
    """
    records = list(records)
    if not merge_map:
        return records
    targets = {rule.merged_name for rule in merge_map}
    renamed: list[UsageRecord] = []
    for record in records:
        name = record.site_or_page
        if name not in targets:
            rule = next((rule for rule in merge_map if rule.matches(name)), None)
            if rule is not None:
                record = record.model_copy(update={"site_or_page": rule.merged_name})
        renamed.append(record)
    return aggregate_records(renamed)


def aggregate_records(records: Iterable[UsageRecord]) -> list[UsageRecord]:
    """One record per (user, site or page): summed sessions, widest activity interval."""
    frame = _frame(records)
    if frame.empty:
        return []
    grouped = (
        frame.groupby(["user_id", "site_or_page"], sort=True)
        .agg(
            first_visit=("first_visit", "min"),
            last_visit=("last_visit", "max"),
            sessions=("sessions", "sum"),
            site=("site", _common_site),
        )
        .reset_index()
    )
    return [
        UsageRecord(
            user_id=str(row.user_id),
            site_or_page=str(row.site_or_page),
            first_visit=int(row.first_visit),
            last_visit=int(row.last_visit),
            sessions=int(row.sessions),
            site=row.site if isinstance(row.site, str) else None,
        )
        for row in grouped.itertuples(index=False)
    ]


def build_context(records: Iterable[UsageRecord], cfg: IngestConfig) -> FormalContext:
    records = list(records)
    if cfg.site_filter is not None:
        records = [
            record
            for record in records
            if (record.site or record.site_or_page) in cfg.site_filter
        ]
    aggregated = aggregate_records(apply_merge_map(records, cfg.merge_map))
    frame = _frame(aggregated)
    if frame.empty:
        raise EmptyContextError("No usage record survives the site filter.")

    keep = frame["sessions"] > cfg.min_sessions
    if cfg.window_start is not None:
        keep &= frame["last_visit"] >= cfg.window_start
    if cfg.window_end is not None:
        keep &= frame["first_visit"] < cfg.window_end
    incidence = frame.loc[keep, ["user_id", "site_or_page"]]
    if incidence.empty:
        raise EmptyContextError(
            f"No (user, site) pair has more than {cfg.min_sessions} sessions inside the window."
        )

    users = sorted(str(user) for user in incidence["user_id"].unique())
    attributes = sorted(str(name) for name in incidence["site_or_page"].unique())
    pairs = [(str(user), str(name)) for user, name in incidence.itertuples(index=False)]
    logger.info(
        "build_context records=%s pairs=%s users=%s attributes=%s min_sessions=%s",
        len(aggregated),
        len(pairs),
        len(users),
        len(attributes),
        cfg.min_sessions,
    )
    return FormalContext.from_pairs(users, attributes, pairs)


def read_merge_map(path: Path) -> tuple[MergeRule, ...]:
    rules: list[MergeRule] = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        prefix, sep, merged_name = line.partition("\t")
        if not sep or not merged_name.strip():
            raise IngestConfigError(f"{path}:{line_no}: expected 'PREFIX<TAB>MERGED_NAME'.")
        rules.append(MergeRule(prefix=prefix, merged_name=merged_name.strip()))
    return tuple(rules)


def read_allowlist(path: Path) -> frozenset[str]:
    return frozenset(
        line.strip()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    )


def load_ingest_config(path: Path, *, default_min_sessions: int = 20) -> IngestConfig:
    try:
        raw = IngestConfigFile.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise IngestConfigError(f"Invalid ingest config {path}: {exc}") from exc
    merge_map: tuple[MergeRule, ...] = ()
    if raw.merge_map_path:
        merge_map = read_merge_map(resolve_relative_to(path, raw.merge_map_path))
    site_filter = None
    if raw.site_filter_path:
        site_filter = read_allowlist(resolve_relative_to(path, raw.site_filter_path))
    try:
        return IngestConfig(
            min_sessions=raw.min_sessions if raw.min_sessions is not None else default_min_sessions,
            window_start=raw.window_start,
            window_end=raw.window_end,
            merge_map=merge_map,
            site_filter=site_filter,
        )
    except ValidationError as exc:
        raise IngestConfigError(f"Invalid ingest config {path}: {exc}") from exc


def _frame(records: Iterable[UsageRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [record.model_dump() for record in records],
        columns=["user_id", "site_or_page", "first_visit", "last_visit", "sessions", "site"],
    )


def _common_site(sites: pd.Series) -> str | None:
    values = sites.dropna().unique()
    if len(values) == 1 and not sites.isna().any():
        return str(values[0])
    return None
