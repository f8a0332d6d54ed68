"""Project-root discovery and the path conventions of CLI inputs and outputs."""

from __future__ import annotations

import os
from functools import lru_cache
from pathlib import Path

ROOT_ENV_VAR = "FCA_PROJECT_ROOT"
ROOT_MARKER = "pyproject.toml"
MANIFEST_SUFFIX = ".manifest.json"


def discover_project_root(start: Path | None = None) -> Path:
    """``FCA_PROJECT_ROOT`` if set, else the nearest ancestor holding ``pyproject.toml``.

    Falls back to the working directory for installed copies without a checkout.
    """
    if override := os.getenv(ROOT_ENV_VAR):
        return Path(override).expanduser().resolve()

    origin = (start or Path(__file__)).expanduser().resolve()
    if origin.is_file():
        origin = origin.parent
    return next(
        (folder for folder in (origin, *origin.parents) if (folder / ROOT_MARKER).exists()),
        Path.cwd().resolve(),
    )


@lru_cache(maxsize=1)
def get_project_root() -> Path:
    return discover_project_root()


def resolve_relative_to(anchor_file: Path, path_value: str | Path) -> Path:
    """Resolve ``path_value`` against the directory holding ``anchor_file``."""
    path = Path(path_value).expanduser()
    if path.is_absolute():
        return path.resolve()
    return (anchor_file.expanduser().resolve().parent / path).resolve()


def manifest_path_for(output: Path) -> Path:
    return output.with_name(output.name + MANIFEST_SUFFIX)
