from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from fca_taxonomy.context import FormalContext
from fca_taxonomy.context_io import load_context
from fca_taxonomy.lattice import ConceptLattice, build_lattice
from fca_taxonomy.stability import StabilityReport, stability_all
from fca_taxonomy.synthetic import random_context

FIXTURES = Path(__file__).parent / "fixtures"
DENSITIES = (0.1, 0.3, 0.5)


@pytest.fixture(autouse=True)
def _test_env(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("FCA_APP_ENV", "test")
    monkeypatch.setenv("FCA_THREADS", "1")


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def toy_context() -> FormalContext:
    return load_context(FIXTURES / "toy.cxt")


@pytest.fixture
def toy_lattice(toy_context: FormalContext) -> ConceptLattice:
    return build_lattice(toy_context)


@pytest.fixture
def toy_report(toy_context: FormalContext, toy_lattice: ConceptLattice) -> StabilityReport:
    return stability_all(toy_context, toy_lattice)


@pytest.fixture(scope="session")
def random_corpus() -> list[FormalContext]:
    """200 seeded contexts with at most 12 objects and 12 attributes."""
    contexts = []
    for seed in range(200):
        rng = np.random.default_rng(10_000 + seed)
        n_objects = int(rng.integers(0, 13))
        n_attributes = int(rng.integers(0, 13))
        density = DENSITIES[seed % len(DENSITIES)]
        contexts.append(random_context(n_objects, n_attributes, density, seed))
    return contexts
