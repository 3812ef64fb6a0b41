from pathlib import Path

import numpy as np
import pytest

from dmkde import GaussianComponent, SyntheticSpec, generate_synthetic

# Optional user-supplied ODDS conversions (see README for the recipe);
# tests that need them skip when the files are absent.
ODDS_DIR = Path(__file__).resolve().parent.parent / "data" / "odds"


def two_cluster_spec() -> SyntheticSpec:
    """Canonical desk-scale benchmark: two Gaussian clusters of different
    spread plus far-box anomalies."""
    return SyntheticSpec(
        components=[
            GaussianComponent(np.array([-3.0, 0.0]), 0.5, 250),
            GaussianComponent(np.array([3.0, 0.0]), 2.0, 250),
        ],
        anomaly_count=25,
        box_low=np.array([-9.0, -9.0]),
        box_high=np.array([9.0, 9.0]),
        exclusion_radius=3.5,
        name="two_cluster",
    )


@pytest.fixture(scope="session")
def two_cluster_dataset():
    return generate_synthetic(two_cluster_spec(), seed=11)


def random_unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    v = rng.normal(size=(count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
