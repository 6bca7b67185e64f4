import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from losscal.io import MCSampleSet, UtilityMatrix


@pytest.fixture
def diagnosis_utility():
    """4-class asymmetric gain matrix: 2.1 on the diagonal, 1.2 on the
    normal/covid rows off-diagonal, 1.4 on the two pneumonia rows."""
    values = np.array(
        [
            [2.1, 1.2, 1.2, 1.2],
            [1.4, 2.1, 1.4, 1.4],
            [1.4, 1.4, 2.1, 1.4],
            [1.2, 1.2, 1.2, 2.1],
        ]
    )
    classes = ("normal", "bacterial_pneumonia", "viral_pneumonia", "covid19")
    return UtilityMatrix(classes=classes, values=values)


def random_sample_set(rng, n_samples, n_passes, n_classes):
    """Dirichlet-random MC tensor with random labels."""
    probs = rng.dirichlet(np.ones(n_classes), size=(n_samples, n_passes))
    labels = rng.integers(0, n_classes, size=n_samples)
    return MCSampleSet(probs=probs, labels=labels)
