"""
Field Smoothing

Mean filtering of sphere fields over the lattice k-NN graph.
"""

import numpy as np
from structlog import get_logger

from ..sphere.models import SphereField

logger = get_logger()


def smooth_field(field: SphereField, rounds: int = 2) -> SphereField:
    """
    Replace each value by the mean over itself and its k neighbors, `rounds` times.

    The directed graph is not symmetric, so total mass is only approximately preserved;
    the relative drift is logged.
    """
    if rounds < 0:
        raise ValueError(f"rounds must be >= 0, got {rounds}")
    knn = field.lattice.knn
    if rounds == 0 or knn.shape[1] == 0:
        return field

    values = field.values
    before = values.sum()
    for _ in range(rounds):
        values = (values + values[knn].sum(axis=1)) / (1 + knn.shape[1])

    if before > 0:
        logger.debug("field_smoothed", rounds=rounds, mass_drift=float(values.sum() / before - 1))
    return SphereField(field.lattice, values)
