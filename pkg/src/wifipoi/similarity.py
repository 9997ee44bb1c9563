"""Cosine similarity between radio fingerprints.

The score compares two fingerprints on the access points they share:
the numerator is the dot product over common MACs only, while each
denominator term is the fingerprint's full self dot product. MACs seen
by one side but not the other therefore pull the score down, which is
exactly the behaviour wanted when deciding whether two observations
came from the same place. Because RSS readings are all negative, every
product in the numerator is positive and the score lands in [0, 1].

That definition coincides with the ordinary cosine of two vectors once
absent MACs are imputed as 0, so the pairwise matrix can be built with
one dense matrix product; see similarity_matrix.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import EmptyFingerprint, TooFewFingerprints
from .model import Fingerprint

# Scores within this distance of 1.0 are collapsed to exactly 1.0, so
# identical (or proportional) fingerprints compare equal to 1 without
# float dust from the two square roots.
_ONE_EPS = 1e-12

SimilarityScore = float


def common_dot(a: Fingerprint, b: Fingerprint) -> float:
    """Dot product restricted to the MACs both fingerprints contain."""
    if len(a.rssi) > len(b.rssi):
        a, b = b, a
    return math.fsum(r * b.rssi[mac] for mac, r in a.rssi.items() if mac in b.rssi)


def self_dot(a: Fingerprint) -> float:
    """Full dot product of a fingerprint with itself."""
    return math.fsum(r * r for r in a.rssi.values())


def cosine_similarity(a: Fingerprint, b: Fingerprint) -> SimilarityScore:
    """Cosine score in [0, 1]; 0 when no MAC is shared, 1 when identical.

    The denominator uses a single square root of the product so that
    clean ratios (e.g. 1600 / sqrt(8000 * 8000) = 0.2) come out exact.
    Raises EmptyFingerprint when either side has no observations.
    """
    if len(a.rssi) == 0 or len(b.rssi) == 0:
        raise EmptyFingerprint("cannot compare an empty fingerprint")
    y = common_dot(a, b)
    if y == 0.0:
        return 0.0
    c = y / math.sqrt(self_dot(a) * self_dot(b))
    if c >= 1.0 - _ONE_EPS:
        return 1.0
    return c


def pairwise_similarities(
    fps: Sequence[Fingerprint],
) -> list[tuple[int, int, float]]:
    """Scores for all h(h-1)/2 unordered pairs, sorted by (i, j), i < j."""
    n = len(fps)
    if n < 2:
        raise TooFewFingerprints(f"need at least 2 fingerprints, got {n}")
    return [
        (i, j, cosine_similarity(fps[i], fps[j]))
        for i in range(n)
        for j in range(i + 1, n)
    ]


def similarity_matrix(fps: Sequence[Fingerprint]) -> np.ndarray:
    """All-pairs scores as a dense float array.

    Equivalent to pairwise_similarities but built as one matrix product
    over the union of MACs (absent MACs contribute 0 to numerators and
    nothing to self dot products, matching common_dot/self_dot). Applies
    the same snap-to-1 as cosine_similarity so both routes agree on the
    identity case.
    """
    n = len(fps)
    if n == 0:
        return np.zeros((0, 0))
    for fp in fps:
        if len(fp.rssi) == 0:
            raise EmptyFingerprint("cannot compare an empty fingerprint")
    macs = sorted(set().union(*(fp.rssi.keys() for fp in fps)))
    index = {mac: k for k, mac in enumerate(macs)}
    x = np.zeros((n, len(macs)))
    for i, fp in enumerate(fps):
        for mac, r in fp.rssi.items():
            x[i, index[mac]] = r
    dots = x @ x.T
    d = np.diag(dots).copy()
    sim = dots / np.sqrt(np.outer(d, d))
    sim[sim >= 1.0 - _ONE_EPS] = 1.0
    np.fill_diagonal(sim, 1.0)
    return sim
