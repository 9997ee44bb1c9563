"""Density clustering of scan logs and derivation of visit intervals.

Canonical DBSCAN with one twist: the neighbourhood predicate is cosine
similarity of single-scan fingerprints, so the epsilon test is
C >= eps (similarity is a proximity, higher means closer). A point
whose neighbourhood reaches min_pts is a core point; clusters are the
maximal sets reachable through core points; everything else is noise.

Scans sit on a timeline, so a cluster (a place) usually appears as
several temporally contiguous runs (visits). segment_visits recovers
those runs from the label sequence.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyLog, LabelLengthMismatch
from .model import ClusterParams, Fingerprint, ScanLog
from .similarity import cosine_similarity, similarity_matrix

ClusterLabel = int

# Label 0 is reserved for noise; real clusters are numbered from 1.
NOISE: ClusterLabel = 0


def find_neighbours(point: Fingerprint, fps: Sequence[Fingerprint], eps: float) -> list[int]:
    """Indices of fingerprints scoring >= eps against `point`.

    When `point` itself is an element of `fps` its own index is always
    included (self-similarity is 1). Brute force by design; dbscan uses
    the equivalent matrix rows instead of calling this in a loop.
    """
    return [i for i, fp in enumerate(fps) if cosine_similarity(point, fp) >= eps]


def dbscan(scans: ScanLog, params: ClusterParams) -> list[ClusterLabel]:
    """Label every scan with a cluster id (>= 1) or NOISE.

    Deterministic: seeds are tried in scan-time order and border points
    join the first cluster that reaches them. Raises EmptyLog on a log
    with no entries.
    """
    n = len(scans.entries)
    if n == 0:
        raise EmptyLog(f"no scans to cluster for user {scans.user!r}")
    fps = [scan.fingerprint() for scan in scans.entries]
    sim = similarity_matrix(fps)
    # Row i of the thresholded matrix is find_neighbours(fps[i], fps, eps).
    nbrs = [np.flatnonzero(sim[i] >= params.epsilon) for i in range(n)]

    labels: list[ClusterLabel | None] = [None] * n
    cid = 0
    for seed in range(n):
        if labels[seed] is not None:
            continue
        if len(nbrs[seed]) < params.min_pts:
            labels[seed] = NOISE
            continue
        cid += 1
        labels[seed] = cid
        queue = deque(int(j) for j in nbrs[seed] if j != seed)
        while queue:
            j = queue.popleft()
            if labels[j] == NOISE:
                labels[j] = cid  # border point, claimed by the first cluster to reach it
                continue
            if labels[j] is not None:
                continue
            labels[j] = cid
            if len(nbrs[j]) >= params.min_pts:
                queue.extend(int(k) for k in nbrs[j] if labels[k] is None or labels[k] == NOISE)
    return [lab if lab is not None else NOISE for lab in labels]


@dataclass(frozen=True)
class VisitInterval:
    """One contiguous stay at a cluster: [start, end] epoch seconds.

    sub_minimal marks runs with fewer than min_pts scans; such a run is
    a genuine short revisit to a cluster formed elsewhere on the
    timeline, so it is reported rather than discarded.
    """

    label: ClusterLabel
    start: int
    end: int
    scans: int
    sub_minimal: bool = False


def segment_visits(
    scans: ScanLog, labels: Sequence[ClusterLabel], params: ClusterParams
) -> list[VisitInterval]:
    """Split each cluster's scans into maximal contiguous visit runs.

    Successive scans belong to the same run when they carry the same
    non-noise label and are at most 2 * scan_interval apart; noise
    scans break runs and produce no interval. Output is ordered by
    start time and never overlaps. Raises LabelLengthMismatch when the
    label list does not align with the log.
    """
    if len(labels) != len(scans.entries):
        raise LabelLengthMismatch(
            f"{len(labels)} labels for {len(scans.entries)} scans"
        )
    max_gap = 2 * params.scan_interval
    out: list[VisitInterval] = []
    run_label: ClusterLabel = NOISE
    run_start = run_end = run_count = 0

    def flush() -> None:
        if run_label != NOISE and run_count > 0:
            out.append(
                VisitInterval(
                    label=run_label,
                    start=run_start,
                    end=run_end,
                    scans=run_count,
                    sub_minimal=run_count < params.min_pts,
                )
            )

    for scan, label in zip(scans.entries, labels):
        t = scan.timestamp
        if label == run_label and run_count > 0 and t - run_end <= max_gap:
            run_end = t
            run_count += 1
            continue
        flush()
        run_label, run_start, run_end, run_count = label, t, t, 1
    flush()
    return out
