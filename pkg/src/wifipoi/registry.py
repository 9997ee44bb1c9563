"""POI registry: fingerprints, revisit matching, summary persistence.

A POI is born when density clustering finds a dense group of scans.
Its fingerprint is the per-MAC mean RSS over the member scans; a MAC
missing from some scans is averaged over the scans that did see it.
Revisit matching compares a fresh fingerprint against the user's
registered POI and reuses the best id at or above the match threshold,
so the same desk keeps the same poi_id across days.

Persistence is an embedded SQLite file with two tables, poi_properties
and poi_visits, linked by (user, poi_id). poi_id is scoped per user:
two users may both own poi_id 1. All writes go through one transaction
per upsert, so a crash mid-operation leaves the previous state intact.
"""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .clustering import VisitInterval
from .errors import EmptyCluster, StorageFailure, UnknownUser
from .model import Fingerprint, ScanResult
from .similarity import cosine_similarity

MATCH_THRESHOLD = 0.5

_SCHEMA = """
CREATE TABLE IF NOT EXISTS poi_properties (
    user        TEXT    NOT NULL,
    poi_id      INTEGER NOT NULL,
    fingerprint TEXT    NOT NULL,
    created_at  INTEGER NOT NULL,
    label       TEXT,
    PRIMARY KEY (user, poi_id)
);
CREATE TABLE IF NOT EXISTS poi_visits (
    user        TEXT    NOT NULL,
    poi_id      INTEGER NOT NULL,
    start_ts    INTEGER NOT NULL,
    end_ts      INTEGER NOT NULL,
    scans       INTEGER NOT NULL,
    sub_minimal INTEGER NOT NULL DEFAULT 0,
    PRIMARY KEY (user, poi_id, start_ts, end_ts),
    FOREIGN KEY (user, poi_id) REFERENCES poi_properties (user, poi_id)
);
"""


def build_fingerprint(cluster_scans: Sequence[ScanResult]) -> Fingerprint:
    """Average the member scans into one fingerprint.

    Each MAC's mean runs over the scans that observed it, not over the
    whole cluster, so an AP flickering in and out keeps its true level.
    Raises EmptyCluster on an empty input.
    """
    if not cluster_scans:
        raise EmptyCluster("cannot build a fingerprint from zero scans")
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for scan in cluster_scans:
        for mac, rssi in scan.observations:
            totals[mac] = totals.get(mac, 0.0) + rssi
            counts[mac] = counts.get(mac, 0) + 1
    return Fingerprint(
        rssi={mac: totals[mac] / counts[mac] for mac in totals},
        counts=counts,
    )


def merge_fingerprints(old: Fingerprint, new: Fingerprint) -> Fingerprint:
    """Observation-count-weighted mean of two fingerprints.

    Equivalent to rebuilding the fingerprint over the union of both
    sides' underlying scans, so the merged mean per MAC stays within
    [min, max] of the contributing observations.
    """
    rssi: dict[str, float] = {}
    counts: dict[str, int] = {}
    for mac in set(old.rssi) | set(new.rssi):
        n_old = old.counts.get(mac, 0)
        n_new = new.counts.get(mac, 0)
        total = old.rssi.get(mac, 0.0) * n_old + new.rssi.get(mac, 0.0) * n_new
        counts[mac] = n_old + n_new
        rssi[mac] = total / counts[mac]
    return Fingerprint(rssi=rssi, counts=counts)


@dataclass(frozen=True)
class PoiRecord:
    """One registered POI: identity, fingerprint, visit history."""

    poi_id: int
    user: str
    fingerprint: Fingerprint
    created_at: int
    visits: tuple[VisitInterval, ...] = ()
    label: str | None = None


def match_poi(
    fp: Fingerprint, registry: Sequence[PoiRecord], threshold: float = MATCH_THRESHOLD
) -> int | None:
    """Best-matching registered poi_id, or None for a new POI.

    Returns the record with maximal cosine similarity when that maximum
    reaches the threshold; ties break to the lowest poi_id. At
    threshold 1.0 only an exactly proportional fingerprint over the
    identical MAC set can match.
    """
    best_id: int | None = None
    best_c = -1.0
    for record in sorted(registry, key=lambda r: r.poi_id):
        c = cosine_similarity(fp, record.fingerprint)
        if c > best_c:
            best_c = c
            best_id = record.poi_id
    if best_id is not None and best_c >= threshold:
        return best_id
    return None


def encode_fingerprint(fp: Fingerprint) -> str:
    """Serialize as sorted `mac:rssi_mean:count` triples joined by ';'.

    Means use repr() so the decoded float is bit-identical.
    """
    return ";".join(
        f"{mac}:{fp.rssi[mac]!r}:{fp.counts[mac]}" for mac in sorted(fp.rssi)
    )


def decode_fingerprint(blob: str) -> Fingerprint:
    rssi: dict[str, float] = {}
    counts: dict[str, int] = {}
    for triple in blob.split(";"):
        mac, mean, count = triple.rsplit(":", 2)
        rssi[mac] = float(mean)
        counts[mac] = int(count)
    return Fingerprint(rssi=rssi, counts=counts)


class SummaryStore:
    """SQLite-backed store for POI properties and visit intervals.

    Single-writer contract: all mutation happens through upsert_poi,
    one transaction per call. `conn` is deliberately public so tests
    can inject faults between operations.
    """

    def __init__(self, path: str | Path = ":memory:") -> None:
        self.path = str(path)
        self.conn = sqlite3.connect(self.path)
        self.conn.execute("PRAGMA foreign_keys = ON")
        self.conn.executescript(_SCHEMA)
        self.conn.commit()

    def close(self) -> None:
        self.conn.close()

    def __enter__(self) -> SummaryStore:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def users(self) -> list[str]:
        rows = self.conn.execute(
            "SELECT DISTINCT user FROM poi_properties ORDER BY user"
        )
        return [user for (user,) in rows]

    def records(self, user: str) -> list[PoiRecord]:
        """All POI registered for one user, visits included, by poi_id."""
        props = self.conn.execute(
            "SELECT poi_id, fingerprint, created_at, label"
            " FROM poi_properties WHERE user = ? ORDER BY poi_id",
            (user,),
        ).fetchall()
        out = []
        for poi_id, blob, created_at, label in props:
            visit_rows = self.conn.execute(
                "SELECT start_ts, end_ts, scans, sub_minimal FROM poi_visits"
                " WHERE user = ? AND poi_id = ? ORDER BY start_ts",
                (user, poi_id),
            ).fetchall()
            visits = tuple(
                VisitInterval(poi_id, start, end, scans, bool(sub))
                for start, end, scans, sub in visit_rows
            )
            out.append(
                PoiRecord(
                    poi_id=poi_id,
                    user=user,
                    fingerprint=decode_fingerprint(blob),
                    created_at=created_at,
                    visits=visits,
                    label=label,
                )
            )
        return out

    def check_integrity(self) -> bool:
        """True when every visit row points at an existing POI."""
        orphans = self.conn.execute(
            "SELECT COUNT(*) FROM poi_visits v"
            " LEFT JOIN poi_properties p"
            " ON v.user = p.user AND v.poi_id = p.poi_id"
            " WHERE p.poi_id IS NULL"
        ).fetchone()[0]
        return orphans == 0 and not self.conn.execute(
            "PRAGMA foreign_key_check"
        ).fetchall()


def upsert_poi(
    store: SummaryStore,
    user: str,
    fp: Fingerprint,
    visits: Sequence[VisitInterval],
    threshold: float = MATCH_THRESHOLD,
    refresh: bool = True,
) -> int:
    """Register a cluster for `user` and return its stable poi_id.

    Matches against the user's existing POI first; on a match the new
    visits are appended (exact duplicates are skipped, which makes
    re-running a day a no-op) and, when `refresh` is set and anything
    new arrived, the stored fingerprint becomes the count-weighted
    merge of old and new. Otherwise the next free poi_id is allocated.
    The whole write is one transaction; on failure the store is left
    exactly as before and StorageFailure is raised.
    """
    try:
        records = store.records(user)
        matched = match_poi(fp, records, threshold)
        with store.conn:
            if matched is None:
                poi_id = max((r.poi_id for r in records), default=0) + 1
                created = min((v.start for v in visits), default=0)
                store.conn.execute(
                    "INSERT INTO poi_properties (user, poi_id, fingerprint, created_at)"
                    " VALUES (?, ?, ?, ?)",
                    (user, poi_id, encode_fingerprint(fp), created),
                )
            else:
                poi_id = matched
            added = 0
            for v in visits:
                cur = store.conn.execute(
                    "INSERT OR IGNORE INTO poi_visits"
                    " (user, poi_id, start_ts, end_ts, scans, sub_minimal)"
                    " VALUES (?, ?, ?, ?, ?, ?)",
                    (user, poi_id, v.start, v.end, v.scans, int(v.sub_minimal)),
                )
                added += cur.rowcount
            if matched is not None and refresh and added > 0:
                old = next(r.fingerprint for r in records if r.poi_id == matched)
                store.conn.execute(
                    "UPDATE poi_properties SET fingerprint = ?"
                    " WHERE user = ? AND poi_id = ?",
                    (encode_fingerprint(merge_fingerprints(old, fp)), user, poi_id),
                )
        return poi_id
    except sqlite3.Error as exc:
        raise StorageFailure(f"upsert for user {user!r} failed: {exc}") from exc


def _hhmm(ts: int) -> str:
    """Render epoch seconds as HH:mm. UTC, so output is machine-independent."""
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%H:%M")


def day_window(day: str) -> tuple[int, int]:
    """UTC epoch range [start, end) covering a YYYY-MM-DD day."""
    start = datetime.strptime(day, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    return int(start.timestamp()), int(start.timestamp()) + 86400


def daily_summary(
    store: SummaryStore, user: str, day: str
) -> list[tuple[int, str, str, str]]:
    """Visit table for one user-day: (poi_id, label, start, end) rows.

    Times render as HH:mm and rows are ordered by start, the shape the
    per-day timelines are reported in. A known user with no visits
    that day yields an empty table; an unknown user raises UnknownUser.
    """
    known = store.conn.execute(
        "SELECT 1 FROM poi_properties WHERE user = ? LIMIT 1", (user,)
    ).fetchone()
    if known is None:
        raise UnknownUser(f"no POI registered for user {user!r}")
    lo, hi = day_window(day)
    rows = store.conn.execute(
        "SELECT v.poi_id, COALESCE(p.label, ''), v.start_ts, v.end_ts"
        " FROM poi_visits v JOIN poi_properties p"
        " ON v.user = p.user AND v.poi_id = p.poi_id"
        " WHERE v.user = ? AND v.start_ts >= ? AND v.start_ts < ?"
        " ORDER BY v.start_ts",
        (user, lo, hi),
    ).fetchall()
    return [(poi_id, label, _hhmm(start), _hhmm(end)) for poi_id, label, start, end in rows]


def write_summary_csv(rows: Iterable[tuple[int, str, str, str]], path: str | Path) -> None:
    """Write summary rows with the `poi_id,label,start,end` header."""
    lines = ["poi_id,label,start,end"]
    lines += [f"{poi_id},{label},{start},{end}" for poi_id, label, start, end in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
