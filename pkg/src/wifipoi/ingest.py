"""Wire format, batch compression, and raw-observation persistence.

Scan logs travel as line-delimited JSON, one scan per line:

    {"t":<epoch>,"dev":<id>,"aps":[["mac",rssi],...]}

Field order is fixed and MACs are canonical, so encoding is
byte-reproducible and a partial upload fails at line granularity.
Batches gzip-compress very well because MAC strings repeat in nearly
every line. The raw store keeps one row per (user, t, mac) observation
and silently skips duplicates, which makes re-ingestion a no-op.

The user never appears on the wire; it is carried out of band (the CLI
takes it from the file name) and supplied to decode_log explicitly.
"""

from __future__ import annotations

import gzip
import json
import sqlite3
import zlib
from dataclasses import dataclass
from pathlib import Path

from .errors import CorruptStream, MalformedLine, RssiOutOfRange, StorageFailure
from .model import ScanLog, ScanResult, parse_mac, rssi_in_range

UPLOAD_PERIOD = 21600  # seconds; one batch every 6 hours

_FIELDS = ("t", "dev", "aps")


def _encode_line(device: str, scan: ScanResult) -> str:
    record = {"t": scan.timestamp, "dev": device, "aps": [list(ap) for ap in scan.observations]}
    return json.dumps(record, separators=(",", ":"))


def encode_log(log: ScanLog) -> bytes:
    """Serialize a validated log; empty log encodes to an empty stream."""
    return "".join(_encode_line(log.device, s) + "\n" for s in log.entries).encode()


def _decode_line(line_no: int, line: str) -> tuple[int, str, ScanResult]:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from exc
    if not isinstance(record, dict) or sorted(record) != sorted(_FIELDS):
        raise MalformedLine(line_no, f"expected exactly the fields {list(_FIELDS)}")
    t, dev, aps = record["t"], record["dev"], record["aps"]
    if not isinstance(t, int) or isinstance(t, bool):
        raise MalformedLine(line_no, "t must be an integer timestamp")
    if not isinstance(dev, str):
        raise MalformedLine(line_no, "dev must be a string")
    if not isinstance(aps, list) or not aps:
        raise MalformedLine(line_no, "aps must be a non-empty list")
    observations = []
    seen = set()
    for entry in aps:
        if not (isinstance(entry, list) and len(entry) == 2):
            raise MalformedLine(line_no, "each ap must be a [mac, rssi] pair")
        raw_mac, rssi = entry
        if not isinstance(raw_mac, str):
            raise MalformedLine(line_no, "mac must be a string")
        mac = parse_mac(raw_mac)
        if not isinstance(rssi, int) or isinstance(rssi, bool):
            raise MalformedLine(line_no, "rssi must be an integer")
        if not rssi_in_range(rssi):
            raise RssiOutOfRange(f"line {line_no}: rssi {rssi} outside [-100, -1]")
        if mac in seen:
            raise MalformedLine(line_no, f"duplicate mac {mac}")
        seen.add(mac)
        observations.append((mac, rssi))
    return t, dev, ScanResult(t, tuple(sorted(observations)))


def decode_log(data: bytes, user: str = "") -> ScanLog:
    """Parse wire bytes back into a ScanLog for `user`.

    Blank lines are skipped; anything else malformed raises with its
    line number. All lines must name the same device and timestamps
    must be unique. Inverse of encode_log on validated logs.
    """
    device = ""
    by_time: dict[int, ScanResult] = {}
    for line_no, line in enumerate(data.decode("utf-8", errors="replace").split("\n"), 1):
        if not line.strip():
            continue
        t, dev, scan = _decode_line(line_no, line)
        if device and dev != device:
            raise MalformedLine(line_no, f"device {dev!r} conflicts with {device!r}")
        device = dev
        if t in by_time:
            raise MalformedLine(line_no, f"duplicate timestamp {t}")
        by_time[t] = scan
    entries = tuple(by_time[t] for t in sorted(by_time))
    return ScanLog(user=user, device=device, entries=entries)


def compress_batch(data: bytes) -> bytes:
    """Standard gzip member; fixed mtime so output is byte-stable."""
    return gzip.compress(data, compresslevel=9, mtime=0)


def decompress_batch(data: bytes) -> bytes:
    # gzip.decompress treats zero members as empty output; a valid
    # member is never shorter than its 10-byte header + 8-byte trailer
    if not data:
        raise CorruptStream("empty stream is not a gzip member")
    try:
        return gzip.decompress(data)
    except (gzip.BadGzipFile, EOFError, zlib.error, OSError) as exc:
        raise CorruptStream(f"not a valid gzip stream: {exc}") from exc


@dataclass(frozen=True)
class RawBatch:
    """One upload unit: scans of a single device within one period slot."""

    device: str
    scans: tuple[ScanResult, ...]
    span: tuple[int, int]

    def payload(self) -> bytes:
        """The batch's wire bytes (same line format as encode_log)."""
        return "".join(_encode_line(self.device, s) + "\n" for s in self.scans).encode()


def plan_uploads(log: ScanLog, period: int = UPLOAD_PERIOD) -> list[RawBatch]:
    """Partition a log into consecutive period-aligned upload batches.

    Batches cover [k*period, (k+1)*period) slots and are emitted only
    for slots that contain scans, mirroring an app that holds data
    until the next upload tick. Concatenating all batches reproduces
    the log exactly.
    """
    # A follow-up flag will add a connectivity mask here; for now the
    # uplink is assumed available at every period boundary.
    if period <= 0:
        raise ValueError(f"upload period must be positive, got {period}")
    buckets: dict[int, list[ScanResult]] = {}
    for scan in log.entries:
        buckets.setdefault(scan.timestamp // period, []).append(scan)
    return [
        RawBatch(
            device=log.device,
            scans=tuple(buckets[k]),
            span=(k * period, (k + 1) * period),
        )
        for k in sorted(buckets)
    ]


@dataclass(frozen=True)
class IngestReport:
    added: int
    skipped: int


class RawStore:
    """Append-only observation rows keyed by (user, t, mac).

    Shares a SQLite file happily with the summary store; the table
    namespaces are disjoint. `conn` is public for fault injection.
    """

    def __init__(self, path: str | Path = ":memory:") -> None:
        self.path = str(path)
        self.conn = sqlite3.connect(self.path)
        self.conn.execute(
            "CREATE TABLE IF NOT EXISTS raw_observations ("
            " user TEXT NOT NULL, t INTEGER NOT NULL,"
            " mac TEXT NOT NULL, rssi INTEGER NOT NULL,"
            " PRIMARY KEY (user, t, mac))"
        )
        self.conn.commit()

    def close(self) -> None:
        self.conn.close()

    def __enter__(self) -> RawStore:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def users(self) -> list[str]:
        rows = self.conn.execute("SELECT DISTINCT user FROM raw_observations ORDER BY user")
        return [user for (user,) in rows]

    def load_log(self, user: str, lo: int | None = None, hi: int | None = None) -> ScanLog:
        """Rebuild the user's scans, optionally windowed to [lo, hi)."""
        sql = "SELECT t, mac, rssi FROM raw_observations WHERE user = ?"
        params: list[object] = [user]
        if lo is not None:
            sql += " AND t >= ?"
            params.append(lo)
        if hi is not None:
            sql += " AND t < ?"
            params.append(hi)
        sql += " ORDER BY t, mac"
        by_time: dict[int, list[tuple[str, int]]] = {}
        for t, mac, rssi in self.conn.execute(sql, params):
            by_time.setdefault(t, []).append((mac, rssi))
        entries = tuple(ScanResult(t, tuple(obs)) for t, obs in sorted(by_time.items()))
        return ScanLog(user=user, device="", entries=entries)

    def export_csv(self, path: str | Path) -> int:
        """Dump all rows as `user,t,mac,rssi`; returns the row count."""
        rows = self.conn.execute(
            "SELECT user, t, mac, rssi FROM raw_observations ORDER BY user, t, mac"
        ).fetchall()
        lines = ["user,t,mac,rssi"]
        lines += [f"{user},{t},{mac},{rssi}" for user, t, mac, rssi in rows]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        return len(rows)


def store_raw(store: RawStore, log: ScanLog) -> IngestReport:
    """Append a log's observations; duplicates are skipped and counted.

    Atomic: either every new row lands or none does.
    """
    added = 0
    total = 0
    try:
        with store.conn:
            for scan in log.entries:
                for mac, rssi in scan.observations:
                    cur = store.conn.execute(
                        "INSERT OR IGNORE INTO raw_observations (user, t, mac, rssi)"
                        " VALUES (?, ?, ?, ?)",
                        (log.user, scan.timestamp, mac, rssi),
                    )
                    added += cur.rowcount
                    total += 1
    except sqlite3.Error as exc:
        raise StorageFailure(f"raw ingest for user {log.user!r} failed: {exc}") from exc
    return IngestReport(added=added, skipped=total - added)
