"""Core domain types for Wi-Fi scan processing.

MAC addresses are plain strings kept in canonical form (lowercase,
colon-separated), which makes them ordered and hashable for free; the
canonical rendering sorts the same way the underlying 48-bit value does.
All types here are immutable after construction and safe to share
between threads without synchronisation.

Timestamps are UTC epoch seconds throughout; pretty HH:mm rendering is
a presentation concern and lives in the registry/CLI layers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import EmptyScan, MalformedMac

# Valid RSS readings are in [-100, 0) dBm, i.e. [-100, -1] as integers.
RSSI_MIN = -100
RSSI_MAX = -1

_MAC_RE = re.compile(r"^[0-9a-f]{2}(?::[0-9a-f]{2}){5}$")


def parse_mac(text: str) -> str:
    """Canonicalise a MAC address to lowercase colon-separated hex.

    Accepts ':' or '-' separators and mixed case. Raises MalformedMac
    unless the input is exactly six hex octets.
    """
    mac = text.strip().lower().replace("-", ":")
    if not _MAC_RE.match(mac):
        raise MalformedMac(f"not a 48-bit MAC address: {text!r}")
    return mac


def rssi_in_range(rssi: int) -> bool:
    return RSSI_MIN <= rssi <= RSSI_MAX


@dataclass(frozen=True)
class ScanResult:
    """One Wi-Fi scan: a timestamp plus the visible (MAC, RSS) pairs."""

    timestamp: int
    observations: tuple[tuple[str, int], ...]

    def fingerprint(self) -> Fingerprint:
        """This scan viewed as a single-observation fingerprint."""
        return Fingerprint(
            rssi={mac: float(rssi) for mac, rssi in self.observations},
            counts={mac: 1 for mac, _ in self.observations},
        )


def validate_scan(raw: ScanResult) -> tuple[ScanResult, int]:
    """Clean one scan and report how many readings were dropped.

    Duplicate MACs collapse to the strongest (largest) RSS, out-of-range
    readings are dropped and counted, and the surviving observations are
    sorted by MAC so equal scans have one canonical form. Idempotent: a
    cleaned scan passes through unchanged with 0 drops. Raises EmptyScan
    when nothing valid survives.
    """
    best: dict[str, int] = {}
    dropped = 0
    for mac, rssi in raw.observations:
        if not rssi_in_range(rssi):
            dropped += 1
            continue
        if mac not in best or rssi > best[mac]:
            best[mac] = rssi
    if not best:
        raise EmptyScan(f"scan at t={raw.timestamp} has no valid observations")
    return ScanResult(raw.timestamp, tuple(sorted(best.items()))), dropped


@dataclass(frozen=True)
class ScanLog:
    """Time-ordered scans for one user/device.

    Entries carry strictly increasing timestamps; build through
    build_log to get that guarantee from arbitrary input.
    """

    user: str
    device: str
    entries: tuple[ScanResult, ...]

    def __len__(self) -> int:
        return len(self.entries)


def build_log(user: str, device: str, scans: Iterable[ScanResult]) -> ScanLog:
    """Assemble a validated, time-ordered log.

    Every scan is cleaned via validate_scan; when two scans carry the
    same timestamp the first one wins.
    """
    by_time: dict[int, ScanResult] = {}
    for scan in scans:
        clean, _ = validate_scan(scan)
        if clean.timestamp not in by_time:
            by_time[clean.timestamp] = clean
    entries = tuple(by_time[t] for t in sorted(by_time))
    return ScanLog(user=user, device=device, entries=entries)


@dataclass(frozen=True)
class Fingerprint:
    """Radio signature of a place: MAC -> mean RSS, with per-MAC counts.

    `rssi` holds the mean observed RSS per MAC in dBm (negative floats);
    `counts` holds how many observations back each mean, which is what
    lets two fingerprints merge without re-reading the raw scans.
    """

    rssi: Mapping[str, float]
    counts: Mapping[str, int]

    def __len__(self) -> int:
        return len(self.rssi)

    def macs(self) -> tuple[str, ...]:
        """MACs in canonical (byte-lexicographic) order."""
        return tuple(sorted(self.rssi))


@dataclass(frozen=True)
class ClusterParams:
    """Density-clustering knobs; defaults follow the 5-minute scan cadence.

    epsilon is a similarity threshold in (0, 1] (higher means stricter),
    min_pts the neighbourhood size needed to seed a cluster, and
    scan_interval the expected seconds between scans.
    """

    epsilon: float = 0.5
    min_pts: int = 4
    scan_interval: int = 300

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.min_pts < 2:
            raise ValueError(f"min_pts must be >= 2, got {self.min_pts}")
        if self.scan_interval <= 0:
            raise ValueError(f"scan_interval must be positive, got {self.scan_interval}")
