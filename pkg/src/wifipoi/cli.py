"""Operator command line for the whole pipeline.

Subcommands:

    ingest FILE...                  decode .scan/.scan.gz files into the raw store
    extract --user U --day D        cluster one user-day and update the POI registry
    communities [--thresholds ...]  cross-user common-POI report + threshold sweep
    simulate --scenario S --seed N  generate synthetic scan files + ground truth
    score --truth CSV SUMMARY...    compare extraction output against ground truth

Exit codes: 0 on success, 2 on malformed input, 3 on a domain error
(unknown user, too few POI, storage failure). The store path comes
from --store, the WIFIPOI_STORE environment variable, the config file,
or the default wifipoi.db, in that order of precedence.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .clustering import NOISE, VisitInterval, dbscan, segment_visits
from .community import (
    build_graph,
    louvain,
    write_communities_csv,
    write_edge_list,
    write_sweep_csv,
)
from .errors import InputError, PoiError, TooFewNodes, UnknownUser
from .ingest import RawStore, decode_log, decompress_batch, encode_log, compress_batch, store_raw
from .model import ClusterParams
from .registry import (
    SummaryStore,
    build_fingerprint,
    daily_summary,
    day_window,
    upsert_poi,
    write_summary_csv,
)
from .simgen import generate_trace, load_scenario, write_ground_truth_csv

DEFAULT_STORE = "wifipoi.db"
STORE_ENV_VAR = "WIFIPOI_STORE"


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable knobs shared by the subcommands."""

    epsilon: float = 0.5
    min_pts: int = 4
    scan_interval: int = 300
    match_threshold: float = 0.5
    community_thresholds: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5)
    store: str = DEFAULT_STORE

    def __post_init__(self) -> None:
        for value in (self.epsilon, self.match_threshold, *self.community_thresholds):
            if not 0.0 < value <= 1.0:
                raise ValueError(f"threshold {value} outside (0, 1]")


def _parse_thresholds(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise InputError(f"bad threshold list {text!r}: {exc}") from exc


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    """Merge defaults, config file, environment, and flags; flags win."""
    values: dict[str, object] = {}
    config_path = getattr(args, "config", None)
    if config_path:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(config_path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise InputError(f"cannot read config {config_path}: {exc}") from exc
        section = parser["pipeline"] if parser.has_section("pipeline") else {}
        if "epsilon" in section:
            values["epsilon"] = float(section["epsilon"])
        if "min_pts" in section:
            values["min_pts"] = int(section["min_pts"])
        if "scan_interval" in section:
            values["scan_interval"] = int(section["scan_interval"])
        if "match_threshold" in section:
            values["match_threshold"] = float(section["match_threshold"])
        if "community_thresholds" in section:
            values["community_thresholds"] = _parse_thresholds(
                section["community_thresholds"].replace(" ", ",")
            )
        if "store" in section:
            values["store"] = section["store"]
    store = (
        getattr(args, "store", None)
        or os.environ.get(STORE_ENV_VAR)
        or values.get("store")
        or DEFAULT_STORE
    )
    values["store"] = str(store)
    return PipelineConfig(**values)  # type: ignore[arg-type]


def _user_from_filename(path: Path) -> str:
    """`alice.scan.gz` and `alice.scan` both name user `alice`."""
    name = path.name
    for suffix in (".gz", ".scan"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return name


def cmd_ingest(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    total_added = total_skipped = 0
    with RawStore(cfg.store) as store:
        for name in args.files:
            path = Path(name)
            data = path.read_bytes()
            if path.name.endswith(".gz"):
                data = decompress_batch(data)
            log = decode_log(data, user=_user_from_filename(path))
            report = store_raw(store, log)
            total_added += report.added
            total_skipped += report.skipped
            print(f"{path}: {report.added} rows added, {report.skipped} skipped")
    print(f"total: {total_added} added, {total_skipped} skipped")
    return 0


def cmd_extract(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    lo, hi = day_window(args.day)
    with RawStore(cfg.store) as raw:
        if args.user not in raw.users():
            raise UnknownUser(f"no raw data for user {args.user!r} in {cfg.store}")
        log = raw.load_log(args.user, lo, hi)
    out = Path(args.out) if args.out else Path(f"{args.user}_{args.day}.csv")
    epsilon = args.epsilon if args.epsilon is not None else cfg.epsilon
    params = ClusterParams(
        epsilon=epsilon, min_pts=cfg.min_pts, scan_interval=cfg.scan_interval
    )
    if not log.entries:
        write_summary_csv([], out)
        print(f"no scans for {args.user} on {args.day}; wrote empty {out}")
        return 0
    labels = dbscan(log, params)
    visits = segment_visits(log, labels, params)
    by_label: dict[int, list[VisitInterval]] = {}
    for visit in visits:
        by_label.setdefault(visit.label, []).append(visit)
    if not by_label:
        write_summary_csv([], out)
        print(f"only noise for {args.user} on {args.day}; wrote empty {out}")
        return 0
    with SummaryStore(cfg.store) as store:
        for label in sorted(by_label):
            member_scans = [s for s, l in zip(log.entries, labels) if l == label]
            fp = build_fingerprint(member_scans)
            upsert_poi(store, args.user, fp, by_label[label], cfg.match_threshold)
        rows = daily_summary(store, args.user, args.day)
    write_summary_csv(rows, out)
    for poi_id, label, start, end in rows:
        print(f"POI {poi_id:>3}  {start} - {end}  {label}")
    print(f"{len(rows)} visits over {len(by_label)} POI -> {out}")
    return 0


def cmd_communities(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    thresholds = (
        _parse_thresholds(args.thresholds) if args.thresholds else cfg.community_thresholds
    )
    nodes = []
    fps = []
    with SummaryStore(cfg.store) as store:
        for user in store.users():
            for record in store.records(user):
                nodes.append((user, record.poi_id))
                fps.append(record.fingerprint)
    h = len(fps)
    if h < 2:
        raise TooFewNodes(f"need at least 2 registered POI, found {h}")
    print(f"{h} POI across users; {h * (h - 1) // 2} pairs evaluated per threshold")
    sweep = []
    best = None
    for t in thresholds:
        graph = build_graph(fps, t, names=nodes)
        part = louvain(graph)
        sweep.append((t, part.q))
        print(f"threshold {t:.2f}: {len(graph.edges)} edges, Q = {part.q:.4f}")
        if best is None or part.q > best[1].q:
            best = (t, part, graph)
    write_sweep_csv(sweep, args.sweep_out)
    assert best is not None
    write_communities_csv(best[1], args.communities_out)
    if args.edges_out:
        write_edge_list(best[2], args.edges_out)
    n_comm = len(set(best[1].communities.values()))
    print(
        f"best threshold {best[0]:.2f} ({n_comm} communities)"
        f" -> {args.communities_out}; sweep -> {args.sweep_out}"
    )
    return 0


def cmd_simulate(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    scenario = load_scenario(args.scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    truth_rows = []
    for idx, user in enumerate(sorted(scenario.itineraries)):
        rng = np.random.default_rng([args.seed, idx])
        log, truth = generate_trace(
            scenario.env,
            scenario.itineraries[user],
            scenario.scan_interval,
            rng,
            scenario.sigma,
            user=user,
            device=scenario.devices[user],
        )
        path = out_dir / f"{user}.scan.gz"
        path.write_bytes(compress_batch(encode_log(log)))
        truth_rows += [(user, v) for v in truth]
        print(f"wrote {path} ({len(log.entries)} scans)")
    truth_path = out_dir / "ground_truth.csv"
    write_ground_truth_csv(truth_rows, truth_path)
    print(f"wrote {truth_path} ({len(truth_rows)} visits)")
    return 0


def _parse_hhmm(text: str) -> int:
    hh, _, mm = text.partition(":")
    return int(hh) * 60 + int(mm)


def _read_csv_rows(path: Path, header: str) -> list[list[str]]:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != header:
        raise InputError(f"{path}: expected header {header!r}")
    return [line.split(",") for line in lines[1:] if line.strip()]


def cmd_score(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    truth_by_key: dict[tuple[str, str], list[tuple[str, int, int]]] = {}
    for row in _read_csv_rows(Path(args.truth), "user,day,place,start,end"):
        if len(row) != 5:
            raise InputError(f"{args.truth}: bad row {row}")
        user, day, place, start, end = row
        truth_by_key.setdefault((user, day), []).append(
            (place, _parse_hhmm(start), _parse_hhmm(end))
        )

    matched: list[tuple[str, str, int, float]] = []  # (user, place, poi_id, boundary err)
    total_truth = 0
    for summary_path in args.summaries:
        path = Path(summary_path)
        stem = path.name.removesuffix(".csv")
        user, sep, day = stem.rpartition("_")
        if not sep:
            raise InputError(f"{path}: cannot infer user/day from file name")
        rows = [
            (int(r[0]), _parse_hhmm(r[2]), _parse_hhmm(r[3]))
            for r in _read_csv_rows(path, "poi_id,label,start,end")
        ]
        for place, t_start, t_end in truth_by_key.get((user, day), []):
            total_truth += 1
            best_overlap = 0
            best_row = None
            for poi_id, s_start, s_end in rows:
                overlap = min(t_end, s_end) - max(t_start, s_start) + 1
                if overlap > best_overlap:
                    best_overlap = overlap
                    best_row = (poi_id, s_start, s_end)
            if best_row is not None:
                poi_id, s_start, s_end = best_row
                err = (abs(s_start - t_start) + abs(s_end - t_end)) / 2.0
                matched.append((user, place, poi_id, err))

    if total_truth == 0:
        raise InputError("ground truth contains no visits for the given summaries")

    # A place's expected id is the one most of its visits mapped to.
    ids_by_place: dict[tuple[str, str], list[int]] = {}
    places_by_id: dict[tuple[str, int], set[str]] = {}
    for user, place, poi_id, _ in matched:
        ids_by_place.setdefault((user, place), []).append(poi_id)
        places_by_id.setdefault((user, poi_id), set()).add(place)
    correct = 0
    for (user, place), ids in ids_by_place.items():
        modal = max(set(ids), key=ids.count)
        correct += sum(1 for i in ids if i == modal)
    accuracy = correct / total_truth
    splits = sum(len(set(ids)) - 1 for ids in ids_by_place.values())
    merges = sum(len(places) - 1 for places in places_by_id.values())
    mean_err = sum(err for *_, err in matched) / len(matched) if matched else float("nan")

    print(f"matched {len(matched)}/{total_truth} ground-truth visits")
    print(f"mean boundary error: {mean_err:.1f} min")
    print(f"identity accuracy: {accuracy:.3f}")
    print(f"splits: {splits}  merges: {merges}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--store", help=f"store path (or ${STORE_ENV_VAR})")
    common.add_argument("--config", help="INI config file with a [pipeline] section")

    parser = argparse.ArgumentParser(
        prog="wifipoi",
        description="Extract and compare indoor points of interest from Wi-Fi scan logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="load scan files into the raw store")
    p.add_argument("files", nargs="+", metavar="FILE")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", parents=[common], help="cluster one user-day into POI visits")
    p.add_argument("--user", required=True)
    p.add_argument("--day", required=True, metavar="YYYY-MM-DD")
    p.add_argument("--epsilon", type=float, help="override the clustering threshold")
    p.add_argument("--out", help="summary CSV path (default <user>_<day>.csv)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("communities", parents=[common], help="cross-user common POI report")
    p.add_argument("--thresholds", help="comma-separated edge thresholds")
    p.add_argument("--communities-out", default="communities.csv")
    p.add_argument("--sweep-out", default="sweep.csv")
    p.add_argument("--edges-out", help="also dump the graph as `i j weight` lines")
    p.set_defaults(func=cmd_communities)

    p = sub.add_parser("simulate", parents=[common], help="generate synthetic scan files")
    p.add_argument("--scenario", required=True, help="scenario file or bundled name")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("score", parents=[common], help="compare summaries to ground truth")
    p.add_argument("--truth", required=True, metavar="CSV")
    p.add_argument("summaries", nargs="+", metavar="SUMMARY_CSV")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return args.func(args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PoiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    raise SystemExit(main(sys.argv[1:]))
