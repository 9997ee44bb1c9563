"""Recognizing the same place across days.

Runs three simulated days through the extraction pipeline into one
summary store. Each day's clusters are matched against the user's
existing POI by fingerprint similarity (threshold 0.5); a hit reuses
the stable poi_id and appends the visits, a miss allocates the next
id. The daily summaries then show home and office keeping their ids
all week.
"""
import collections
import time

from wifipoi.clustering import ClusterParams, dbscan, segment_visits
from wifipoi.registry import SummaryStore, build_fingerprint, daily_summary, upsert_poi
from wifipoi.simgen import generate_trace, load_scenario

scenario = load_scenario("office-3day")
(user,) = scenario.itineraries
params = ClusterParams(scan_interval=scenario.scan_interval)

by_day = collections.defaultdict(list)
for entry in scenario.itineraries[user]:
    by_day[time.strftime("%Y-%m-%d", time.gmtime(entry.arrival))].append(entry)

store = SummaryStore()  # in-memory; pass a path to persist
for day_index, day in enumerate(sorted(by_day)):
    log, _ = generate_trace(
        scenario.env,
        tuple(by_day[day]),
        scenario.scan_interval,
        rng_seed=day_index,
        noise_sigma=scenario.sigma,
        user=user,
    )
    labels = dbscan(log, params)
    visits = segment_visits(log, labels, params)
    grouped = collections.defaultdict(list)
    for visit in visits:
        grouped[visit.label].append(visit)
    for label in sorted(grouped):
        members = [s for s, l in zip(log.entries, labels) if l == label]
        upsert_poi(store, user, build_fingerprint(members), grouped[label])

    print(f"{day}:")
    for poi_id, _, start, end in daily_summary(store, user, day):
        print(f"  POI {poi_id}  {start} - {end}")

print("\nregistered POI:")
for record in store.records(user):
    aps = len(record.fingerprint.rssi)
    print(f"  POI {record.poi_id}: {len(record.visits)} visits, {aps} APs in fingerprint")
store.close()
