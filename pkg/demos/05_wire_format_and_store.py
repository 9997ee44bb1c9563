"""The upload path: wire format, batching, compression, raw store.

A device serializes each scan as one JSON line, holds scans until the
next upload tick, gzips the batch, and ships it. The server side
decodes and lands rows in the raw store, where re-sent batches are
skipped by the primary key, so uploads are safe to retry.
"""
from wifipoi.ingest import (
    RawStore,
    compress_batch,
    decode_log,
    decompress_batch,
    encode_log,
    plan_uploads,
    store_raw,
)
from wifipoi.model import ScanResult, build_log

T0 = 1_772_841_600  # 2026-03-07 00:00:00 UTC
scans = [
    ScanResult(
        timestamp=T0 + 300 * i,
        observations=(
            ("aa:00:00:00:00:01", -52 - (i % 3)),
            ("bb:00:00:00:00:02", -70),
        ),
    )
    for i in range(72)  # six stationary hours
]
log = build_log("maria", "maria-phone", scans)

wire = encode_log(log)
print("first two wire lines:")
for line in wire.decode().splitlines()[:2]:
    print(f"  {line}")

packed = compress_batch(wire)
print(f"\n{len(wire)} wire bytes -> {len(packed)} gzipped ({len(wire) / len(packed):.1f}x)")
assert decode_log(decompress_batch(packed), user="maria").entries == log.entries

print("\nupload plan (6-hour periods):")
for batch in plan_uploads(log, period=21600):
    lo, hi = batch.span
    print(f"  [{lo}, {hi})  {len(batch.scans)} scans, {len(batch.payload())} bytes")

store = RawStore()  # in-memory; the CLI uses a file
first = store_raw(store, log)
again = store_raw(store, log)
print(f"\ningest: {first.added} added; retry: {again.added} added, {again.skipped} skipped")
print(f"stored users: {store.users()}")
window = store.load_log("maria", T0, T0 + 3600)
print(f"first hour holds {len(window)} scans")
store.close()
