"""Segmenting a topic query by file size so every piece fits the result cap.

The search API returns at most 1000 hits per query, so a popular topic
must be split into size ranges.  This demo builds a synthetic index of
25,000 files and watches the planner bisect the size domain.
"""

import random

from tableforge.harvest import SimulatedBackend, TopicQuery, build_query, fetch_refs, plan_segments

print("Rendered queries:")
print(" ", build_query("object"))
print(" ", build_query("id", (50, 100)))

rng = random.Random(7)
records = [
    {
        "repo": f"owner{i % 503}/repo{i % 91}",
        "path": f"data/file{i}.csv",
        "size": rng.randrange(0, 438_001),
        "license": "mit",
        "contains": ["object"],
    }
    for i in range(25_000)
]
backend = SimulatedBackend(records)
topic = TopicQuery("object")

print(f"\nIndex holds {backend.count(topic, 0, 438_001):,} files for topic 'object';"
      " the cap is 1000 per query.")

segments = plan_segments(topic, lambda q, lo, hi: backend.count(q, lo, hi))
print(f"Planner produced {len(segments)} segments:")
for seg in segments[:6]:
    print(f"  size {seg.size_min_bytes:>7,}..{seg.size_max_bytes - 1:>7,}  "
          f"count={seg.estimated_count:>4}  query: {seg.query_string()}")
print("  ...")

total = sum(s.estimated_count for s in segments)
print(f"Counts over all segments sum to {total:,} (every file reachable, none twice).")

refs = fetch_refs(segments[0], backend)
print(f"Fetching the first segment returned {len(refs)} refs, e.g. {refs[0].url}")
