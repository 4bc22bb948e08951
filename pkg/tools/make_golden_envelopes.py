#!/usr/bin/env python3
"""Freeze golden wire fixtures for the envelope codec.

Run once; the output is checked in so codec changes that break old bytes
fail loudly in tests.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from test_protocol import envelope_for, sample_events  # noqa: E402

from tutorlink.protocol import Envelope, Hello, Rejection, Welcome, encode  # noqa: E402

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "golden_envelopes.jsonl"


def main():
    OUT.parent.mkdir(parents=True, exist_ok=True)
    records = []
    for i, event in enumerate(sample_events()):
        env = envelope_for(event, seq=i)
        records.append(env)
    records.append(Envelope("control", 0, "student_client", Hello()))
    records.append(Envelope("control", 1, "teacher_host", Welcome("tutorlink/1", {"next_id": 1}, 0)))
    records.append(Envelope("control", 2, "teacher_host", Rejection("annotation", 7, "forbidden")))
    with OUT.open("w") as fh:
        for env in records:
            rec = {
                "channel": env.channel,
                "seq": env.seq,
                "payload_type": type(env.payload).__name__,
                "hex": encode(env).hex(),
            }
            fh.write(json.dumps(rec) + "\n")
    print(f"wrote {len(records)} golden envelopes")


if __name__ == "__main__":
    main()
