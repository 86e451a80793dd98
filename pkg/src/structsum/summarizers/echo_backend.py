"""Reference backend: answers every request with a prefix of its source.

It speaks the same line protocol as a real model server, and its flags
inject faults for testing the adapter::

    python -m structsum.summarizers.echo_backend [--overshoot N] [--delay S]
        [--crash-after K] [--bad-id] [--garbage] [--no-ready]
"""

from __future__ import annotations

import argparse
import json
import sys
import time


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="echo-backend", description=__doc__.splitlines()[0])
    ap.add_argument("--overshoot", type=int, default=0,
                    help="return this many tokens beyond max_len")
    ap.add_argument("--delay", type=float, default=0.0, help="seconds to sleep per request")
    ap.add_argument("--crash-after", type=int, default=None,
                    help="exit without answering the K-th request (1-based)")
    ap.add_argument("--bad-id", action="store_true", help="echo a wrong id")
    ap.add_argument("--garbage", action="store_true", help="answer with a non-JSON line")
    ap.add_argument("--no-ready", action="store_true", help="skip the ready handshake")
    args = ap.parse_args(argv)

    out = sys.stdout
    if not args.no_ready:
        out.write(json.dumps({"ready": True}) + "\n")
        out.flush()

    for n, line in enumerate(sys.stdin, 1):
        if not line.strip():
            continue
        if args.crash_after is not None and n >= args.crash_after:
            return 1
        req = json.loads(line)
        if args.delay:
            time.sleep(args.delay)
        tokens = req["source"].split()
        limit = req["max_len"] + args.overshoot
        summary = tokens[:limit]
        while len(summary) < limit and args.overshoot:
            summary.append("pad")
        if args.garbage:
            out.write("this is not json\n")
        else:
            rid = req["id"] + "-x" if args.bad_id else req["id"]
            out.write(json.dumps({"id": rid, "summary": " ".join(summary)}, ensure_ascii=False) + "\n")
        out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
