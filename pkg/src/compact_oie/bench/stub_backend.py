"""Stdin/stdout wrapper around the rule stub, for exercising the process protocol.

    python -m compact_oie.bench.stub_backend
"""
import json
import sys

from .backend import ClauseRequest, stub_extract


def main() -> int:
    for line in sys.stdin:
        if not line.strip():
            continue
        d = json.loads(line)
        req = ClauseRequest.from_json(d)
        print(json.dumps({"id": req.id, "triples": stub_extract(req)}), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
