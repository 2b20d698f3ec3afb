#!/usr/bin/env python3
"""Launch the segmentation HTTP service (and the viewer UI if built).

Usage:
    python scripts/serve.py [--host 127.0.0.1] [--port 8000]

Then open http://127.0.0.1:8000/ for the slice viewer (after building
frontend/, see frontend/README.md) or talk to the API directly.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()

    import uvicorn

    uvicorn.run("tumorseg.service:app", host=args.host, port=args.port)


if __name__ == "__main__":
    main()
