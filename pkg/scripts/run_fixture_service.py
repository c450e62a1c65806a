#!/usr/bin/env python3
"""Serve the fixture KB with a scripted backend (no model required).

The console e2e suite and manual demos talk to this. The script answers the
shipped protective-equipment question three times before exhausting.

Usage: python3 scripts/run_fixture_service.py [--port 8011]
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8011)
    args = parser.parse_args()

    import os
    os.chdir(ROOT)  # fixture config paths are repo-relative

    import uvicorn

    from kgdss.api import EngineState, create_app
    from kgdss.config import load_config

    config = load_config(ROOT / "fixtures" / "service_config.json")
    state = EngineState.from_config(config)
    print(f"fixture service on http://{args.host}:{args.port} "
          f"({len(state.store)} triples)", flush=True)
    uvicorn.run(create_app(state), host=args.host, port=args.port,
                log_level="warning")


if __name__ == "__main__":
    main()
