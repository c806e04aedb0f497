#!/usr/bin/env python3
"""Entry point wrapper: see the ingest package for the implementation."""

from ingest.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
