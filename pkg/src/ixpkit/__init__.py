"""ixpkit: ingest, link, and compare public IXP database snapshots."""

__version__ = "0.1.0"
