"""Crawl, download and curate a subtitled speech corpus from a video platform."""

__version__ = "0.1.0"
