"""Run configuration: one JSON file, overridden by command-line flags."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from .coordinator.core import DEFAULT_LEASE_SECONDS
from .errors import ValidationError

COORDINATOR_ENV = "CORPUSCRAWL_COORDINATOR_URL"


@dataclass
class RunConfig:
    coordinator_url: Optional[str] = None
    platform: str = "sim:"          # "sim:<world.json>", "http://<mounted sim>" or "live_stub"
    keyword_workers: int = 1
    channel_workers: int = 1
    download_workers: int = 2
    lease_duration_s: float = DEFAULT_LEASE_SECONDS
    threshold: float = 2.0
    cap: float = 20.0
    sweep_cap: float = 16.0
    train_max: int = 1_000_000
    test_size: int = 1_000
    max_pages: int = 10
    strict_subtitles: bool = False
    out_dir: str = "out"
    seed: int = 0

    def validate(self) -> "RunConfig":
        for name in ("keyword_workers", "channel_workers", "download_workers"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.threshold < 0:
            raise ValidationError("threshold must be >= 0")
        if not self.lease_duration_s > 0:
            raise ValidationError("lease_duration_s must be > 0")
        return self

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    data = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    if os.environ.get(COORDINATOR_ENV):
        data["coordinator_url"] = os.environ[COORDINATOR_ENV]
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return RunConfig(**data).validate()
