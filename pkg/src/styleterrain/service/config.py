"""Service configuration: one JSON config file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

ENV_PREFIX = "STYLETERRAIN_"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8675
    bundle_dir: str = "bundles"
    session_dir: str = "sessions"
    default_bundle: str | None = None  # name under bundle_dir; None = first
    max_undo: int = 32

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ServiceConfig":
        values: dict = {}
        if path is not None:
            values.update(json.loads(Path(path).read_text()))
        for key in ("host", "bundle_dir", "session_dir", "default_bundle"):
            env = os.environ.get(ENV_PREFIX + key.upper())
            if env is not None:
                values[key] = env
        for key in ("port", "max_undo"):
            env = os.environ.get(ENV_PREFIX + key.upper())
            if env is not None:
                values[key] = int(env)
        return cls(**values)
