"""Model-bundle registry: scans a directory of saved bundles, caches loaded
weights read-only, and hot-reloads a bundle when its manifest changes."""

from __future__ import annotations

import threading
from pathlib import Path

from ..networks.bundle import MANIFEST_NAME, ModelBundle, list_bundles, load_bundle


class BundleRegistry:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._cache: dict[str, tuple[float, ModelBundle]] = {}
        self._lock = threading.Lock()

    def list(self) -> list[dict]:
        return list_bundles(self.root)

    def names(self) -> list[str]:
        return [entry["name"] for entry in self.list()]

    def get(self, name: str) -> ModelBundle:
        manifest = self.root / name / MANIFEST_NAME
        if not manifest.exists():
            raise KeyError(f"no bundle named {name!r}")
        mtime = manifest.stat().st_mtime
        with self._lock:
            cached = self._cache.get(name)
            if cached is not None and cached[0] == mtime:
                return cached[1]
        bundle = load_bundle(self.root / name)
        with self._lock:
            self._cache[name] = (mtime, bundle)
        return bundle

    def default_name(self, preferred: str | None = None) -> str:
        names = self.names()
        if not names:
            raise KeyError(f"no bundles available under {self.root}")
        if preferred is not None:
            if preferred not in names:
                raise KeyError(f"configured default bundle {preferred!r} "
                               f"not found; available: {names}")
            return preferred
        return names[0]
