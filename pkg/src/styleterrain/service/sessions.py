"""Authoring sessions: current terrain + latent, a bounded undo stack, and
disk persistence on every mutation so a server restart loses nothing.

Concurrency: one lock per session serializes its mutations in arrival
order; distinct sessions never contend.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..heightfield import (Heightfield, decode_png16, denormalize,
                           encode_png16, normalize)
from ..latent import load_latent, save_latent
from ..networks.latents import LatentWPlus


@dataclass
class Session:
    id: str
    terrain: Heightfield
    latent: LatentWPlus | None = None
    bundle_name: str | None = None
    undo_stack: list[tuple[Heightfield, LatentWPlus | None]] = field(
        default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def push_undo(self, max_depth: int) -> None:
        self.undo_stack.append((self.terrain, self.latent))
        while len(self.undo_stack) > max_depth:
            self.undo_stack.pop(0)

    def undo(self) -> bool:
        if not self.undo_stack:
            return False
        self.terrain, self.latent = self.undo_stack.pop()
        return True


def _terrain_to_blob(t: Heightfield) -> dict:
    n = normalize(t)
    return {
        "png": encode_png16(n.values),
        "meta": {"min_m": n.min_m, "max_m": n.max_m, "cell_size_m": t.cell_size},
    }


class SessionStore:
    """Disk-backed session registry under one directory per session."""

    def __init__(self, root: str | Path, max_undo: int = 32):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.max_undo = max_undo
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self._load_existing()

    def _load_existing(self) -> None:
        for sub in self.root.iterdir():
            if (sub / "state.json").exists():
                try:
                    self._sessions[sub.name] = self._read_session(sub)
                except Exception:  # skip corrupt leftovers, keep serving
                    continue

    # -- persistence ------------------------------------------------------

    def _session_dir(self, session_id: str) -> Path:
        return self.root / session_id

    def _write_terrain(self, directory: Path, stem: str, t: Heightfield) -> None:
        blob = _terrain_to_blob(t)
        (directory / f"{stem}.png").write_bytes(blob["png"])
        (directory / f"{stem}.json").write_text(json.dumps(blob["meta"]))

    def _read_terrain(self, directory: Path, stem: str) -> Heightfield:
        values = decode_png16((directory / f"{stem}.png").read_bytes())
        meta = json.loads((directory / f"{stem}.json").read_text())
        from ..heightfield import NormalizedField
        n = NormalizedField(values=values, min_m=meta["min_m"],
                            max_m=meta["max_m"])
        return denormalize(n, cell_size=meta["cell_size_m"])

    def persist(self, session: Session) -> None:
        directory = self._session_dir(session.id)
        directory.mkdir(parents=True, exist_ok=True)
        undo_dir = directory / "undo"
        undo_dir.mkdir(exist_ok=True)
        self._write_terrain(directory, "terrain", session.terrain)
        if session.latent is not None:
            save_latent(session.latent, directory / "latent.lat")
        elif (directory / "latent.lat").exists():
            (directory / "latent.lat").unlink()
        for old in undo_dir.glob("*"):
            old.unlink()
        for i, (terrain, latent) in enumerate(session.undo_stack):
            self._write_terrain(undo_dir, f"{i:03d}-terrain", terrain)
            if latent is not None:
                save_latent(latent, undo_dir / f"{i:03d}-latent.lat")
        state = {
            "id": session.id,
            "bundle_name": session.bundle_name,
            "undo_depth": len(session.undo_stack),
        }
        tmp = directory / "state.json.tmp"
        tmp.write_text(json.dumps(state))
        tmp.replace(directory / "state.json")

    def _read_session(self, directory: Path) -> Session:
        state = json.loads((directory / "state.json").read_text())
        terrain = self._read_terrain(directory, "terrain")
        latent = None
        if (directory / "latent.lat").exists():
            latent, _ = load_latent(directory / "latent.lat")
        undo_stack = []
        undo_dir = directory / "undo"
        for i in range(state.get("undo_depth", 0)):
            t = self._read_terrain(undo_dir, f"{i:03d}-terrain")
            lat_path = undo_dir / f"{i:03d}-latent.lat"
            lat = load_latent(lat_path)[0] if lat_path.exists() else None
            undo_stack.append((t, lat))
        return Session(id=state["id"], terrain=terrain, latent=latent,
                       bundle_name=state.get("bundle_name"),
                       undo_stack=undo_stack)

    # -- registry ----------------------------------------------------------

    def create(self, terrain: Heightfield,
               bundle_name: str | None = None) -> Session:
        session = Session(id=uuid.uuid4().hex[:12], terrain=terrain,
                          bundle_name=bundle_name)
        with self._registry_lock:
            self._sessions[session.id] = session
        self.persist(session)
        return session

    def get(self, session_id: str) -> Session | None:
        with self._registry_lock:
            return self._sessions.get(session_id)

    def ids(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._sessions)
