"""Async jobs for long operations (amplify, optimizer inversion): a small
thread-backed registry polled via GET /jobs/{id}."""

from __future__ import annotations

import threading
import traceback
import uuid
from dataclasses import dataclass, field


@dataclass
class Job:
    id: str
    kind: str
    status: str = "pending"  # pending | running | done | failed
    progress: float = 0.0
    error: str | None = None
    result: dict | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def to_dict(self) -> dict:
        with self._lock:
            return {
                "id": self.id,
                "kind": self.kind,
                "status": self.status,
                "progress": self.progress,
                "error": self.error,
                "result": self.result,
            }


class JobManager:
    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, kind: str, fn) -> Job:
        """Run fn(job) on a worker thread; fn sets job.result or raises."""
        job = Job(id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._jobs[job.id] = job

        def run():
            with job._lock:
                job.status = "running"
            try:
                result = fn(job)
                with job._lock:
                    job.result = result
                    job.progress = 1.0
                    job.status = "done"
            except Exception as exc:  # surfaced via polling
                with job._lock:
                    job.status = "failed"
                    job.error = f"{type(exc).__name__}: {exc}"
                    job.result = {"traceback": traceback.format_exc(limit=4)}

        threading.Thread(target=run, daemon=True).start()
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)
