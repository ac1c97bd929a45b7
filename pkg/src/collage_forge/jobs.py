"""In-process job queue with on-disk state, sized for long preparation runs.

Jobs persist through every state transition, so a restarted service can
report on past jobs; anything mid-run at crash time is marked failed and can
be resubmitted (pipeline jobs never mutate an existing library in place).
"""

from __future__ import annotations

import logging
import threading
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

from .hashing import hash_hex
from .storage import Store

logger = logging.getLogger(__name__)

STATES = ("queued", "running", "done", "failed")


class JobQueue:
    def __init__(self, store: Store, workers: int = 2):
        self.store = store
        self._pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="job")
        self._lock = threading.Lock()
        self._counter = 0

    def recover(self) -> int:
        """Mark jobs that were mid-run at shutdown as failed; returns count."""
        recovered = 0
        for job_id in self.store.job_ids():
            job = self.store.load_job(job_id)
            if job.get("state") in ("queued", "running"):
                job["state"] = "failed"
                job["error"] = "interrupted by service restart; resubmit"
                self.store.save_job(job)
                recovered += 1
        return recovered

    def _new_job_id(self, kind: str) -> str:
        with self._lock:
            self._counter += 1
            return f"job_{hash_hex('job', kind, time.time_ns(), self._counter)}"

    def submit(self, kind: str, work: Callable[[Callable[[float], None]], dict],
               detail: Optional[dict] = None) -> str:
        """Queue a callable; it receives a progress-reporting function and
        returns the job's result document."""
        job_id = self._new_job_id(kind)
        job = {"job_id": job_id, "kind": kind, "state": "queued", "progress": 0.0,
               "detail": detail or {}, "result": None, "error": None}
        self.store.save_job(job)

        def run() -> None:
            job["state"] = "running"
            self.store.save_job(job)

            def report(progress: float) -> None:
                job["progress"] = round(min(max(progress, 0.0), 1.0), 4)
                self.store.save_job(job)

            try:
                job["result"] = work(report)
                job["state"] = "done"
                job["progress"] = 1.0
            except Exception as exc:  # report any failure through the job record
                logger.warning("job %s failed: %s", job_id, exc)
                logger.debug("%s", traceback.format_exc())
                job["state"] = "failed"
                job["error"] = f"{type(exc).__name__}: {exc}"
            self.store.save_job(job)

        self._pool.submit(run)
        return job_id

    def get(self, job_id: str) -> dict:
        return self.store.load_job(job_id)

    def wait(self, job_id: str, timeout: float = 120.0, poll: float = 0.05) -> dict:
        """Convenience for tests and the CLI: poll until terminal state."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            job = self.get(job_id)
            if job["state"] in ("done", "failed"):
                return job
            time.sleep(poll)
        raise TimeoutError(f"job {job_id} did not finish within {timeout}s")

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False, cancel_futures=True)
