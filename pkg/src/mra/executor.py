"""Tree-parallel scheduling of the upward and downward sweeps.

Each region is a task. A merge task becomes ready once every child message
has arrived and always reduces its children in ascending child order, so the
result does not depend on the number of workers or on completion order.
"""
from __future__ import annotations

import csv
import itertools
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field


from .errors import MRAError
from .inference import PosteriorFactors, leaf_summaries, leaf_values, merge_and_update
from .prior import PriorFactors


@dataclass
class TaskRecord:
    region: tuple
    stage: str
    start: float
    end: float
    worker: str
    seq_start: int
    seq_end: int
    inbound_blocks: int = 0


@dataclass
class ScheduleTrace:
    records: list = field(default_factory=list)
    _seq: itertools.count = field(default_factory=itertools.count, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def tick(self) -> int:
        with self._lock:
            return next(self._seq)

    def add(self, rec: TaskRecord):
        with self._lock:
            self.records.append(rec)

    def write_csv(self, path):
        t0 = min((r.start for r in self.records), default=0.0)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["region", "stage", "start", "end", "worker"])
            for r in sorted(self.records, key=lambda r: r.seq_start):
                w.writerow(["/".join(map(str, r.region)) or "root", r.stage,
                            f"{r.start - t0:.9f}", f"{r.end - t0:.9f}", r.worker])


def _timed(trace, region, stage, fn, *args, inbound=0):
    if trace is not None:
        s_seq, s = trace.tick(), time.perf_counter()
    try:
        out = fn(*args)
    except MRAError:
        raise
    except Exception as exc:
        raise MRAError(f"{stage} task for region {region} failed: {exc}") from exc
    if trace is None:
        return out
    end, e_seq = time.perf_counter(), trace.tick()
    trace.add(TaskRecord(region, stage, s, end, threading.current_thread().name,
                         s_seq, e_seq, inbound))
    return out


def run_upward(tree, prior: PriorFactors, y=None, workers: int = 1,
               trace: ScheduleTrace | None = None) -> PosteriorFactors:
    """Upward sweep as a dependency-driven tree reduction."""
    if workers < 1:
        raise ValueError("worker count must be at least 1")
    ys = leaf_values(tree, y)
    post = PosteriorFactors(prior, n=tree.n)

    def leaf_task(leaf):
        s = _timed(trace, leaf, "leaf-summarize", leaf_summaries, prior, leaf, ys[leaf])
        post.d[leaf], post.u[leaf] = s.d, s.u
        return s

    def merge_task(path, kids):
        inbound = sum(k.payload_blocks for k in kids)
        return _timed(trace, path, "merge-update", merge_and_update, kids, path, prior, post,
                      inbound=inbound)

    if workers == 1:
        messages = {}
        for leaf in tree.leaves:
            messages[leaf] = leaf_task(leaf)
        for level in range(tree.depth - 1, -1, -1):
            for path in tree.paths_at(level):
                messages[path] = merge_task(path, [messages.pop(c) for c in tree.children(path)])
        root = messages[()]
    else:
        root = _parallel_upward(tree, leaf_task, merge_task, workers)
    post.d[()], post.u[()] = root.d, root.u
    return post


def _parallel_upward(tree, leaf_task, merge_task, workers):
    inbox = {}
    pending = {}
    root = None
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="mra") as pool:
        for leaf in tree.leaves:
            pending[pool.submit(leaf_task, leaf)] = leaf
        while pending:
            done, _ = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                path = pending.pop(fut)
                msg = fut.result()
                if path == ():
                    root = msg
                    continue
                parent = path[:-1]
                box = inbox.setdefault(parent, {})
                box[path[-1]] = msg
                if len(box) == tree.branching[len(parent)]:
                    kids = [box[j] for j in sorted(box)]
                    del inbox[parent]
                    pending[pool.submit(merge_task, parent, kids)] = parent
    return root


def run_downward(post: PosteriorFactors, pred_prior: dict, ys: dict, KA: dict,
                 workers: int = 1, trace: ScheduleTrace | None = None) -> dict:
    """Leaf-parallel posterior basis sweep; one task per prediction leaf."""
    from .predict import predict_leaf

    leaves = sorted(pred_prior)

    def task(leaf):
        return _timed(trace, leaf, "leaf-predict", predict_leaf, post, leaf, pred_prior[leaf],
                      ys[leaf], KA)

    if workers <= 1:
        results = [task(leaf) for leaf in leaves]
    else:
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="mra") as pool:
            results = list(pool.map(task, leaves))
    return dict(zip(leaves, results))


def inbound_blocks_expected(J: int, m: int) -> int:
    """Blocks received by a resolution-``m`` region from its ``J`` children:
    each child sends the lower triangle of an ``(m+1) x (m+1)`` block matrix
    plus ``m+1`` weight vectors."""
    return J * ((m + 1) * (m + 2) // 2 + (m + 1))
