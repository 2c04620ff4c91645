"""Wall-clock timing of short calls.

A call that finishes faster than the clock resolves reliably is timed in a batch
of back-to-back calls; every stored sample is seconds per call.
"""
from contextlib import contextmanager
from dataclasses import dataclass, field
from time import perf_counter
from typing import Callable, Dict, Iterator, List

import numpy as np

MIN_SAMPLE_S = 1e-3
MAX_BATCH = 1 << 16


@dataclass
class TimingRecord:
    calls_per_sample: int = 1
    samples: List[float] = field(default_factory=list)


class TimeKeeper:
    def __init__(self, min_sample_s: float = MIN_SAMPLE_S, max_batch: int = MAX_BATCH):
        self.min_sample_s = min_sample_s
        self.max_batch = max_batch
        self.records: Dict[str, TimingRecord] = {}

    @contextmanager
    def measure_time(self, key: str, calls: int = 1) -> Iterator[TimingRecord]:
        """Times the body as `calls` calls and appends the per-call duration to `key`."""
        record = self.records.setdefault(key, TimingRecord(calls))
        start = perf_counter()
        yield record
        record.samples.append((perf_counter() - start) / calls)

    def calibrate(self, fn: Callable[[], object]) -> int:
        """Smallest power of two of back-to-back calls that takes at least `min_sample_s`."""
        calls = 1
        while calls < self.max_batch:
            start = perf_counter()
            for _ in range(calls):
                fn()
            if perf_counter() - start >= self.min_sample_s:
                break
            calls *= 2
        return calls

    def measure(self, key: str, fn: Callable[[], object], repeats: int, warmup: int = 0) -> float:
        """Median seconds per call over `repeats` calibrated batches; earlier samples of `key` are dropped."""
        for _ in range(warmup):
            fn()
        calls = self.calibrate(fn)
        self.records[key] = TimingRecord(calls)
        for _ in range(repeats):
            with self.measure_time(key, calls):
                for _ in range(calls):
                    fn()
        return self.median(key)

    def num(self, key: str) -> int:
        record = self.records.get(key)
        return len(record.samples) if record is not None else 0

    def median(self, key: str) -> float:
        return float(np.median(self.records[key].samples))

    def print(self, logger=None) -> None:
        if not logger:
            from .pylogger import get_pylogger
            logger = get_pylogger(__name__)
        for key, record in self.records.items():
            if not record.samples:
                continue
            logger.info(f"Timing <key={key}, median_ms={self.median(key) * 1e3:.4g}, "
                        f"samples={len(record.samples)}, calls_per_sample={record.calls_per_sample}>")
