"""Shared per-iteration trace schema used by every algorithm."""

import math
from dataclasses import dataclass

#: bit-exact CSV header for benchmark output
TRACE_HEADER = "algorithm,seed,epoch,iter,samples,samples_per_N,objective,gap"


@dataclass(frozen=True)
class TraceRecord:
    """One accounting row: where a run was after `samples` oracle samples."""

    algorithm: str
    seed: int
    epoch: int
    iteration: int
    samples: int
    samples_per_N: float
    objective: float
    gap: float | None = None

    def to_csv_row(self) -> str:
        gap = "" if self.gap is None else repr(float(self.gap))
        return (f"{self.algorithm},{self.seed},{self.epoch},{self.iteration},"
                f"{self.samples},{self.samples_per_N!r},{float(self.objective)!r},{gap}")


def abort_record(algorithm: str, seed: int, samples: int, N: int) -> TraceRecord:
    """Marker row appended when a run is aborted (divergence): epoch/iter = -1, NaN objective."""
    return TraceRecord(algorithm=algorithm, seed=seed, epoch=-1, iteration=-1,
                       samples=samples, samples_per_N=samples / N,
                       objective=math.nan, gap=math.nan)


def with_gap(record: TraceRecord, phi_star: float) -> TraceRecord:
    return TraceRecord(algorithm=record.algorithm, seed=record.seed, epoch=record.epoch,
                       iteration=record.iteration, samples=record.samples,
                       samples_per_N=record.samples_per_N, objective=record.objective,
                       gap=record.objective - phi_star)
