"""Monte-Carlo measurement records.

Events are drawn one at a time from a PCG64 stream (numpy's
``np.random.PCG64``; output is platform independent for a given seed), so
the first ``m`` events of an ``n``-event run are exactly an ``m``-event run.
Independent streams come from ``SeedSequence(seed, spawn_key=(stream,))``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .premeasurement import ProbabilityRecord


def generator(seed: int, stream: int = 0, *substream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(stream),) + tuple(int(s) for s in substream))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True, eq=False)
class SampleCounts:
    labels: tuple
    counts: np.ndarray
    total: int

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if np.any(c < 0) or int(c.sum()) != int(self.total):
            raise ValidationError("counts must be non-negative and sum to the total")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.total


def sample_events(probs: ProbabilityRecord, n: int, seed: int, stream: int = 0,
                  substream: tuple = ()) -> np.ndarray:
    """Outcome index of each of ``n`` consecutively prepared systems."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    p = np.asarray(probs.probabilities)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = generator(seed, stream, *substream).random(int(n))
    idx = np.searchsorted(cdf, u, side="right")
    # outcomes with zero probability are never selected
    return np.minimum(idx, len(p) - 1)


def sample_outcomes(probs: ProbabilityRecord, n: int, seed: int, stream: int = 0) -> SampleCounts:
    events = sample_events(probs, n, seed, stream)
    counts = np.bincount(events, minlength=len(probs.probabilities))
    return SampleCounts(probs.labels, counts, int(n))


@dataclass(frozen=True)
class ConvergenceReport:
    schedule: tuple
    max_errors: tuple    # per n; root mean square over replicates when replicates > 1
    frequencies: tuple   # per n, first replicate
    slope: float | None  # log-log fit of max_errors against n; None if fewer than 2 are > 0
    replicates: int = 1

    def rows(self, probs: ProbabilityRecord):
        """Flat table rows (n, label, count, frequency, |freq - p|) of the first replicate."""
        for n, freqs in zip(self.schedule, self.frequencies):
            for lab, f, p in zip(probs.labels, freqs, probs.probabilities):
                yield n, lab, int(round(f * n)), f, abs(f - p)


def convergence_report(probs: ProbabilityRecord, schedule, seed: int, stream: int = 0,
                       replicates: int = 1) -> ConvergenceReport:
    """Frequency error of the first ``n`` events for each ``n`` in ``schedule``.

    With ``replicates > 1`` each replicate is an independent substream and the
    reported error per ``n`` is the root mean square of the replicate maxima,
    which steadies the fitted slope.
    """
    schedule = tuple(sorted(int(n) for n in schedule))
    k = len(probs.probabilities)
    sq = np.zeros(len(schedule))
    freqs = []
    for r in range(int(replicates)):
        sub = () if replicates == 1 else (r,)
        events = sample_events(probs, schedule[-1], seed, stream, sub)
        for i, n in enumerate(schedule):
            f = np.bincount(events[:n], minlength=k) / n
            if r == 0:
                freqs.append(tuple(f.tolist()))
            sq[i] += np.max(np.abs(f - probs.probabilities)) ** 2
    errs = np.sqrt(sq / replicates).tolist()
    # an exact hit (error 0) has no logarithm; such points are left out of the fit
    pts = [(n, e) for n, e in zip(schedule, errs) if e > 0]
    slope = None
    if len(pts) >= 2:
        x, y = np.log(np.array(pts, dtype=float)).T
        slope = float(np.polyfit(x, y, 1)[0])
    return ConvergenceReport(schedule, tuple(errs), tuple(freqs), slope, int(replicates))


def log_schedule(lo: float = 1e2, hi: float = 1e6, points: int = 17) -> tuple:
    return tuple(int(n) for n in np.unique(np.round(np.logspace(np.log10(lo), np.log10(hi), points))))


def write_counts_csv(path, reports, probs: ProbabilityRecord) -> None:
    """``n, outcome, count, frequency, abs_error`` for one or more convergence reports."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "outcome", "count", "frequency", "abs_error"])
        for rep in reports:
            for n, lab, c, f, e in rep.rows(probs):
                w.writerow([n, lab, c, repr(float(f)), repr(float(e))])
