#!/usr/bin/env python3
"""Measurement records and the law of large numbers.

Each event is one prepared system; events are drawn one after another from
a seeded PCG64 stream, so a longer run extends a shorter one.  Frequency
errors fall like n^(-1/2).

Run:
  python3 demos/05_sampling.py
"""
from qmeasure import sampling
from qmeasure.premeasurement import ProbabilityRecord


def main():
    probs = ProbabilityRecord(("up", "down"), [0.5, 0.5])
    rep = sampling.convergence_report(probs, sampling.log_schedule(), seed=42, replicates=10)
    print(f"{'n':>9}  {'rms max error':>13}  {'sqrt(p(1-p)/n)':>14}")
    for n, e in zip(rep.schedule, rep.max_errors):
        print(f"{n:9d}  {e:13.2e}  {(0.25 / n) ** 0.5:14.2e}")
    print(f"\nlog-log slope {rep.slope:.3f} (expected -1/2)")

    first = sampling.sample_events(probs, 10, seed=42)
    longer = sampling.sample_events(probs, 20, seed=42)
    print("first ten events:", first.tolist(), "| prefix of longer run:", (longer[:10] == first).all())


if __name__ == "__main__":
    main()
