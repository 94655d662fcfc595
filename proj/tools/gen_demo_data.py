#!/usr/bin/env python3
"""Generates the synthetic actuator CSVs shipped in data/ and tests/fixtures/.

Values are drawn log-normally around rough per-class centers so the files
look like real actuator surveys without claiming to be one.
"""
import argparse
import csv
import math
import random
import sys

HEADER = ["id", "class", "bandwidth_hz", "strain_pct", "stress_mpa",
          "efficiency_pct", "power_density_w_per_g", "source"]

# bandwidth Hz, strain %, stress MPa, efficiency %, power density W/g
CENTERS = {
    "PZT": (1e4, 0.2, 100.0, 70.0, 1.0),
    "DEA": (100.0, 100.0, 1.0, 60.0, 1.0),
    "IPMC": (10.0, 2.0, 10.0, 1.0, 0.05),
    "SMA": (1.0, 5.0, 300.0, 2.0, 50.0),
    "SFA": (5.0, 30.0, 5.0, 30.0, 0.5),
    "SCP": (0.5, 20.0, 20.0, 1.5, 3.0),
    "EAP": (20.0, 10.0, 0.5, 10.0, 0.1),
}


def fmt(v):
    return repr(float("%.4g" % v))


def rows(per_class, spread, missing, seed):
    rng = random.Random(seed)
    n = 0
    for name, center in CENTERS.items():
        for _ in range(per_class):
            values = []
            for c in center:
                v = math.exp(math.log(c) + rng.gauss(0.0, spread))
                values.append("" if rng.random() < missing else fmt(v))
            # keep at least two features so every row is queryable
            while sum(1 for v in values if v) < 2:
                i = rng.randrange(len(values))
                values[i] = fmt(math.exp(math.log(center[i]) + rng.gauss(0.0, spread)))
            n += 1
            yield [f"r{n:04d}", name, *values, "synthetic"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--per-class", type=int, default=40)
    ap.add_argument("--spread", type=float, default=0.6)
    ap.add_argument("--missing", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows(args.per_class, args.spread, args.missing, args.seed):
        w.writerow(r)


if __name__ == "__main__":
    main()
