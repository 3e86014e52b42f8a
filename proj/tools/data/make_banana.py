#!/usr/bin/env python3
"""Generate the 400-point two-crescent "banana" dataset shipped in data/.

Class -1 lies on an outer arc, class +1 on an inner arc shifted so the two
crescents interlock. Coordinates are roughly in [-3, 3]^2.

    python3 tools/data/make_banana.py data/banana.csv
"""
import math
import random
import sys

N_PER_CLASS = 200
NOISE = 0.35


def main():
    rng = random.Random(400)
    rows = []
    for _ in range(N_PER_CLASS):
        t = rng.uniform(0.15 * math.pi, 1.05 * math.pi)
        x = 2.2 * math.cos(t) + rng.gauss(0, NOISE)
        y = 2.2 * math.sin(t) - 0.9 + rng.gauss(0, NOISE)
        rows.append((x, y, -1))
    for _ in range(N_PER_CLASS):
        t = rng.uniform(1.05 * math.pi, 1.95 * math.pi)
        x = 2.2 * math.cos(t) + 1.1 + rng.gauss(0, NOISE)
        y = 2.2 * math.sin(t) + 1.3 + rng.gauss(0, NOISE)
        rows.append((x, y, 1))
    rng.shuffle(rows)
    with open(sys.argv[1], "w") as f:
        f.write("x1,x2,y\n")
        for x, y, c in rows:
            f.write(f"{x:.6f},{y:.6f},{c}\n")


if __name__ == "__main__":
    main()
