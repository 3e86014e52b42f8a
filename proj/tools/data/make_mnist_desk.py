#!/usr/bin/env python3
"""Build the desk-scale MNIST subset from the npm `mnist` package.

The package (https://www.npmjs.com/package/mnist, MIT) ships 10,000 real MNIST
digits (863 to 1127 per class) as JSON arrays of pixel/255 values. This script
re-quantizes them to uint8, keeps the first 800 of each class for training and
the remainder for testing, and writes both shuffled in the canonical
gzip-compressed IDX layout.

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 tools/data/make_mnist_desk.py package/src/digits data/mnist-desk
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path

SIDE = 28
TRAIN_PER_CLASS = 800


def write_idx(path, images, labels_path, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), SIDE, SIDE))
        for img in images:
            f.write(bytes(img))
    with gzip.GzipFile(labels_path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    train, test = [], []
    for digit in range(10):
        raw = json.loads((src / f"{digit}.json").read_text())["data"]
        n = len(raw) // (SIDE * SIDE)
        samples = []
        for k in range(n):
            px = raw[k * SIDE * SIDE:(k + 1) * SIDE * SIDE]
            samples.append([max(0, min(255, round(v * 255))) for v in px])
        train += [(s, digit) for s in samples[:TRAIN_PER_CLASS]]
        test += [(s, digit) for s in samples[TRAIN_PER_CLASS:]]
    rng = random.Random(20180903)
    rng.shuffle(train)
    rng.shuffle(test)
    for name, rows in (("train", train), ("t10k", test)):
        write_idx(out / f"{name}-images-idx3-ubyte.gz", [r[0] for r in rows],
                  out / f"{name}-labels-idx1-ubyte.gz", [r[1] for r in rows])
        print(name, len(rows))


if __name__ == "__main__":
    main()
