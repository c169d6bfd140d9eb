#!/usr/bin/env python3
"""Convert the 10k-digit MNIST subset shipped in the npm `mnist` package
into a pair of IDX files (images idx3-ubyte, labels idx1-ubyte).

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_subset_to_idx.py package/src/digits data/mnist
"""
import json
import random
import struct
import sys
from pathlib import Path


def main() -> None:
    src = Path(sys.argv[1])
    out = Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        assert len(data) % 784 == 0
        for k in range(len(data) // 784):
            pix = bytes(
                min(255, max(0, round(v * 255))) for v in data[k * 784:(k + 1) * 784]
            )
            records.append((pix, digit))
    random.Random(20150101).shuffle(records)
    n = len(records)
    with open(out / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for pix, _ in records:
            f.write(pix)
    with open(out / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(bytes(label for _, label in records))
    print(f"wrote {n} records to {out}")


if __name__ == "__main__":
    main()
