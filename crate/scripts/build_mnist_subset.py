"""Build the 2000/2000 MNIST IDX subset shipped under data/mnist-subset.

Source: the `mnist` npm package (10,000 MNIST digits stored as JSON arrays of
pixel/255 values rounded to 3 decimals). Pixels are mapped back to bytes with
round(v * 255). Samples are shuffled with a fixed seed before splitting.

usage: python3 scripts/build_mnist_subset.py <path-to-npm-package> <out-dir>
"""
import json
import struct
import sys
from pathlib import Path

import numpy as np


def main():
    pkg = Path(sys.argv[1])
    out = Path(sys.argv[2])
    images, labels = [], []
    for digit in range(10):
        raw = json.loads((pkg / "src" / "digits" / f"{digit}.json").read_text())["data"]
        arr = np.rint(np.asarray(raw, dtype=np.float64) * 255.0).clip(0, 255).astype(np.uint8)
        arr = arr.reshape(-1, 784)
        images.append(arr)
        labels.append(np.full(arr.shape[0], digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.default_rng(20180530).permutation(len(labels))
    images, labels = images[order], labels[order]

    for name, lo, hi in (("train", 0, 2000), ("test", 2000, 4000)):
        img, lab = images[lo:hi], labels[lo:hi]
        with open(out / f"{name}-images-idx3-ubyte", "wb") as f:
            f.write(struct.pack(">IIII", 0x803, len(lab), 28, 28))
            f.write(img.tobytes())
        with open(out / f"{name}-labels-idx1-ubyte", "wb") as f:
            f.write(struct.pack(">II", 0x801, len(lab)))
            f.write(lab.tobytes())
        print(name, len(lab), np.bincount(lab, minlength=10))


if __name__ == "__main__":
    main()
