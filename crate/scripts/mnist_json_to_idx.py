#!/usr/bin/env python3
"""Convert the 10,000-digit MNIST sample shipped in the npm `mnist` package
(src/digits/<d>.json, pixels as floats in [0, 1]) into IDX files.

Usage: mnist_json_to_idx.py <digits_dir> <out_dir> [--train 8000] [--seed 7]

The digits are shuffled with a fixed seed and split into train/test sets
written as train-images-idx3-ubyte / train-labels-idx1-ubyte and
t10k-images-idx3-ubyte / t10k-labels-idx1-ubyte.
"""
import argparse
import json
import os
import random
import struct


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--train", type=int, default=8000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    samples = []
    for digit in range(10):
        with open(os.path.join(args.digits_dir, f"{digit}.json")) as f:
            flat = json.load(f)["data"]
        assert len(flat) % 784 == 0
        for i in range(0, len(flat), 784):
            pixels = [min(255, max(0, round(v * 255))) for v in flat[i : i + 784]]
            samples.append((pixels, digit))

    random.Random(args.seed).shuffle(samples)
    train, test = samples[: args.train], samples[args.train :]
    os.makedirs(args.out_dir, exist_ok=True)
    write_images(os.path.join(args.out_dir, "train-images-idx3-ubyte"), [s[0] for s in train])
    write_labels(os.path.join(args.out_dir, "train-labels-idx1-ubyte"), [s[1] for s in train])
    write_images(os.path.join(args.out_dir, "t10k-images-idx3-ubyte"), [s[0] for s in test])
    write_labels(os.path.join(args.out_dir, "t10k-labels-idx1-ubyte"), [s[1] for s in test])
    print(f"wrote {len(train)} train / {len(test)} test images to {args.out_dir}")


if __name__ == "__main__":
    main()
