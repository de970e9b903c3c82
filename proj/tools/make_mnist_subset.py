#!/usr/bin/env python3
"""Write the 5000-sample MNIST subset bundled with mlxtend as gzipped IDX files.

Usage: make_mnist_subset.py [--csv PATH] [--out-dir data]

Without --csv the mlxtend wheel is fetched with `pip download` into a
temporary directory and the CSV is read from inside it.
"""
import argparse
import gzip
import pathlib
import struct
import subprocess
import sys
import tempfile
import zipfile


def find_csv(tmp: pathlib.Path) -> bytes:
    subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps",
                           "-d", str(tmp), "mlxtend==0.24.0"])
    wheel = next(tmp.glob("mlxtend-*.whl"))
    with zipfile.ZipFile(wheel) as zf:
        return zf.read("mlxtend/data/data/mnist_5k.csv.gz")


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", type=pathlib.Path)
    ap.add_argument("--out-dir", type=pathlib.Path, default=pathlib.Path("data"))
    args = ap.parse_args()

    if args.csv:
        raw = args.csv.read_bytes()
    else:
        with tempfile.TemporaryDirectory() as d:
            raw = find_csv(pathlib.Path(d))
    text = gzip.decompress(raw).decode("ascii")

    pixels, labels = bytearray(), bytearray()
    rows = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        vals = [int(float(v)) for v in line.split(",")]
        assert len(vals) == 785
        pixels.extend(vals[:-1])
        labels.append(vals[-1])
        rows += 1

    args.out_dir.mkdir(parents=True, exist_ok=True)
    # mtime=0 keeps the output byte-stable across runs
    with gzip.GzipFile(args.out_dir / "mnist5k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, rows, 28, 28))
        f.write(pixels)
    with gzip.GzipFile(args.out_dir / "mnist5k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, rows))
        f.write(labels)
    print(f"wrote {rows} samples to {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
