#!/usr/bin/env python3
"""Place the MovieLens-100k ratings file at data/ml-100k/u.data.

Tries the GroupLens archive first. If that is unreachable, falls back to the
identical copy shipped inside the RecBole wheel (fetched with pip), which
stores u.data as ml-100k.inter with one header line.

The data is distributed under the GroupLens license and is not part of this
repository.
"""

import argparse
import hashlib
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
WHEEL_MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"
EXPECTED_LINES = 100000


def from_grouplens(timeout):
    with urllib.request.urlopen(GROUPLENS_URL, timeout=timeout) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    return archive.read("ml-100k/u.data")


def from_recbole_wheel(wheel=None):
    with tempfile.TemporaryDirectory() as tmp:
        if wheel is None:
            subprocess.run(
                [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, "recbole==1.2.1"],
                check=True,
            )
            wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        with zipfile.ZipFile(wheel) as archive:
            text = archive.read(WHEEL_MEMBER).decode()
    lines = text.splitlines()
    if lines and not lines[0][:1].isdigit():
        lines = lines[1:]
    return ("\n".join(lines) + "\n").encode()


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=pathlib.Path(__file__).resolve().parent.parent / "data/ml-100k/u.data",
                        type=pathlib.Path)
    parser.add_argument("--wheel", type=pathlib.Path, help="local recbole wheel to extract from")
    parser.add_argument("--timeout", type=float, default=10.0)
    args = parser.parse_args()

    data = None
    if args.wheel is None:
        try:
            data = from_grouplens(args.timeout)
        except Exception as exc:  # network failures of any kind
            print(f"grouplens unavailable ({exc}); using the recbole wheel", file=sys.stderr)
    if data is None:
        data = from_recbole_wheel(args.wheel)

    rows = data.decode().splitlines()
    if len(rows) != EXPECTED_LINES or any(len(r.split("\t")) != 4 for r in rows):
        sys.exit(f"unexpected content: {len(rows)} rows")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(data)
    print(f"{args.out}  {len(rows)} ratings  sha256 {hashlib.sha256(data).hexdigest()[:16]}")


if __name__ == "__main__":
    main()
