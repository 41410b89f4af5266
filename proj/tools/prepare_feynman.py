#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Fetch Feynman benchmark tables and check them against a SHA-256 list.

The dataset is not bundled. Pass a text file with one `name url` pair per line.
Checksums live in <dest>/SHA256SUMS; missing entries are recorded on first
download and verified on every later run. Writing .spec files (units, truth)
for each table is left to the caller.
"""

import argparse
import hashlib
import pathlib
import sys
import urllib.request


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def read_sums(path):
    sums = {}
    if path.exists():
        for line in path.read_text().splitlines():
            if line.strip():
                digest, name = line.split(maxsplit=1)
                sums[name.strip()] = digest
    return sums


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("sources", help="file of 'name url' lines")
    ap.add_argument("dest", help="output directory")
    args = ap.parse_args()

    dest = pathlib.Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    sums_path = dest / "SHA256SUMS"
    sums = read_sums(sums_path)
    bad = 0
    for line in pathlib.Path(args.sources).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        name, url = line.split(maxsplit=1)
        target = dest / name
        if not target.exists():
            urllib.request.urlretrieve(url.strip(), target)
        digest = sha256(target)
        if name not in sums:
            sums[name] = digest
            print(f"{name}: recorded {digest}")
        elif sums[name] != digest:
            print(f"{name}: checksum mismatch", file=sys.stderr)
            bad += 1
        else:
            print(f"{name}: ok")
    sums_path.write_text("".join(f"{d}  {n}\n" for n, d in sorted(sums.items())))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
