#!/usr/bin/env python3
# Copyright 2026 The modgae Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Converts a LINQS-style citation dump (<name>.cites, <name>.content) into a
modgae dataset directory: graph.edges, labels.csv and features.csv.

Papers are numbered 0..n-1 in .content order. Citations to papers missing
from .content are dropped.
"""

import argparse
import csv
import pathlib


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cites", required=True, type=pathlib.Path)
    ap.add_argument("--content", required=True, type=pathlib.Path)
    ap.add_argument("--out", required=True, type=pathlib.Path)
    args = ap.parse_args()

    index, labels, features = {}, [], []
    with args.content.open() as f:
        for line in f:
            cells = line.split()
            if not cells:
                continue
            index[cells[0]] = len(index)
            features.append(cells[1:-1])
            labels.append(cells[-1])

    edges, dropped = set(), 0
    with args.cites.open() as f:
        for line in f:
            cells = line.split()
            if len(cells) != 2:
                continue
            if cells[0] not in index or cells[1] not in index:
                dropped += 1
                continue
            u, v = index[cells[0]], index[cells[1]]
            if u != v:
                edges.add((min(u, v), max(u, v)))

    args.out.mkdir(parents=True, exist_ok=True)
    with (args.out / "graph.edges").open("w") as f:
        f.write(f"# nodes: {len(index)}\n")
        for u, v in sorted(edges):
            f.write(f"{u} {v}\n")
    with (args.out / "labels.csv").open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["node_id", "community_id"])
        w.writerows(enumerate(labels))
    with (args.out / "features.csv").open("w", newline="") as f:
        csv.writer(f).writerows(features)
    print(f"n={len(index)} m={len(edges)} classes={len(set(labels))} dropped={dropped}")


if __name__ == "__main__":
    main()
