#!/usr/bin/env python3
"""Convert a citation corpus (.content/.cites pair) into loader formats.

The public Citeseer/Cora archives ship two files:

* ``<name>.content``: one line per paper,
  ``<paper_id> <f_1> ... <f_m> <class_name>`` (whitespace separated);
* ``<name>.cites``: one directed citation per line, ``<cited> <citing>``.

Papers are indexed 0..n-1 in .content order.  Citations whose endpoints
carry no attribute row are dropped (a handful of Citeseer papers appear
only in the citation file).  Output: ``edges.txt`` (directed integer
pairs), ``features.txt`` (sparse triplets), ``labels.txt`` and
``manifest.json`` with ``directed=true``, ready for the dataset loader,
which symmetrizes and deduplicates.

Example:
    python scripts/convert_citation_graph.py \
        --content citeseer.content --cites citeseer.cites \
        --name citeseer --out data/citeseer
"""

import argparse
import json
import os
import sys


def convert(content_path, cites_path, out_dir, name):
    ids = []
    index = {}
    rows = []
    labels_raw = []
    with open(content_path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            paper_id, *features, label = parts
            index[paper_id] = len(ids)
            ids.append(paper_id)
            rows.append([float(v) for v in features])
            labels_raw.append(label)
    n = len(ids)
    m = len(rows[0]) if rows else 0
    if any(len(r) != m for r in rows):
        raise ValueError("feature rows have inconsistent lengths")

    class_ids = {c: i for i, c in enumerate(sorted(set(labels_raw)))}
    kept_edges = []
    dropped = 0
    with open(cites_path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"malformed citation line: {line!r}")
            cited, citing = parts
            if cited in index and citing in index:
                kept_edges.append((index[cited], index[citing]))
            else:
                dropped += 1

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "edges.txt"), "w", encoding="utf-8") as fh:
        fh.writelines(f"{u} {v}\n" for u, v in kept_edges)
    with open(os.path.join(out_dir, "features.txt"), "w", encoding="utf-8") as fh:
        for i, row in enumerate(rows):
            for j, value in enumerate(row):
                if value != 0.0:
                    fh.write(f"{i} {j} {value!r}\n")
    with open(os.path.join(out_dir, "labels.txt"), "w", encoding="utf-8") as fh:
        fh.writelines(f"{class_ids[c]}\n" for c in labels_raw)
    manifest = {
        "name": name,
        "edges_path": "edges.txt",
        "features_path": "features.txt",
        "labels_path": "labels.txt",
        "directed": True,
        "feature_format": "sparse_triplet",
        "zero_indexed": True,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"nodes": n, "features": m, "classes": len(class_ids),
            "edges_kept": len(kept_edges), "edges_dropped": dropped}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--content", required=True)
    parser.add_argument("--cites", required=True)
    parser.add_argument("--name", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    stats = convert(args.content, args.cites, args.out, args.name)
    print(f"{args.name}: {stats['nodes']} nodes, {stats['features']} features, "
          f"{stats['classes']} classes; kept {stats['edges_kept']} citations, "
          f"dropped {stats['edges_dropped']} with missing endpoints")
    return 0


if __name__ == "__main__":
    sys.exit(main())
