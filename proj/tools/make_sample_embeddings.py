#!/usr/bin/env python3
"""Writes the small .emb fixtures under samples/embeddings (stdlib only)."""
import random
import struct
import sys
from pathlib import Path


def write_emb(path, rows):
    dim = len(rows[0]) if rows else 0
    with open(path, "wb") as f:
        f.write(b"DBDE" + struct.pack("<HII", 1, dim, len(rows)))
        for r in rows:
            f.write(struct.pack("<%df" % dim, *r))


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240601)
    gauss = lambda n: [rng.gauss(0.0, 1.0) for _ in range(n)]

    same = [gauss(16) for _ in range(4)]
    write_emb(out / "same_image.emb", same)
    write_emb(out / "same_caption.emb", same)

    # one full-image row plus three object crops; full caption plus two sentences
    write_emb(out / "item_image.emb", [gauss(16) for _ in range(4)])
    write_emb(out / "item_caption.emb", [gauss(16) for _ in range(3)])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "samples/embeddings")
