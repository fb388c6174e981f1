#!/usr/bin/env python3
"""Builds tests/fixtures/interop_pyfatfs.img.gz with pyfatfs, an independent FAT32 implementation.

The image is formatted and populated by pyfatfs only. Expected values recorded in
interop_pyfatfs.json are computed here from the raw bytes, not by umstk.

    pip install pyfatfs==1.1.0
    python3 tools/make_interop_fixture.py
"""

import gzip
import hashlib
import json
import os
import struct
import tempfile
from importlib.metadata import version

from pyfatfs.PyFat import PyFat
from pyfatfs.PyFatFS import PyFatFS

HERE = os.path.dirname(os.path.abspath(__file__))
OUT_DIR = os.path.join(HERE, "..", "tests", "fixtures")
SIZE = 40 * 1024 * 1024
LABEL = "INTEROP"
VOLUME_ID = 0x1234ABCD

FILES = {
    "/hello.txt": b"Hello from an independent FAT32 formatter.\n",
    "/Long File Name Example.txt": b"long names are stored as LFN runs\n" * 40,
    "/data/blob.bin": bytes((i * 7 + 3) % 256 for i in range(70000)),
}


def free_clusters(raw: bytes) -> int:
    bps, spc, reserved, nfats = struct.unpack_from("<HBHB", raw, 11)
    total = struct.unpack_from("<I", raw, 32)[0]
    fatsz = struct.unpack_from("<I", raw, 36)[0]
    data_start = reserved + nfats * fatsz
    clusters = (total - data_start) // spc
    entries = min(fatsz * bps // 4, clusters + 2)
    fat = raw[reserved * bps : reserved * bps + entries * 4]
    return sum(
        1
        for c in range(2, entries)
        if struct.unpack_from("<I", fat, c * 4)[0] & 0x0FFFFFFF == 0
    )


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "interop.img")
        with open(path, "wb") as f:
            f.truncate(SIZE)
        pf = PyFat()
        pf.mkfs(path, fat_type=PyFat.FAT_TYPE_FAT32, size=SIZE, label=LABEL, volume_id=VOLUME_ID)
        pf.close()

        fs = PyFatFS(path)
        fs.makedir("/data")
        for name, payload in FILES.items():
            with fs.openbin(name, "w") as f:
                f.write(payload)
        fs.close()

        raw = open(path, "rb").read()

    os.makedirs(OUT_DIR, exist_ok=True)
    with gzip.GzipFile(os.path.join(OUT_DIR, "interop_pyfatfs.img.gz"), "wb", mtime=0) as gz:
        gz.write(raw)

    bps = struct.unpack_from("<H", raw, 11)[0]
    fsinfo = struct.unpack_from("<H", raw, 48)[0]
    meta = {
        "generator": "pyfatfs " + version("pyfatfs"),
        "image_size": len(raw),
        "image_sha256": hashlib.sha256(raw).hexdigest(),
        "label": LABEL,
        "volume_id": VOLUME_ID,
        "sectors_per_cluster": raw[13],
        "free_clusters_fat_scan": free_clusters(raw),
        "fsinfo_free_count": struct.unpack_from("<I", raw, fsinfo * bps + 488)[0],
        "files": {
            name: {"size": len(data), "sha256": hashlib.sha256(data).hexdigest()}
            for name, data in FILES.items()
        },
    }
    with open(os.path.join(OUT_DIR, "interop_pyfatfs.json"), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    print(json.dumps(meta, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
