"""Report bundles: TSV tables plus a manifest that pins the run.

The manifest records the fully resolved configuration, the seed,
library versions, and SHA-256 digests of every input and output file,
which is enough to rerun a bundle and byte-compare the tables.
"""
from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path
from typing import Sequence

import numpy
import scipy

__all__ = ["write_tsv", "sha256_file", "emit_report"]


def write_tsv(path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header))
        fh.write("\n")
        for row in rows:
            fh.write("\t".join(str(cell) for cell in row))
            fh.write("\n")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def emit_report(
    out_dir,
    tables: dict[str, tuple[Sequence[str], Sequence[Sequence[str]]]],
    config: dict,
    inputs: dict[str, str] | None = None,
    text_files: dict[str, str] | None = None,
) -> dict:
    """Write TSV tables (name -> (header, rows)) and manifest.json.

    ``text_files`` are extra verbatim files (e.g. null samples, one value
    per line). Returns the manifest dict; refuses to write nothing.
    """
    if not tables and not text_files:
        raise ValueError("report bundle needs at least one table or file")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    outputs: dict[str, str] = {}
    for name, (header, rows) in tables.items():
        filename = name if name.endswith(".tsv") else name + ".tsv"
        write_tsv(out_dir / filename, header, rows)
        outputs[filename] = sha256_file(out_dir / filename)
    for filename, content in (text_files or {}).items():
        (out_dir / filename).write_text(content, encoding="utf-8")
        outputs[filename] = sha256_file(out_dir / filename)

    from . import __version__

    manifest = {
        "config": config,
        "versions": {
            "demovec": __version__,
            "python": platform.python_version(),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
        "inputs": {
            name: {"path": str(p), "sha256": sha256_file(p)}
            for name, p in (inputs or {}).items()
        },
        "outputs": outputs,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    return manifest
