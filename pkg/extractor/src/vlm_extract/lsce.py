"""Standalone writer for the LSCE tensor container.

Implements the documented wire format (see the toolkit README): per
record a 20-byte header (magic "LSCE", version 1, dim, token_count,
id_length as little-endian u32) followed by the UTF-8 image id and a
row-major float32 little-endian payload. Deliberately independent of the
toolkit's own code so this package only touches the published interface.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable

import numpy as np

MAGIC = b"LSCE"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def write_lsce(path, items: Iterable[tuple[str, np.ndarray]]) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        for image_id, tokens in items:
            tokens = np.asarray(tokens)
            if tokens.ndim != 2 or tokens.shape[0] < 1 or tokens.shape[1] < 1:
                raise ValueError(f"token matrix for {image_id!r} must be 2-d and non-empty")
            encoded = image_id.encode("utf-8")
            token_count, dim = tokens.shape
            fh.write(_HEADER.pack(MAGIC, VERSION, dim, token_count, len(encoded)))
            fh.write(encoded)
            fh.write(np.ascontiguousarray(tokens, dtype="<f4").tobytes())
