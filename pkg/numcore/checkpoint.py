"""
Checkpoint format
"MFPN1" magic, then one record per parameter until EOF:
    u32 name length | name (utf-8) | u32 rank | u32 dims[rank] | f64 little-endian data
"""
import struct
from pathlib import Path
from typing import Dict, Sequence, Union

import numpy as np

from config.logging import get_logger
from errors import CheckpointError
from numcore.tensor import Parameter

MAGIC = b"MFPN1"

logger = get_logger(__name__)


def encode_parameters(params: Sequence[Parameter]) -> bytes:
    chunks = [MAGIC]
    for p in params:
        name = p.name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<I", p.ndim))
        chunks.append(struct.pack(f"<{p.ndim}I", *p.shape))
        chunks.append(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_parameters(blob: bytes) -> Dict[str, np.ndarray]:
    if not blob.startswith(MAGIC):
        raise CheckpointError("not an MFPN1 checkpoint (bad magic)")
    arrays: Dict[str, np.ndarray] = {}
    offset = len(MAGIC)
    try:
        while offset < len(blob):
            (name_len,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            name = blob[offset:offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            dims = struct.unpack_from(f"<{rank}I", blob, offset)
            offset += 4 * rank
            count = int(np.prod(dims)) if rank else 1
            end = offset + 8 * count
            if end > len(blob):
                raise CheckpointError(f"truncated data for parameter {name!r}")
            arrays[name] = np.frombuffer(blob[offset:end], dtype="<f8").reshape(dims).astype(np.float64)
            offset = end
    except (struct.error, UnicodeDecodeError) as e:
        raise CheckpointError(f"corrupt checkpoint at byte {offset}: {e}") from e
    return arrays


def save_checkpoint(path: Union[str, Path], params: Sequence[Parameter]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_parameters(params))
    logger.debug("checkpoint_saved", path=str(path), parameters=len(params))
    return path


def load_checkpoint(path: Union[str, Path], params: Sequence[Parameter]) -> None:
    """Restore values by name; every parameter must be present with its exact shape"""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"checkpoint not readable: {path}") from e
    arrays = decode_parameters(blob)
    missing = [p.name for p in params if p.name not in arrays]
    if missing:
        raise CheckpointError(f"checkpoint {path} lacks parameters: {', '.join(missing)}")
    for p in params:
        value = arrays[p.name]
        if value.shape != p.shape:
            raise CheckpointError(
                f"checkpoint shape {value.shape} for {p.name!r} does not match {p.shape}"
            )
        p.assign(value)
    logger.debug("checkpoint_loaded", path=str(path), parameters=len(params))
