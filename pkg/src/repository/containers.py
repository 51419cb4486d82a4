"""Binary array container: MCIR magic, version, dtype tag, dims, row-major payload and CRC32"""

import struct
import zlib
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.exceptions import (
    ContainerChecksumError,
    ContainerDtypeError,
    ContainerError,
    ContainerMagicError,
    ContainerTruncatedError,
    ContainerVersionError,
)

MAGIC = b"MCIR"
VERSION = 1

TAG_COMPLEX64 = 0
TAG_COMPLEX128 = 1
TAG_FLOAT32 = 2
TAG_BITPACKED = 3
TAG_FLOAT64 = 4

# little-endian numpy dtypes per tag; bit-packed payloads are handled separately
DTYPES = {
    TAG_COMPLEX64: np.dtype("<c8"),
    TAG_COMPLEX128: np.dtype("<c16"),
    TAG_FLOAT32: np.dtype("<f4"),
    TAG_FLOAT64: np.dtype("<f8"),
}
TAG_NAMES = {
    TAG_COMPLEX64: "complex64",
    TAG_COMPLEX128: "complex128",
    TAG_FLOAT32: "float32",
    TAG_BITPACKED: "bool",
    TAG_FLOAT64: "float64",
}

PREFIX = struct.Struct("<4sHBB")
CRC = struct.Struct("<I")


def tag_for(array: np.ndarray) -> int:
    """Dtype tag of an array; raises ContainerDtypeError for unsupported dtypes."""
    if array.dtype == np.bool_:
        return TAG_BITPACKED
    for tag, dtype in DTYPES.items():
        if array.dtype.kind == dtype.kind and array.dtype.itemsize == dtype.itemsize:
            return tag
    raise ContainerDtypeError(f"dtype {array.dtype} cannot be stored")


def _rows(dims) -> tuple:
    if not dims:
        return 1, 1
    return int(np.prod(dims[:-1], dtype=np.int64)), int(dims[-1])


def payload_size(tag: int, dims) -> int:
    if tag == TAG_BITPACKED:
        rows, width = _rows(dims)
        return rows * ((width + 7) // 8)
    return int(np.prod(dims, dtype=np.int64)) * DTYPES[tag].itemsize


def encode_container(array: np.ndarray) -> bytes:
    """
    The encode_container function serializes one array. Boolean arrays are bit-packed per row
    of the last dimension, least significant bit first.

    :param array: complex64, complex128, float32, float64 or bool array
    :type array: np.ndarray
    :return: Container bytes with trailing CRC32
    :rtype: bytes
    """
    array = np.asarray(array)
    tag = tag_for(array)
    dims = array.shape
    if tag == TAG_BITPACKED:
        rows, width = _rows(dims)
        payload = np.packbits(array.reshape(rows, width), axis=-1, bitorder="little").tobytes()
    else:
        payload = np.ascontiguousarray(array, dtype=DTYPES[tag]).tobytes()
    header = PREFIX.pack(MAGIC, VERSION, tag, len(dims)) + struct.pack(f"<{len(dims)}I", *dims)
    body = header + payload
    return body + CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def decode_container(blob: bytes, expected: Optional[str] = None) -> np.ndarray:
    """
    The decode_container function validates and parses container bytes.

    :param blob: Container bytes
    :type blob: bytes
    :param expected: Required dtype name (complex64, complex128, float32, float64, bool)
    :type expected: str | None
    :return: The stored array
    :rtype: np.ndarray
    """
    if len(blob) < PREFIX.size + CRC.size:
        raise ContainerTruncatedError(f"container holds {len(blob)} bytes, shorter than its header")
    magic, version, tag, ndim = PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise ContainerMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ContainerVersionError(f"unsupported container version {version}")
    if tag not in TAG_NAMES:
        raise ContainerDtypeError(f"unknown dtype tag {tag}")
    if expected is not None and TAG_NAMES[tag] != expected:
        raise ContainerDtypeError(f"container holds {TAG_NAMES[tag]}, expected {expected}")
    header_size = PREFIX.size + 4 * ndim
    if len(blob) < header_size + CRC.size:
        raise ContainerTruncatedError("container ends inside its dimension list")
    dims = struct.unpack_from(f"<{ndim}I", blob, PREFIX.size)
    size = payload_size(tag, dims)
    total = header_size + size + CRC.size
    if len(blob) < total:
        raise ContainerTruncatedError(f"container holds {len(blob)} bytes, expected {total}")
    if len(blob) > total:
        raise ContainerError(f"container holds {len(blob) - total} trailing bytes")
    (stored,) = CRC.unpack_from(blob, total - CRC.size)
    if zlib.crc32(blob[:total - CRC.size]) & 0xFFFFFFFF != stored:
        raise ContainerChecksumError("CRC32 mismatch")
    payload = blob[header_size:header_size + size]
    if tag == TAG_BITPACKED:
        rows, width = _rows(dims)
        packed = np.frombuffer(payload, dtype=np.uint8).reshape(rows, (width + 7) // 8)
        bits = np.unpackbits(packed, axis=-1, count=width, bitorder="little")
        return bits.astype(bool).reshape(dims)
    return np.frombuffer(payload, dtype=DTYPES[tag]).reshape(dims).astype(DTYPES[tag].newbyteorder("="))


def write_container(path: Union[str, Path], array: np.ndarray) -> None:
    """
    The write_container function stores one array in the container format.

    :param path: Destination file, parent directories are created
    :type path: str | Path
    :param array: Array to store
    :type array: np.ndarray
    :return: None
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_container(array))


def read_container(path: Union[str, Path], expected: Optional[str] = None) -> np.ndarray:
    """
    The read_container function loads an array written by write_container.

    :param path: Container file
    :type path: str | Path
    :param expected: Required dtype name
    :type expected: str | None
    :return: The stored array
    :rtype: np.ndarray
    """
    path = Path(path)
    if not path.is_file():
        raise ContainerError(f"container {path} does not exist")
    return decode_container(path.read_bytes(), expected)
