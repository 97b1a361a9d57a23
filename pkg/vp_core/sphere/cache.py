"""
Mapping Table Cache

Binary persistence of mapping tables and a content-addressed cache directory in front of
build_mapping.

File layout (little-endian):
    magic "VPMT", u32 version, u32 n_rho, u32 n_theta, u32 grid_side,
    u64 intrinsics hash, u32 N, u32 k, u64 lattice hash, u32 M, u32 sampling, f64 eps_map,
    u32 count per bin, u32 indices, u32 CRC32 of everything before it.
"""

import hashlib
import struct
import zlib
from pathlib import Path
from typing import Optional

import numpy as np
from structlog import get_logger

from ..camera.models import CameraIntrinsics
from ..errors import CacheMismatch, CorruptCache, IoError
from ..hough.models import HoughParams
from .mapping import build_mapping
from .models import MappingConfig, MappingSampling, MappingTable, SphereLattice

logger = get_logger()

MAGIC = b"VPMT"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIIIIQIIQIId")
_CRC = struct.Struct("<I")
_SAMPLING_CODES = {MappingSampling.AZIMUTH: 0, MappingSampling.AZIMUTH_ARC: 1}
_SAMPLING_BY_CODE = {code: sampling for sampling, code in _SAMPLING_CODES.items()}


def encode_mapping(table: MappingTable) -> bytes:
    """Serialize a mapping table including its trailing checksum."""
    params = table.hough_params
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        params.n_rho,
        params.n_theta,
        params.grid_side,
        table.intrinsics_hash,
        table.n_points,
        table.k,
        table.lattice_hash,
        table.m_samples,
        _SAMPLING_CODES[table.sampling],
        table.eps_map,
    )
    body = (
        header
        + table.counts.astype("<u4").tobytes()
        + table.indices.astype("<u4").tobytes()
    )
    return body + _CRC.pack(zlib.crc32(body))


def decode_mapping(data: bytes) -> MappingTable:
    """
    Parse a serialized mapping table.

    Raises:
        CorruptCache: Bad magic, unsupported version, checksum failure or truncation
    """
    if len(data) < _HEADER.size + _CRC.size:
        raise CorruptCache("mapping file is truncated")
    body, (crc,) = data[: -_CRC.size], _CRC.unpack(data[-_CRC.size :])
    (
        magic,
        version,
        n_rho,
        n_theta,
        grid_side,
        intrinsics_hash,
        n_points,
        k,
        lattice_hash,
        m_samples,
        sampling_code,
        eps_map,
    ) = _HEADER.unpack_from(body)
    if magic != MAGIC:
        raise CorruptCache(f"bad magic {magic!r}")
    if zlib.crc32(body) != crc:
        raise CorruptCache("checksum mismatch")
    if version != FORMAT_VERSION:
        raise CorruptCache(f"unsupported mapping format version {version}")
    if sampling_code not in _SAMPLING_BY_CODE:
        raise CorruptCache(f"unknown sampling code {sampling_code}")

    params = HoughParams(n_rho=n_rho, n_theta=n_theta, grid_side=grid_side)
    n_bins = params.n_bins
    payload = body[_HEADER.size :]
    if len(payload) < 4 * n_bins:
        raise CorruptCache("mapping file is truncated")
    counts = np.frombuffer(payload, dtype="<u4", count=n_bins).astype(np.int64)
    total = int(counts.sum())
    if len(payload) != 4 * (n_bins + total):
        raise CorruptCache("entry payload size does not match the bin counts")
    indices = np.frombuffer(payload, dtype="<u4", offset=4 * n_bins).astype(np.int32)
    if indices.size and int(indices.max()) >= n_points:
        raise CorruptCache("lattice index out of range")

    offsets = np.zeros(n_bins + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(counts)
    return MappingTable(
        hough_params=params,
        intrinsics_hash=intrinsics_hash,
        n_points=n_points,
        k=k,
        lattice_hash=lattice_hash,
        m_samples=m_samples,
        sampling=_SAMPLING_BY_CODE[sampling_code],
        eps_map=eps_map,
        offsets=offsets,
        indices=indices,
    )


def save_mapping(table: MappingTable, path: str | Path) -> Path:
    """
    Write a mapping table file.

    Raises:
        IoError: Path not writable
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(encode_mapping(table))
        tmp.replace(path)
    except OSError as e:
        raise IoError(f"Cannot write mapping cache {path}: {e}") from e
    logger.info("mapping_saved", path=str(path), entries=int(table.indices.size))
    return path


def load_mapping(
    path: str | Path,
    params: Optional[HoughParams] = None,
    lattice_hash: Optional[int] = None,
    intrinsics_hash: Optional[int] = None,
) -> MappingTable:
    """
    Read a mapping table file and check it against the requested configuration.

    Args:
        path: Cache file
        params: Expected Hough parameters
        lattice_hash: Expected lattice content hash
        intrinsics_hash: Expected intrinsics content hash

    Raises:
        IoError: File missing or unreadable
        CorruptCache: Damaged file
        CacheMismatch: File was built for a different configuration
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise IoError(f"Cannot read mapping cache {path}: {e}") from e

    table = decode_mapping(data)
    if params is not None and table.hough_params != params:
        raise CacheMismatch(f"cache built for {table.hough_params}, requested {params}")
    if lattice_hash is not None and table.lattice_hash != lattice_hash:
        raise CacheMismatch("cache built for a different lattice")
    if intrinsics_hash is not None and table.intrinsics_hash != intrinsics_hash:
        raise CacheMismatch("cache built for different intrinsics")
    return table


class MappingCacheService:
    """
    Content-addressed store of mapping tables.

    Files are named by a hash of (Hough params, lattice, intrinsics, mapping config), so a
    lookup either hits the exact table or misses.
    """

    def __init__(self, cache_dir: str | Path):
        """
        Initialize the cache service.

        Args:
            cache_dir: Directory holding .vpmt files (created on first write)
        """
        self.cache_dir = Path(cache_dir).expanduser()

    @staticmethod
    def cache_key(
        params: HoughParams,
        lattice: SphereLattice,
        intrinsics: CameraIntrinsics,
        config: MappingConfig,
    ) -> str:
        text = "|".join(
            [
                str(params.content_hash()),
                str(lattice.content_hash()),
                str(intrinsics.content_hash()),
                str(config.m_samples),
                config.sampling.value,
                str(FORMAT_VERSION),
            ]
        )
        return hashlib.sha256(text.encode()).hexdigest()[:32]

    def path_for(
        self,
        params: HoughParams,
        lattice: SphereLattice,
        intrinsics: CameraIntrinsics,
        config: MappingConfig,
    ) -> Path:
        return self.cache_dir / f"mapping-{self.cache_key(params, lattice, intrinsics, config)}.vpmt"

    def get_or_build(
        self,
        params: HoughParams,
        lattice: SphereLattice,
        intrinsics: CameraIntrinsics,
        config: Optional[MappingConfig] = None,
    ) -> MappingTable:
        """
        Return the cached table for this configuration, building and storing it on a miss.

        Damaged cache files are rebuilt. A cache directory that cannot be written only
        costs the reuse; the freshly built table is still returned.
        """
        config = config or MappingConfig()
        path = self.path_for(params, lattice, intrinsics, config)

        if path.is_file():
            try:
                table = load_mapping(
                    path,
                    params=params,
                    lattice_hash=lattice.content_hash(),
                    intrinsics_hash=intrinsics.content_hash(),
                )
                if table.m_samples == config.m_samples and table.sampling == config.sampling:
                    logger.info("mapping_cache_hit", path=str(path))
                    return table
            except (CorruptCache, CacheMismatch) as e:
                logger.warning("mapping_cache_invalid", path=str(path), error=str(e))

        logger.info("mapping_cache_miss", path=str(path))
        table = build_mapping(params, lattice, intrinsics, config)
        try:
            save_mapping(table, path)
        except IoError as e:
            logger.warning("mapping_cache_write_failed", path=str(path), error=str(e))
        return table
