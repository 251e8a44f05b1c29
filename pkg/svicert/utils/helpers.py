"""Utility functions for seeding, digests and ordered worker pools."""

import hashlib
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def subsystem_key(name: str) -> int:
    """Stable integer key for a subsystem name."""
    return zlib.crc32(name.encode("utf-8"))


def derive_rng(seed: int, subsystem: str, task: int = 0, salt: Optional[int] = None) -> np.random.Generator:
    """Independent generator for (seed, subsystem, task).

    Streams for different tasks never overlap, so workers can sample in
    parallel and still reproduce the sequential run. A ``salt`` (a sampler
    model's own seed) gives each model its own family of streams.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, subsystem_key(subsystem), int(task)]
    if salt is not None:
        entropy.append(int(salt) & 0xFFFFFFFFFFFFFFFF)
    sequence = np.random.SeedSequence(entropy)
    return np.random.default_rng(sequence)


def file_digest(path: str) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def parallel_map(func: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> List[R]:
    """Map ``func`` over ``items`` keeping input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))

