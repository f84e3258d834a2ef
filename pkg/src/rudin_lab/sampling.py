"""Deterministic chunked sampling shared by the region audits and the verifiers.

Every sample budget is cut into fixed-size chunks.  Chunk ``i`` of a stream
identified by ``key`` draws from its own generator seeded with
``SeedSequence(seed, spawn_key=(*key, i))``, so the points do not depend on
how many workers evaluate the chunks.  Results are always merged in chunk
order.  The worker count comes from ``RUDIN_LAB_WORKERS`` (default: CPU count).
"""
from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np

CHUNK = 32768
T = TypeVar("T")


def worker_count() -> int:
    env = os.environ.get("RUDIN_LAB_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def stream_key(*parts) -> tuple[int, ...]:
    """Turn a mix of strings and ints into a spawn key of non-negative ints."""
    out = []
    for p in parts:
        if isinstance(p, str):
            out.append(zlib.crc32(p.encode()))
        else:
            out.append(int(p) & 0xFFFFFFFF)
    return tuple(out)


def chunk_rng(seed: int, key: Sequence[int], chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(key) + (chunk,))
    return np.random.default_rng(ss)


def chunk_sizes(total: int, chunk: int = CHUNK) -> list[int]:
    if total <= 0:
        return []
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def run_chunked(fn: Callable[[np.random.Generator, int], T], total: int, seed: int, key: Sequence[int],
                chunk: int = CHUNK, workers: Optional[int] = None) -> list[T]:
    """Evaluate ``fn(rng, n)`` over all chunks; the list is in chunk order."""
    sizes = chunk_sizes(total, chunk)
    jobs = [(chunk_rng(seed, key, i), n) for i, n in enumerate(sizes)]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [fn(r, n) for r, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda job: fn(*job), jobs))


# point generators --------------------------------------------------------------

def sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform points on the unit sphere of C^2, shape (n, 2)."""
    x = rng.standard_normal((n, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x[:, :2] + 1j * x[:, 2:]


def uniform_ball(rng: np.random.Generator, n: int) -> np.ndarray:
    r = rng.random(n) ** 0.25
    return sphere(rng, n) * r[:, None]


def log_uniform(rng: np.random.Generator, lo: float, hi: float, n: int) -> np.ndarray:
    if hi <= lo:
        return np.full(n, hi)
    return np.exp(rng.uniform(np.log(lo), np.log(hi), n))


def complex_direction(rng: np.random.Generator, n: int) -> np.ndarray:
    return sphere(rng, n)


def set_boundary_distance(Z: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Rescale each row radially so that 1 - |z| = d."""
    nrm = np.linalg.norm(Z, axis=1)
    nrm = np.where(nrm == 0, 1.0, nrm)
    return Z * ((1.0 - d) / nrm)[:, None]


def clip_to_ball(Z: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Rows outside the ball are pulled back to boundary distance d; others are kept."""
    nrm = np.linalg.norm(Z, axis=1)
    out = Z.copy()
    mask = nrm > 1.0 - d
    out[mask] = set_boundary_distance(Z[mask], d[mask])
    return out


def lex_argmax(values: np.ndarray, Z: np.ndarray, W: np.ndarray) -> int:
    """Index of the largest finite value; ties go to the lexicographically smallest pair."""
    finite = np.isfinite(values)
    if not finite.any():
        return -1
    best = np.max(values[finite])
    idx = np.nonzero(finite & (values == best))[0]
    if idx.size == 1:
        return int(idx[0])
    keys = [pair_key(Z[i], W[i]) for i in idx]
    return int(idx[min(range(len(idx)), key=keys.__getitem__)])


def pair_key(z, w) -> tuple:
    return (z[0].real, z[0].imag, z[1].real, z[1].imag, w[0].real, w[0].imag, w[1].real, w[1].imag)


def merge_max(cands: Sequence[tuple]) -> tuple:
    """Merge (value, z, w) candidates: max value, lexicographic tie-break; None values skipped."""
    best = None
    for c in cands:
        if c is None or c[0] is None or not np.isfinite(c[0]):
            continue
        if best is None or c[0] > best[0] or (c[0] == best[0] and pair_key(c[1], c[2]) < pair_key(best[1], best[2])):
            best = c
    return best
