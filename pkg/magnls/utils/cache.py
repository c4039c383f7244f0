"""Thread-safe cache of solved soliton profiles, backed by JSON files."""
import json
import logging
import os
import time
from threading import Lock
from typing import Any, Dict, Optional, Tuple

from magnls.models.soliton import QConstants, RadialProfile

logger = logging.getLogger(__name__)


class ProfileCache:
    """In-memory store of (profile, constants) keyed by (alpha, tol).

    Entries are written through to ``cache_dir`` when one is configured, and
    read back from it on a memory miss.
    """

    def __init__(self, cache_dir: Optional[str] = None, max_size: int = 32):
        """
        Initialize the profile cache.

        Args:
            cache_dir: Directory holding JSON profile files (None keeps memory only)
            max_size: Maximum number of profiles kept in memory
        """
        self._cache: Dict[str, Tuple[Any, float]] = {}
        self._lock = Lock()
        self.cache_dir = cache_dir
        self.max_size = max_size
        self._hits = 0
        self._misses = 0
        self._disk_reads = 0

    def _generate_key(self, alpha: float, tol: float) -> str:
        """Generate cache key for an (alpha, tol) pair."""
        return f"q_alpha{alpha:.12f}_tol{tol:.1e}"

    def _path(self, key: str) -> Optional[str]:
        if not self.cache_dir:
            return None
        return os.path.join(self.cache_dir, f"{key}.json")

    def _enforce_size_limit(self) -> None:
        """Drop the least recently stored entries beyond max_size."""
        if len(self._cache) <= self.max_size:
            return
        ordered = sorted(self._cache.items(), key=lambda item: item[1][1])
        for key, _ in ordered[:len(self._cache) - self.max_size]:
            del self._cache[key]

    def _read_disk(self, key: str):
        path = self._path(key)
        if not path or not os.path.exists(path):
            return None
        try:
            with open(path, encoding='utf-8') as handle:
                data = json.load(handle)
            entry = (RadialProfile.from_dict(data['profile']),
                     QConstants.from_dict(data['constants']))
        except (OSError, KeyError, TypeError, ValueError) as e:
            logger.warning(f"Ignoring unreadable profile cache file {path}: {e}")
            return None
        self._disk_reads += 1
        return entry

    def get(self, alpha: float, tol: float):
        """
        Get a cached (profile, constants) pair.

        Args:
            alpha: Nonlinearity power
            tol: Solver tolerance the profile was computed with

        Returns:
            Tuple (RadialProfile, QConstants) or None if not cached
        """
        key = self._generate_key(alpha, tol)
        with self._lock:
            if key in self._cache:
                self._hits += 1
                return self._cache[key][0]
            entry = self._read_disk(key)
            if entry is None:
                self._misses += 1
                return None
            self._hits += 1
            self._cache[key] = (entry, time.time())
            self._enforce_size_limit()
            return entry

    def set(self, alpha: float, tol: float, profile: RadialProfile,
            constants: QConstants) -> None:
        """
        Cache a solved profile and its constants.

        Args:
            alpha: Nonlinearity power
            tol: Solver tolerance
            profile: Radial profile
            constants: Constants derived from the profile
        """
        key = self._generate_key(alpha, tol)
        with self._lock:
            self._cache[key] = ((profile, constants), time.time())
            self._enforce_size_limit()
            path = self._path(key)
            if path:
                try:
                    os.makedirs(self.cache_dir, exist_ok=True)
                    payload = {'alpha': alpha, 'tol': tol, 'profile': profile.to_dict(),
                               'constants': constants.to_dict()}
                    with open(path, 'w', encoding='utf-8') as handle:
                        json.dump(payload, handle, sort_keys=True)
                except OSError as e:
                    logger.warning(f"Could not write profile cache file {path}: {e}")
        logger.debug(f"Cached soliton profile for alpha={alpha}, tol={tol}")

    def configure(self, cache_dir: Optional[str]) -> None:
        """Point the cache at a (possibly different) directory."""
        with self._lock:
            self.cache_dir = cache_dir

    def clear(self) -> None:
        """Clear the in-memory entries; files on disk are kept."""
        with self._lock:
            self._cache.clear()
            self._hits = 0
            self._misses = 0
            self._disk_reads = 0
        logger.debug("Cleared in-memory profile cache")

    def get_stats(self) -> Dict[str, Any]:
        """
        Get cache performance statistics.

        Returns:
            Dictionary with cache statistics
        """
        with self._lock:
            total_requests = self._hits + self._misses
            hit_rate = (self._hits / total_requests * 100) if total_requests > 0 else 0
            return {
                'hits': self._hits,
                'misses': self._misses,
                'disk_reads': self._disk_reads,
                'total_requests': total_requests,
                'hit_rate_percent': round(hit_rate, 2),
                'cache_size': len(self._cache),
                'max_size': self.max_size,
                'cache_dir': self.cache_dir,
            }


# Global cache instance
profile_cache = ProfileCache()
