"""Byte-level entropy sources and the uniform integer primitive.

Every sampler in this package consumes randomness exclusively through an
EntropySource, one byte at a time. That makes runs reproducible (Seeded),
scriptable for tests (Replay), and auditable: the `consumed` counter is
exact, and two code paths that draw the same distribution must consume
identical byte sequences.

Sources buffer their stream internally. The buffer plus cursor are also
the handoff point for the compiled batch kernels, which read the same
bytes the pure-Python path would, in the same order.
"""

from __future__ import annotations

import os
from abc import ABC, abstractmethod

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

from .errors import EntropyExhausted, InvalidParam

_OS_CHUNK = 1 << 16
_SEEDED_CHUNK = 1 << 16
_MAX_CHUNK = 1 << 26
_COMPACT_THRESHOLD = 1 << 22


class EntropySource(ABC):
    """A stream of bytes with an exact consumption counter."""

    kind: str

    def __init__(self) -> None:
        self._buf = bytearray()
        self._pos = 0
        self._base = 0  # bytes dropped from the front of _buf so far

    @property
    def consumed(self) -> int:
        """Total bytes handed out since construction."""
        return self._base + self._pos

    @abstractmethod
    def _produce(self, want: int) -> bytes:
        """Return up to `want` fresh bytes; b"" when the stream is done."""

    def _compact(self) -> None:
        if self._pos > _COMPACT_THRESHOLD:
            del self._buf[: self._pos]
            self._base += self._pos
            self._pos = 0

    def _ensure(self, want: int) -> int:
        """Best-effort refill; returns bytes now available past the cursor."""
        available = len(self._buf) - self._pos
        while available < want:
            fresh = self._produce(want - available)
            if not fresh:
                break
            self._compact()
            self._buf.extend(fresh)
            available = len(self._buf) - self._pos
        return available

    def next_byte(self) -> int:
        if self._ensure(1) < 1:
            raise EntropyExhausted(f"{self.kind} source has no bytes left")
        value = self._buf[self._pos]
        self._pos += 1
        return value

    def take(self, count: int) -> bytes:
        if count < 0:
            raise InvalidParam("byte count must be non-negative")
        if count == 0:
            return b""
        if self._ensure(count) < count:
            raise EntropyExhausted(
                f"{self.kind} source exhausted: wanted {count} bytes, "
                f"had {len(self._buf) - self._pos}"
            )
        start = self._pos
        self._pos += count
        return bytes(self._buf[start : self._pos])


class OsRandomSource(EntropySource):
    """Operating-system randomness (os.urandom). Not reproducible."""

    kind = "os_random"

    def _produce(self, want: int) -> bytes:
        return os.urandom(max(want, _OS_CHUNK))


class SeededSource(EntropySource):
    """Deterministic stream: ChaCha20 keystream keyed by a 64-bit seed."""

    kind = "seeded"

    def __init__(self, seed: int) -> None:
        super().__init__()
        if not 0 <= seed < 1 << 64:
            raise InvalidParam("seed must fit in 64 bits")
        self.seed = seed
        key = seed.to_bytes(8, "big") * 4
        nonce = bytes(16)
        self._stream = Cipher(algorithms.ChaCha20(key, nonce), mode=None).encryptor()
        self._chunk = _SEEDED_CHUNK

    def _produce(self, want: int) -> bytes:
        size = max(want, self._chunk)
        if size > _MAX_CHUNK:
            size = max(want, _MAX_CHUNK)
        elif self._chunk < _MAX_CHUNK:
            self._chunk *= 2
        return self._stream.update(bytes(size))


class ReplaySource(EntropySource):
    """Replays a fixed byte script; raises EntropyExhausted at the end."""

    kind = "replay"

    def __init__(self, script: bytes) -> None:
        super().__init__()
        self._buf = bytearray(script)

    def _produce(self, want: int) -> bytes:
        return b""

    @property
    def remaining(self) -> int:
        return len(self._buf) - self._pos


def uniform(src: EntropySource, n: int) -> int:
    """Uniform draw from {0, ..., n-1} by masked-byte rejection.

    Reads the fewest whole bytes covering bit_length(n-1) bits, masks the
    excess high bits, and rejects values >= n. Each round accepts with
    probability > 1/2. n == 1 consumes no bytes.
    """
    if n <= 0:
        raise InvalidParam("uniform needs a positive range")
    bits = (n - 1).bit_length()
    if bits == 0:
        return 0
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    while True:
        value = int.from_bytes(src.take(nbytes), "big") & mask
        if value < n:
            return value
