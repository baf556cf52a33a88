"""MRG32k3a combined multiple-recursive generator with stream jump-ahead.

State is six 32-bit words: ``x1 = (s0, s1, s2)`` modulo ``M1`` and
``x2 = (s3, s4, s5)`` modulo ``M2``, oldest first.  Streams are spaced
2**127 steps apart.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field

M1 = 4294967087
M2 = 4294944443
A12 = 1403580
A13N = 810728
A21 = 527612
A23N = 1370589
NORM = 2.328306549295727688e-10

STREAM_SPACING_LOG2 = 127

# The state the reference implementation starts from when no seed is given.
DEFAULT_SEED = (12345, 12345, 12345, 12345, 12345, 12345)

# One-step transition matrices acting on column vectors (oldest word first).
_A1 = ((0, 1, 0), (0, 0, 1), ((-A13N) % M1, A12, 0))
_A2 = ((0, 1, 0), (0, 0, 1), ((-A23N) % M2, 0, A21))

Matrix = tuple


@dataclass(frozen=True)
class RngState:
    x1: tuple[int, int, int]
    x2: tuple[int, int, int]

    def __post_init__(self):
        if len(self.x1) != 3 or len(self.x2) != 3:
            raise ValueError("each component needs three words")
        if not all(0 <= v < M1 for v in self.x1) or not any(self.x1):
            raise ValueError(f"invalid first component {self.x1}")
        if not all(0 <= v < M2 for v in self.x2) or not any(self.x2):
            raise ValueError(f"invalid second component {self.x2}")

    @classmethod
    def from_words(cls, words) -> RngState:
        words = [int(w) for w in words]
        if len(words) != 6:
            raise ValueError("RNG state needs exactly six words")
        return cls(tuple(words[:3]), tuple(words[3:]))

    def words(self) -> list[int]:
        return [*self.x1, *self.x2]


@dataclass
class RngCursor:
    """A mutable position in one stream; ``used`` flips on the first draw."""

    state: RngState
    used: bool = field(default=False)

    def uniform(self) -> float:
        return next_uniform(self)

    def normals(self, n: int) -> list[float]:
        return normals_from_uniforms(self, n)


def _step(state: RngState) -> tuple[RngState, float]:
    s0, s1, s2 = state.x1
    p1 = (A12 * s1 - A13N * s0) % M1
    s3, s4, s5 = state.x2
    p2 = (A21 * s5 - A23N * s3) % M2
    new = RngState((s1, s2, p1), (s4, s5, p2))
    diff = p1 - p2 if p1 > p2 else p1 - p2 + M1
    return new, diff * NORM


def next_uniform(cursor: RngCursor) -> float:
    cursor.state, u = _step(cursor.state)
    cursor.used = True
    return u


def advance(state: RngState, steps: int) -> RngState:
    """Single-step ``steps`` times; used to validate the jump matrices."""
    for _ in range(steps):
        state, _ = _step(state)
    return state


def _matmul(a: Matrix, b: Matrix, m: int) -> Matrix:
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) % m for j in range(3))
        for i in range(3)
    )


def _matvec(a: Matrix, v, m: int) -> tuple[int, int, int]:
    return tuple(sum(a[i][k] * v[k] for k in range(3)) % m for i in range(3))


def _matpow(a: Matrix, e: int, m: int) -> Matrix:
    result = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    while e:
        if e & 1:
            result = _matmul(result, a, m)
        a = _matmul(a, a, m)
        e >>= 1
    return result


def _pow2(a: Matrix, log2: int, m: int) -> Matrix:
    for _ in range(log2):
        a = _matmul(a, a, m)
    return a


def jump_matrices(log2_steps: int) -> tuple[Matrix, Matrix]:
    """Transition matrices for ``2**log2_steps`` steps of each component."""
    return _pow2(_A1, log2_steps, M1), _pow2(_A2, log2_steps, M2)


STREAM_JUMP = jump_matrices(STREAM_SPACING_LOG2)


def jump(state: RngState, steps: int) -> RngState:
    """Advance by an arbitrary number of steps via matrix exponentiation."""
    j1, j2 = _matpow(_A1, steps, M1), _matpow(_A2, steps, M2)
    return RngState(_matvec(j1, state.x1, M1), _matvec(j2, state.x2, M2))


def next_stream(state: RngState) -> RngState:
    j1, j2 = STREAM_JUMP
    return RngState(_matvec(j1, state.x1, M1), _matvec(j2, state.x2, M2))


def nth_stream(state: RngState, k: int) -> RngState:
    """``next_stream`` applied ``k`` times, in O(log k) matrix products."""
    j1, j2 = STREAM_JUMP
    return RngState(
        _matvec(_matpow(j1, k, M1), state.x1, M1),
        _matvec(_matpow(j2, k, M2), state.x2, M2),
    )


def _splitmix64(x: int):
    mask = (1 << 64) - 1
    while True:
        x = (x + 0x9E3779B97F4A7C15) & mask
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        yield z ^ (z >> 31)


def base_state(session_seed: int) -> RngState:
    """Derive a valid generator state from a 64-bit seed.

    Words are the high 32 bits of successive splitmix64 outputs; values at or
    above the component modulus are skipped, as are all-zero triples.
    """
    gen = _splitmix64(session_seed & ((1 << 64) - 1))

    def triple(m):
        while True:
            words = []
            while len(words) < 3:
                w = next(gen) >> 32
                if w < m:
                    words.append(w)
            if any(words):
                return tuple(words)

    return RngState(triple(M1), triple(M2))


def stream_for(session_seed: int, ordinal: int) -> RngState:
    """The stream of the future with creation ``ordinal`` (ordinal + 1 jumps)."""
    if ordinal < 0:
        raise ValueError("ordinal must be non-negative")
    return nth_stream(base_state(session_seed), ordinal + 1)


_STD_NORMAL = statistics.NormalDist()


def normals_from_uniforms(cursor: RngCursor, n: int) -> list[float]:
    return [_STD_NORMAL.inv_cdf(next_uniform(cursor)) for _ in range(n)]
