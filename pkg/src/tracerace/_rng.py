"""Deterministic random streams shared by the reference and kernel paths.

Every stochastic operation in this package draws from a xoshiro256++
stream seeded through splitmix64. The same generator is implemented
twice -- here in pure Python, and jitted inside ``_kernel`` -- and the
two are required (and tested) to agree bit for bit, which is what makes
batch results independent of whether the fast path ran.

Stream derivation is part of the public reproducibility contract:

  * ``derive_seed(*components)`` folds integer components (master seed,
    trial index, cell index, ...) into a single 64-bit seed.
  * a stream's four state words are the first four splitmix64 outputs
    from that seed.

Trial ``i`` of a batch with master seed ``m`` uses the stream seeded by
``derive_seed(m, i)``; the experiment harness derives per-batch masters
as ``derive_seed(m, cell_index, policy_index, round_index)``.

Draw economy rule: choice among ``m`` tied candidates consumes one draw
only when ``m > 1`` (``index = int(u * m)``, clamped to ``m - 1``).
Both implementations follow it exactly.
"""

from __future__ import annotations

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_SEED_SALT = 0x243F6A8885A308D3  # first 64 bits of pi's fractional part


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (next_state, output)."""
    state = (state + _GOLDEN) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return state, z ^ (z >> 31)


def derive_seed(*components: int) -> int:
    """Fold integer components into one 64-bit stream seed."""
    h = _SEED_SALT
    for c in components:
        _, z = splitmix64(int(c) & _M64)
        _, h = splitmix64(h ^ z)
    return h


def seed_state(seed64: int) -> list[int]:
    """Expand a 64-bit seed into the four xoshiro256++ state words."""
    st = seed64 & _M64
    words = []
    for _ in range(4):
        st, z = splitmix64(st)
        words.append(z)
    return words


class Xoshiro256:
    """xoshiro256++ stream with the draw helpers the engine needs.

    State is kept as plain ints for speed; ``state_array``/``set_state``
    move it across the numba kernel boundary.
    """

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed64: int):
        self.s0, self.s1, self.s2, self.s3 = seed_state(seed64)

    @classmethod
    def from_components(cls, *components: int) -> "Xoshiro256":
        return cls(derive_seed(*components))

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        x = (s0 + s3) & _M64
        result = (((x << 23) | (x >> 41)) + s0) & _M64
        t = (s1 << 17) & _M64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _M64
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return (result >> 11) * 1.1102230246251565e-16  # 2**-53

    def index(self, m: int) -> int:
        """Uniform index into m candidates; draws only when m > 1."""
        if m <= 1:
            return 0
        i = int(self.random() * m)
        return m - 1 if i == m else i

    def state_array(self):
        import numpy as np

        return np.array([self.s0, self.s1, self.s2, self.s3], dtype=np.uint64)

    def set_state(self, arr) -> None:
        self.s0, self.s1, self.s2, self.s3 = (int(w) for w in arr)
