"""Three-state bit vectors: 0, 1 and X (Z is folded into X)."""

from __future__ import annotations

from dataclasses import dataclass


def mask(width: int) -> int:
    return (1 << width) - 1


@dataclass(frozen=True)
class Value:
    width: int
    bits: int
    xmask: int = 0

    def __post_init__(self) -> None:
        m = mask(self.width)
        object.__setattr__(self, "xmask", self.xmask & m)
        object.__setattr__(self, "bits", self.bits & m & ~self.xmask)

    @classmethod
    def x(cls, width: int) -> "Value":
        return cls(width, 0, mask(width))

    @classmethod
    def from_bin(cls, text: str) -> "Value":
        bits = xm = 0
        for c in text:
            bits <<= 1
            xm <<= 1
            if c == "1":
                bits |= 1
            elif c in "xXzZ":
                xm |= 1
            elif c != "0":
                raise ValueError(f"bad bit {c!r} in {text!r}")
        return cls(len(text), bits, xm)

    @property
    def is_known(self) -> bool:
        return self.xmask == 0

    def to_bin(self) -> str:
        out = []
        for i in range(self.width - 1, -1, -1):
            out.append("x" if (self.xmask >> i) & 1 else str((self.bits >> i) & 1))
        return "".join(out)

    def __int__(self) -> int:
        if self.xmask:
            raise ValueError("value has unknown bits")
        return self.bits

    def __str__(self) -> str:
        return self.to_bin()


def bin_str(v: int, x: int, width: int) -> str:
    """Binary string for a raw (value, xmask) pair; fast path for known values."""
    if not x:
        return format(v, f"0{width}b")
    return Value(width, v, x).to_bin()


def matches(expected: tuple[int, int], actual: tuple[int, int]) -> bool:
    """Scoreboard policy: X on the DUT side against a known golden bit fails;
    X against X passes; known bits must agree."""
    ev, ex = expected
    av, ax = actual
    if ax & ~ex:
        return False
    known = ~ex
    return (ev & known) == (av & known)
