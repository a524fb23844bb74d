"""M-PSK and square M-QAM constants used by the Craig-form SER integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError


@dataclass(frozen=True)
class Modulation:
    """Modulation scheme with the constants of its Craig-form SER integral.

    For PSK, ``alpha = 1`` and ``b = sin^2(pi/M)`` so that
    ``SER(g) = (alpha/pi) * int_0^{(M-1)pi/M} exp(-b g / sin^2 t) dt``.

    For square QAM, ``alpha = 4 (1 - 1/sqrt(M))`` and ``b = 3 / (2 (M - 1))``;
    the SER is ``(alpha/pi) int_0^{pi/2} ... - (alpha^2 / (4 pi)) int_0^{pi/4} ...``.
    """

    kind: str
    order: int
    alpha: float = field(init=False)
    b: float = field(init=False)

    def __post_init__(self) -> None:
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        M = self.order
        if not isinstance(M, int) or M < 2:
            raise ValidationError(f"modulation order must be an integer >= 2, got {M!r}")
        if kind == "PSK":
            if M & (M - 1):
                raise ValidationError(f"PSK order must be a power of two, got {M}")
            alpha, b = 1.0, math.sin(math.pi / M) ** 2
        elif kind == "QAM":
            root = math.isqrt(M)
            if root * root != M or root % 2:
                raise ValidationError(f"QAM order must be an even perfect square, got {M}")
            alpha, b = 4.0 * (1.0 - 1.0 / root), 3.0 / (2.0 * (M - 1))
        else:
            raise ValidationError(f"unknown modulation kind {self.kind!r}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "b", b)

    @property
    def is_qam(self) -> bool:
        return self.kind == "QAM"

    @classmethod
    def parse(cls, text: str) -> "Modulation":
        """Parse ``"4qam"``, ``"qam16"``, ``"8psk"``, ``"bpsk"`` or ``"qpsk"``."""
        t = text.strip().lower()
        if t == "bpsk":
            return cls("PSK", 2)
        if t == "qpsk":
            return cls("PSK", 4)
        for kind in ("psk", "qam"):
            if t.endswith(kind) or t.startswith(kind):
                digits = t.replace(kind, "").strip(":-_ ")
                try:
                    return cls(kind.upper(), int(digits))
                except ValueError:
                    break
        raise ValidationError(f"cannot parse modulation {text!r}")

    def __str__(self) -> str:
        return f"{self.order}{self.kind.lower()}"
