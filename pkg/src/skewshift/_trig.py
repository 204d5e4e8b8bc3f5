"""Cosine of a 64-bit fixed-point phase, shared by every backend.

The half-turn [0, pi) is split into 256 table cells; inside a cell a short
Taylor polynomial handles the remainder (|delta| < pi/256, truncation error
below 1e-19). The top phase bit is applied as an exact sign flip, so
``cos_turn(f + 2**63) == -cos_turn(f)`` bit for bit. The operation order below
is replicated verbatim in ``_kernels.pyx`` and ``_fallback.py``; keep them in
sync (the tests compare backends bit for bit).
"""

import math

TABLE_BITS = 8
TABLE_SIZE = 1 << TABLE_BITS
HALF_TURN = 1 << 63
LOW_MASK = HALF_TURN - 1
INDEX_SHIFT = 63 - TABLE_BITS
REM_MASK = (1 << 52) - 1
# radians per unit of the 52-bit remainder: 2 pi 2**-61
DELTA_SCALE = 2.0 * math.pi * 2.0**-61

COS_TABLE = [math.cos(k * math.pi / TABLE_SIZE) for k in range(TABLE_SIZE)]
SIN_TABLE = [math.sin(k * math.pi / TABLE_SIZE) for k in range(TABLE_SIZE)]

C2 = 0.5
C4 = 1.0 / 24.0
C6 = 1.0 / 720.0
S3 = 1.0 / 6.0
S5 = 1.0 / 120.0
S7 = 1.0 / 5040.0


def cos_turn(frac: int) -> float:
    """cos(2 pi frac 2**-64) for an integer phase in [0, 2**64)."""
    h = frac & LOW_MASK
    idx = h >> INDEX_SHIFT
    delta = float((h >> 3) & REM_MASK) * DELTA_SCALE
    d2 = delta * delta
    cd = 1.0 - d2 * (C2 - d2 * (C4 - d2 * C6))
    sd = delta * (1.0 - d2 * (S3 - d2 * (S5 - d2 * S7)))
    c = COS_TABLE[idx] * cd - SIN_TABLE[idx] * sd
    return -c if frac & HALF_TURN else c
