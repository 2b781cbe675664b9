"""Lane-parallel math kernels with scalar fallback.

The lane width parameterizes how the compiled core blocks its loops (plus a
scalar head/tail for lengths that are not multiples of the width); the math
performed per element is identical at every width, so results are
width-invariant by construction.  Unaligned inputs are fine: no alignment
precondition is imposed on callers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

LANE_WIDTHS = (1, 4, 8, 16)
PRECISIONS = (32, 64)

# Saturation bounds for the exponential (inputs beyond these produce
# +inf / 0.0 and set a status bit).
EXP_HI32 = _kernels.fallback.EXP_HI32
EXP_LO32 = _kernels.fallback.EXP_LO32
EXP_HI64 = _kernels.fallback.EXP_HI64
EXP_LO64 = _kernels.fallback.EXP_LO64

STATUS_OK = 0
STATUS_OVERFLOW = 1
STATUS_UNDERFLOW = 2


@dataclass(frozen=True)
class LaneConfig:
    """Floats processed per vector operation, and their precision.

    lane_width 1 selects the scalar fallback path; 4, 8 and 16 mirror
    128/256/512-bit registers holding 32-bit floats.
    """

    lane_width: int = 1
    precision: int = 64

    def __post_init__(self):
        if self.lane_width not in LANE_WIDTHS:
            raise ValueError(
                f"lane_width must be one of {LANE_WIDTHS}, got {self.lane_width}"
            )
        if self.precision not in PRECISIONS:
            raise ValueError(
                f"precision must be one of {PRECISIONS}, got {self.precision}"
            )

    @property
    def dtype(self):
        return np.float32 if self.precision == 32 else np.float64


_VARIANT_LABELS = ("NOVECT", "AUTOVECT", "VEC4", "VEC8", "VEC16",
                   "INTR4", "INTR8", "INTR16")


@dataclass(frozen=True)
class KernelVariant:
    """Kernel build label, carried verbatim into reports.

    NOVECT runs scalar loops against libm; AUTOVECT leaves vectorization to
    the toolchain (whole-array library calls in the fallback backend, plain
    auto-vectorizable loops in the compiled one); VEC<w> and INTR<w> select
    the explicit lane-blocked path at width w.  VEC and INTR share one code
    path here: the assembly-versus-intrinsics distinction they labelled is
    not portable, only the label is preserved.
    """

    label: str = "NOVECT"

    def __post_init__(self):
        if self.label not in _VARIANT_LABELS:
            raise ValueError(
                f"variant must be one of {_VARIANT_LABELS}, got {self.label!r}"
            )

    @classmethod
    def parse(cls, text: str) -> "KernelVariant":
        return cls(text.strip().upper())

    @property
    def lane_width(self) -> int:
        if self.label.startswith("VEC") or self.label.startswith("INTR"):
            return int(self.label.lstrip("VECINTR"))
        return 1

    @property
    def explicit_lanes(self) -> bool:
        return self.label.startswith(("VEC", "INTR"))


def vexp(inputs, cfg: LaneConfig = LaneConfig(), *, return_status: bool = False):
    """Elementwise exponential at the configured precision and lane width.

    Out-of-range inputs saturate to 0.0 / +inf and set the corresponding
    bit of the status word (returned when ``return_status`` is true).
    """
    arr = np.ascontiguousarray(inputs, dtype=cfg.dtype)
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("vexp inputs must be finite")
    out, status = _kernels.active().vexp(arr, cfg.lane_width)
    if return_status:
        return out, status
    return out


def bt_inner_step(values, coeff, cfg: LaneConfig = LaneConfig(), *,
                  fused: bool = False) -> np.ndarray:
    """One backward-induction level: out[i] = a*values[i] + b*values[i+1].

    The shifted operand is materialized before any write, which removes the
    anti-dependency between iterations; ``fused`` selects a fused
    multiply-add for the a*x term.
    """
    arr = np.ascontiguousarray(values, dtype=cfg.dtype)
    if arr.shape[0] < 2:
        raise ValueError(f"need at least 2 values, got {arr.shape[0]}")
    return _kernels.active().bt_step(arr, coeff.disc_p_up, coeff.disc_p_down,
                                     cfg.lane_width, fused)


def kahan_sum(values) -> float:
    """Compensated sum with error bounded independently of length."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("kahan_sum inputs must be finite")
    return float(_kernels.active().kahan_sum(arr))
