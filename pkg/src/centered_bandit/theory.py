"""Theoretical constants and the sum-of-widths sanity check."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple


def _check_open_unit(name: str, x: float) -> None:
    if not 0.0 < x < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {x}")


def theory_v(R: float, epsilon: float, d: int, delta: float) -> float:
    """Worst-case posterior scale ``R * sqrt(24 / epsilon * d * log(1 / delta))``."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    _check_open_unit("epsilon", epsilon)
    _check_open_unit("delta", delta)
    if d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    return R * math.sqrt(24.0 / epsilon * d * math.log(1.0 / delta))


def theory_ell(R: float, T: float, d: int, delta: float) -> float:
    """``R * sqrt(d * log(T^3) * log(1 / delta)) + 1``."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if T < 2:
        raise ValueError(f"T must be at least 2, got {T}")
    if d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    _check_open_unit("delta", delta)
    return R * math.sqrt(d * 3.0 * math.log(T) * math.log(1.0 / delta)) + 1.0


@dataclass(frozen=True)
class SumzReport:
    lhs: float
    rhs: float
    satisfied: bool

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "satisfied": self.satisfied}


def sumz_diagnostic(
    trace: Iterable[Tuple[float, float]], d: int, horizon: Optional[int] = None
) -> SumzReport:
    """Compare ``sum sqrt(pi(1-pi)) z`` with ``5 sqrt(d T log T)``.

    ``trace`` holds one ``(pi_t, z_t)`` pair per step, with ``z_t`` the width
    of the candidate's features under ``B`` at decision time. A violation
    points at a broken precision update or width computation. ``horizon``
    defaults to the trace length.
    """
    lhs = 0.0
    T = 0
    for pi, z in trace:
        lhs += math.sqrt(pi * (1.0 - pi)) * z
        T += 1
    if horizon is not None:
        T = int(horizon)
    # the bound is stated for T >= 2
    T = max(T, 2)
    rhs = 5.0 * math.sqrt(d * T * math.log(T))
    return SumzReport(float(lhs), float(rhs), bool(lhs <= rhs))
