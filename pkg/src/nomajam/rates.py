"""Per-user SINRs, rates, the network objective, and the player utilities.

All functions are pure and operate on noise-normalized quantities: transmit
powers are expressed in units of the noise power, so every SINR denominator
starts at exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import SRC_BS1, SRC_BS2, SRC_JAM, ChannelRealization


@dataclass(frozen=True)
class StrategyProfile:
    """Powers for one slot: (p1, p2) from BS1, (p3, p4) from BS2, p_j jamming.

    p1/p3 go to the weak (cell-edge) users, p2/p4 to the strong users.
    Learning actions keep every BS power strictly positive; the game-analysis
    code may set p1 or p3 to zero.
    """

    p1: float
    p2: float
    p3: float
    p4: float
    p_j: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "p3", "p4", "p_j"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")

    @property
    def p_bs1(self) -> float:
        return self.p1 + self.p2

    @property
    def p_bs2(self) -> float:
        return self.p3 + self.p4

    def check_budgets(self, p_bs_max: float, p_j_max: float) -> None:
        tol = 1e-9 * max(1.0, p_bs_max, p_j_max)
        if self.p_bs1 > p_bs_max + tol or self.p_bs2 > p_bs_max + tol:
            raise ValueError("per-BS power budget exceeded")
        if self.p_j > p_j_max + tol:
            raise ValueError("jammer power budget exceeded")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.p1, self.p2, self.p3, self.p4, self.p_j)


def _sinr4(
    rows: tuple[tuple[float, float, float], ...],
    p1: float,
    p2: float,
    p3: float,
    p4: float,
    p_j: float,
) -> tuple[float, float, float, float]:
    """Scalar fast path shared by the hot loops; rows = ch.gain_rows."""
    g1, g2, g3, g4 = rows
    s1 = p1 * g1[SRC_BS1] / (
        1.0 + p2 * g1[SRC_BS1] + (p3 + p4) * g1[SRC_BS2] + p_j * g1[SRC_JAM]
    )
    s2 = p2 * g2[SRC_BS1] / (1.0 + p_j * g2[SRC_JAM])
    s3 = p3 * g3[SRC_BS2] / (
        1.0 + p4 * g3[SRC_BS2] + (p1 + p2) * g3[SRC_BS1] + p_j * g3[SRC_JAM]
    )
    s4 = p4 * g4[SRC_BS2] / (1.0 + p_j * g4[SRC_JAM])
    return (s1, s2, s3, s4)


def sinr_vector(ch: ChannelRealization, prof: StrategyProfile) -> np.ndarray:
    """SINRs of the four users under successive interference cancellation.

    The weak users (UE1, UE3) see intra-cell interference from their cell's
    strong user plus the full other-cell and jammer powers; the strong users
    (UE2, UE4) have the weak-user signal cancelled and see only the jammer.
    """
    return np.array(_sinr4(ch.gain_rows, *prof.as_tuple()))


def rates_from_sinr(sinr) -> np.ndarray:
    """Shannon rates log2(1 + SINR), elementwise, in bit/s/Hz."""
    return np.log2(1.0 + np.asarray(sinr, dtype=float))


def user_rates(ch: ChannelRealization, prof: StrategyProfile) -> np.ndarray:
    return rates_from_sinr(sinr_vector(ch, prof))


def _rates4(
    rows: tuple[tuple[float, float, float], ...],
    p1: float,
    p2: float,
    p3: float,
    p4: float,
    p_j: float,
) -> tuple[float, float, float, float]:
    s1, s2, s3, s4 = _sinr4(rows, p1, p2, p3, p4, p_j)
    return (math.log2(1.0 + s1), math.log2(1.0 + s2),
            math.log2(1.0 + s3), math.log2(1.0 + s4))


def objective_p2(rates, r0: float) -> float:
    """Network objective: the sum rate if every user meets QoS, else 0."""
    r = np.asarray(rates, dtype=float)
    return float(r.sum()) if float(r.min()) >= r0 else 0.0


def bs_utility(rates, p_j: float, r0: float, gamma: float, z: float) -> float:
    """Shared utility of both base stations.

    Each cell contributes a soft QoS indicator: 1 when its worse user meets
    the rate threshold (inclusive), z otherwise.  The base value is the sum
    rate plus the jamming cost gamma * p_j the jammer was forced to spend.
    Both indicators failing multiplies the base by z^2.
    """
    r = np.asarray(rates, dtype=float)
    i1 = 1.0 if min(r[0], r[1]) >= r0 else z
    i2 = 1.0 if min(r[2], r[3]) >= r0 else z
    return i1 * i2 * (float(r.sum()) + gamma * p_j)


def jammer_utility(rates, p_j: float, gamma: float) -> float:
    """Jammer utility: negated sum rate minus the cost of the spent power."""
    r = np.asarray(rates, dtype=float)
    return -(float(r.sum()) + gamma * p_j)


@dataclass(frozen=True)
class RateReport:
    """Everything derived from one (channel, profile) evaluation."""

    sinr: np.ndarray
    rate: np.ndarray
    qos_ok: np.ndarray
    objective: float
    u_bs: float
    u_jammer: float


def rate_report(
    ch: ChannelRealization,
    prof: StrategyProfile,
    r0: float,
    gamma: float,
    z: float,
) -> RateReport:
    sinr = sinr_vector(ch, prof)
    rate = rates_from_sinr(sinr)
    return RateReport(
        sinr=sinr,
        rate=rate,
        qos_ok=rate >= r0,
        objective=objective_p2(rate, r0),
        u_bs=bs_utility(rate, prof.p_j, r0, gamma, z),
        u_jammer=jammer_utility(rate, prof.p_j, gamma),
    )
