"""Line-of-sight ground-to-air channel primitives.

A sensor at horizontal offset ``s`` from the UAV sees the distance-based
pathloss ``(s**2 + H**2) ** (alpha / 2)`` normalised by the reference SNR
``beta`` at 1 m.  Offsets are always sensor-relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "ChannelParams",
    "db_to_linear",
    "inverse_gain",
    "instantaneous_rate",
    "pathloss_integral",
    "pathloss_integral_array",
]

QUAD_RTOL = 1e-10


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    """LOS air-ground link constants.

    Attributes
    ----------
    H : float
        UAV altitude in metres.
    beta : float
        Reference SNR at 1 m, linear ratio (not dB).
    W : float
        Bandwidth in Hz.
    alpha : float
        Pathloss exponent, at least 2.
    """

    H: float = 100.0
    beta: float = 1e8
    W: float = 2e4
    alpha: float = 2.0

    def __post_init__(self):
        if not self.H > 0:
            raise ValueError(f"altitude H must be positive, got {self.H}")
        if not self.beta > 0:
            raise ValueError(f"reference SNR beta must be positive, got {self.beta}")
        if not self.W > 0:
            raise ValueError(f"bandwidth W must be positive, got {self.W}")
        if not self.alpha >= 2:
            raise ValueError(f"pathloss exponent alpha must be >= 2, got {self.alpha}")

    @classmethod
    def from_db(cls, H: float, beta_db: float, W: float, alpha: float = 2.0) -> "ChannelParams":
        return cls(H=H, beta=db_to_linear(beta_db), W=W, alpha=alpha)

    @property
    def beta_db(self) -> float:
        return 10.0 * math.log10(self.beta)


def _pathloss(s, ch: ChannelParams):
    return (np.square(s) + ch.H**2) ** (ch.alpha / 2.0)


def inverse_gain(s, ch: ChannelParams):
    """Inverse channel gain ``(s^2 + H^2)^(alpha/2) / beta`` at offset ``s``."""
    return _pathloss(s, ch) / ch.beta


def instantaneous_rate(p, s, ch: ChannelParams):
    """Achievable rate in bit/s at transmit power ``p`` (W) and offset ``s`` (m)."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("transmit power must be non-negative")
    snr = p / inverse_gain(s, ch)
    rate = 0.5 * ch.W * np.log1p(snr) / math.log(2.0)
    return float(rate) if np.ndim(rate) == 0 else rate


def _quad(x: float, y: float, ch: ChannelParams) -> float:
    if x == y:
        return 0.0
    # split at the minimum of the integrand so each piece is monotone
    pieces = [x, y] if not (x < 0.0 < y) else [x, 0.0, y]
    total = 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        val, _ = integrate.quad(
            lambda s: (s * s + ch.H**2) ** (ch.alpha / 2.0),
            a,
            b,
            epsabs=0.0,
            epsrel=QUAD_RTOL,
            limit=200,
        )
        total += val
    return total


def pathloss_integral(x: float, y: float, ch: ChannelParams, method: str = "auto") -> float:
    """Integral of ``(s^2 + H^2)^(alpha/2)`` over ``[x, y]``.

    ``method`` is ``"auto"`` (closed form when alpha == 2, quadrature
    otherwise), ``"closed"`` or ``"quad"``.
    """
    if x > y:
        raise ValueError(f"pathloss_integral needs x <= y, got x={x}, y={y}")
    if method == "quad" or (method == "auto" and ch.alpha != 2):
        return _quad(float(x), float(y), ch)
    if ch.alpha != 2:
        raise ValueError("closed form only available for alpha == 2")
    return (y - x) * ((x * x + x * y + y * y) / 3.0 + ch.H**2)


def pathloss_integral_array(x, y, ch: ChannelParams):
    """Elementwise ``pathloss_integral`` for arrays with ``x <= y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if ch.alpha == 2:
        return (y - x) * ((x * x + x * y + y * y) / 3.0 + ch.H**2)
    # cumulative table over the distinct endpoints, then differences
    knots, inv = np.unique(np.concatenate([x.ravel(), y.ravel()]), return_inverse=True)
    cum = np.zeros(knots.size)
    for k in range(1, knots.size):
        cum[k] = cum[k - 1] + _quad(knots[k - 1], knots[k], ch)
    ix = inv[: x.size].reshape(x.shape)
    iy = inv[x.size :].reshape(y.shape)
    return cum[iy] - cum[ix]
