"""Nonlinear rectenna energy-harvester model.

A diode rectifier feeding a load converts the received RF signal into DC
power.  Averaging the Shockley relation over a symbol period reduces the
harvested-power constraint to a threshold on

    P_del = E[ I0(sqrt(2) * B * |X|) ]

over the channel-input constellation, where B is an exponent scale.  The
physically derived scale sqrt(r_a)/(eta*v_t) is huge per volt, so by
default B is decoupled to 1.0 for unit-power training constellations; the
mapping back to watts at the load lives in power_threshold and its
monotone inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import _SQRT2, bessel_i0, bessel_i1


@dataclass(frozen=True)
class RectennaParams:
    """Diode/antenna constants and the exponent scale used by the metric.

    b_scale overrides the derived exponent scale; None selects the physical
    value sqrt(r_a)/(eta*v_t).
    """

    i_s: float = 5e-6       # reverse-bias saturation current [A]
    eta: float = 1.05       # diode ideality factor
    v_t: float = 0.02585    # thermal voltage [V]
    r_a: float = 50.0       # antenna resistance [ohm]
    r_l: float = 1000.0     # load resistance [ohm]
    b_scale: float | None = 1.0

    def __post_init__(self):
        if not (self.i_s > 0.0 and math.isfinite(self.i_s)):
            raise ValueError(f"i_s must be > 0, got {self.i_s!r}")
        if not (1.0 <= self.eta <= 2.0):
            raise ValueError(f"eta must lie in [1, 2], got {self.eta!r}")
        for name in ("v_t", "r_a", "r_l"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be > 0, got {v!r}")
        if self.b_scale is not None and not (self.b_scale > 0.0 and math.isfinite(self.b_scale)):
            raise ValueError(f"b_scale must be > 0 or None, got {self.b_scale!r}")

    @property
    def b(self) -> float:
        """Exponent scale B: the override if set, else sqrt(r_a)/(eta*v_t)."""
        if self.b_scale is not None:
            return self.b_scale
        return math.sqrt(self.r_a) / (self.eta * self.v_t)


def _check_metric_input(symbols, probabilities):
    x = np.asarray(symbols, dtype=np.complex128).ravel()
    if x.size == 0:
        raise ValueError("symbols must be non-empty")
    if not np.all(np.isfinite(x.real) & np.isfinite(x.imag)):
        raise ValueError("symbols must be finite")
    if probabilities is None:
        p = np.full(x.size, 1.0 / x.size)
    else:
        p = np.asarray(probabilities, dtype=float).ravel()
        if p.size != x.size:
            raise ValueError(f"got {x.size} symbols but {p.size} probabilities")
        if np.any(p < 0.0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and >= 0")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {p.sum()!r}")
    return x, p


def delivered_power_metric(symbols, params: RectennaParams, probabilities=None) -> float:
    """Harvested-power proxy sum_i p_i * I0(sqrt(2)*B*|x_i|) over a constellation.

    probabilities default to uniform.  Always >= 1, with equality iff every
    symbol carrying probability sits at the origin; depends on the symbols
    only through their moduli.
    """
    x, p = _check_metric_input(symbols, probabilities)
    b = params.b
    return float(sum(pi * bessel_i0(_SQRT2 * b * ri) for pi, ri in zip(p, np.abs(x))))


def delivered_power_metric_gradient(symbols, params: RectennaParams, probabilities=None) -> np.ndarray:
    """Gradient of delivered_power_metric w.r.t. (Re x_i, Im x_i), packed as complex.

    Entry i is d(metric)/dRe{x_i} + 1j * d(metric)/dIm{x_i}; exactly 0 at
    x_i = 0, where the metric is smooth (I0(sqrt(2)B|x|) = 1 + B^2|x|^2/2 + ...).
    """
    x, p = _check_metric_input(symbols, probabilities)
    b = params.b
    out = np.zeros(x.size, dtype=np.complex128)
    for i, (pi, xi) in enumerate(zip(p, x)):
        r = abs(xi)
        if r == 0.0:
            continue
        out[i] = pi * _SQRT2 * b * bessel_i1(_SQRT2 * b * r) * (xi / r)
    return out


def _log_power_threshold(p_d: float, params: RectennaParams) -> float:
    # log of power_threshold; overflow-free and strictly increasing in p_d.
    root = math.sqrt(p_d)
    return math.log1p(root / (params.i_s * math.sqrt(params.r_l))) + math.sqrt(params.r_l * p_d) / (
        params.eta * params.v_t
    )


def power_threshold(p_d, params: RectennaParams) -> float:
    """Metric level equivalent to demanding DC load power >= p_d watts.

    Returns (1 + sqrt(p_d)/(i_s*sqrt(r_l))) * exp(sqrt(r_l*p_d)/(eta*v_t)).
    Raises OverflowError when the exponential leaves double range.
    """
    p_d = float(p_d)
    if not math.isfinite(p_d) or p_d < 0.0:
        raise ValueError(f"p_d must be finite and >= 0, got {p_d!r}")
    log_val = _log_power_threshold(p_d, params)
    if log_val > 709.0:
        raise OverflowError(f"power_threshold overflows for p_d={p_d!r} (exponent {log_val:.1f})")
    return math.exp(log_val)


def invert_power_threshold(p_del, params: RectennaParams) -> float:
    """Unique load power p_d with power_threshold(p_d) == p_del, by bisection.

    The threshold map is strictly increasing from 1 at p_d = 0, so the
    bracket is grown geometrically and then halved to relative exhaustion.
    Raises ValueError for p_del < 1 (unreachable metric level).
    """
    p_del = float(p_del)
    if not math.isfinite(p_del) or p_del < 1.0:
        raise ValueError(f"p_del must be finite and >= 1, got {p_del!r}")
    if p_del == 1.0:
        return 0.0
    target = math.log(p_del)

    lo = 0.0
    hi = 1e-18
    while _log_power_threshold(hi, params) < target:
        lo = hi
        hi *= 4.0
        if hi > 1e12:  # physically absurd; p_del at this point exceeds double range anyway
            raise ValueError(f"failed to bracket p_del={p_del!r}")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _log_power_threshold(mid, params) < target:
            lo = mid
        else:
            hi = mid
        if (hi - lo) <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)
