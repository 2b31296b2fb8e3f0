"""Exact linear wave evolution, mode by mode.

For ``|n| > 0`` the free flow rotates each amplitude pair; the zero mode
moves ballistically (``sin(t|n|)/|n| -> t``).  ``FreeWave`` caches the
data of one Cauchy pair so that ``S(t)`` can be sampled at many times.
"""
from __future__ import annotations

import numpy as np

from .fourier_field import VOLUME, CauchyPair, FourierField, japanese, wavenumber, wavenumber_sq


def _sin_over_w(t, w):
    # sin(t w) / w with the analytic limit t at w = 0
    return t * np.sinc(t * w / np.pi)


def evolve_arrays(a, b, t, M):
    """``(position, velocity)`` amplitudes of ``S(t)(a, b)``."""
    w = wavenumber(M)
    c, s = np.cos(t * w), np.sin(t * w)
    pos = c * a + _sin_over_w(t, w) * b
    vel = -w * s * a + c * b
    return pos, vel


def free_evolve(pair, t):
    """``(S(t)(u0, u1), d/dt S(t)(u0, u1))``."""
    pos, vel = evolve_arrays(pair.u0.coeffs, pair.u1.coeffs, float(t), pair.cutoff)
    return CauchyPair(FourierField(pos), FourierField(vel), pair.s)


def tilde_free_evolve(pair, t):
    """``-(|nabla|/<nabla>) sin(t|nabla|) u0 + cos(t|nabla|)/<nabla> u1``."""
    M = pair.cutoff
    w, jb = wavenumber(M), japanese(M)
    out = (-(w / jb) * np.sin(t * w) * pair.u0.coeffs
           + np.cos(t * w) / jb * pair.u1.coeffs)
    return FourierField(out)


class FreeWave:
    """Linear solution ``z(t) = S(t)(u0, u1)`` sampled at arbitrary times."""

    def __init__(self, pair):
        self.pair = pair
        self.M = pair.cutoff
        self._a = pair.u0.coeffs
        self._b = pair.u1.coeffs

    def arrays(self, t):
        return evolve_arrays(self._a, self._b, float(t), self.M)

    def position(self, t):
        return self.arrays(t)[0]

    def __call__(self, t):
        return FourierField(self.position(t))

    def tilde(self, t):
        return tilde_free_evolve(self.pair, t).coeffs

    def positions(self, times):
        """Stack of position amplitudes, shape ``(len(times), 2M+1, 2M+1, 2M+1)``."""
        times = np.asarray(times, dtype=float)
        w = wavenumber(self.M)
        tw = times[:, None, None, None] * w
        return np.cos(tw) * self._a + _sin_over_w(times[:, None, None, None], w) * self._b


def duhamel_arrays(times, forcing, t0, t, M):
    """Trapezoid approximation of ``int_{t0}^{t} sin((t-t')|n|)/|n| f(t') dt'``.

    Also returns the velocity ``int cos((t-t')|n|) f(t') dt'``.  ``forcing`` is
    an array of amplitudes stacked along the first axis at ``times``.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise ValueError("need at least two forcing samples")
    if np.any(np.diff(times) <= 0):
        raise ValueError("forcing time stamps must be strictly increasing")
    tol = 1e-12 * max(1.0, abs(t), abs(t0))
    if times[0] > t0 + tol or times[-1] < t - tol:
        raise ValueError("forcing samples do not cover the integration interval")
    lo = np.searchsorted(times, t0 - tol)
    hi = np.searchsorted(times, t + tol, side="right")
    ts = times[lo:hi]
    if ts.size < 2 or abs(ts[0] - t0) > tol or abs(ts[-1] - t) > tol:
        raise ValueError("forcing samples must include both interval endpoints")
    f = forcing[lo:hi]
    w = wavenumber(M)
    lag = (t - ts)[:, None, None, None]
    kern_pos = _sin_over_w(lag, w)
    kern_vel = np.cos(lag * w)
    pos = np.trapezoid(kern_pos * f, ts, axis=0)
    vel = np.trapezoid(kern_vel * f, ts, axis=0)
    return pos, vel


def duhamel_increment(forcing, t0, t):
    """Duhamel integral of a time-stamped list ``[(t', f(t')), ...]`` over ``[t0, t]``."""
    times = np.array([s for s, _ in forcing], dtype=float)
    M = max(f.cutoff for _, f in forcing)
    stack = np.stack([f.with_cutoff(M).coeffs for _, f in forcing])
    pos, _ = duhamel_arrays(times, stack, t0, t, M)
    return FourierField(pos)


def linear_energy(pair):
    """``1/2 ||u1||^2 + 1/2 ||grad u0||^2`` over the nonzero modes."""
    M = pair.cutoff
    k2 = wavenumber_sq(M)
    mask = k2 > 0
    a, b = pair.u0.coeffs, pair.u1.coeffs
    return 0.5 * VOLUME * float(np.sum(mask * np.abs(b) ** 2) + np.sum(k2 * np.abs(a) ** 2))
