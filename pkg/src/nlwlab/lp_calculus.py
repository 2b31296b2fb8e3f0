"""Smooth frequency cutoffs, Littlewood-Paley blocks and Lebesgue norms on T^3."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier_field import (
    VOLUME,
    FourierField,
    default_resolution,
    japanese,
    sobolev_norm,
    synthesize_array,
    wavenumber,
)


def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def bump(r):
    """Radial cutoff: 1 on ``[0, 1]``, 0 on ``[2, inf)``, smooth in between.

    The transition is ``psi(2 - r) / (psi(2 - r) + psi(r - 1))`` with
    ``psi(x) = exp(-1/x)`` for ``x > 0``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("bump is defined for r >= 0")
    out = np.where(r <= 1.0, 1.0, 0.0)
    mid = (r > 1.0) & (r < 2.0)
    if np.any(mid):
        a = _psi(2.0 - r[mid])
        b = _psi(r[mid] - 1.0)
        out[mid] = a / (a + b)
    return float(out) if out.ndim == 0 else out


def cutoff_symbol(M, N):
    """``phi0(|n| / N)`` on the ``|n|_inf <= M`` lattice."""
    return bump(wavenumber(M) / float(N))


def dyadic_symbol(M, j):
    if j < 0:
        raise ValueError("dyadic index must be >= 0")
    upper = cutoff_symbol(M, 2**j)
    if j == 0:
        return upper
    return upper - cutoff_symbol(M, 2 ** (j - 1))


def project_leq(field, N):
    """Smooth projection ``P_{<=N}``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return FourierField(cutoff_symbol(field.cutoff, N) * field.coeffs)


def project_dyadic(field, j):
    """Littlewood-Paley block ``P_j = P_{<=2^j} - P_{<=2^(j-1)}`` with ``P_{<=1/2} = 0``."""
    return FourierField(dyadic_symbol(field.cutoff, j) * field.coeffs)


def dyadic_depth(M):
    """Smallest ``J`` with ``P_{<=2^J}`` the identity on the ``|n|_inf <= M`` lattice."""
    top = np.sqrt(3.0) * M
    J = 0
    while 2**J < top:
        J += 1
    return J


@dataclass(frozen=True)
class DyadicDecomposition:
    """Blocks ``P_0 u, ..., P_J u``."""

    blocks: tuple

    @classmethod
    def of(cls, field, J=None):
        J = dyadic_depth(field.cutoff) if J is None else J
        return cls(tuple(project_dyadic(field, j) for j in range(J + 1)))

    def total(self):
        out = self.blocks[0]
        for b in self.blocks[1:]:
            out = out + b
        return out


def lp_sobolev_ratio(field, s):
    """``sum_j 4^{js} ||P_j u||_{L^2}^2`` divided by ``||u||_{H^s}^2``."""
    denom = sobolev_norm(field, s) ** 2
    if denom == 0.0:
        raise ZeroDivisionError("ratio undefined for the zero field")
    M = field.cutoff
    power = np.abs(field.coeffs) ** 2
    num = 0.0
    for j in range(dyadic_depth(M) + 1):
        num += 4.0 ** (j * s) * VOLUME * np.sum(dyadic_symbol(M, j) ** 2 * power)
    return float(num / denom)


def lp_weight_bounds(M, s):
    """Extreme values over the lattice of the per-mode ratio behind :func:`lp_sobolev_ratio`.

    Every field's ratio is a convex combination of these per-mode weights, so
    ``[lo, hi]`` bounds it for all fields with cutoff ``M``.
    """
    w = np.zeros((2 * M + 1,) * 3)
    for j in range(dyadic_depth(M) + 1):
        w += 4.0 ** (j * s) * dyadic_symbol(M, j) ** 2
    ratio = w / japanese(M) ** (2.0 * s)
    return float(ratio.min()), float(ratio.max())


def _grid_norm(samples, r, G):
    """``L^r`` norm of grid samples over the last three axes by the rectangle rule."""
    a = np.abs(samples)
    if np.isinf(r):
        return a.max(axis=(-3, -2, -1))
    cell = VOLUME / G**3
    if r == 2:
        return np.sqrt(cell * np.sum(a * a, axis=(-3, -2, -1)))
    m = a.max(axis=(-3, -2, -1), keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    inner = cell * np.sum((a / safe) ** r, axis=(-3, -2, -1))
    return np.squeeze(safe, axis=(-3, -2, -1)) * inner ** (1.0 / r)


def lebesgue_norm_array(coeffs, r, resolution=None):
    M = (coeffs.shape[-1] - 1) // 2
    G = default_resolution(M) if resolution is None else resolution
    return _grid_norm(synthesize_array(coeffs, G), r, G)


def lebesgue_norm(field, r, resolution=None):
    """``(int |u|^r)^{1/r}`` by the rectangle rule; ``r = inf`` gives the grid maximum."""
    if r < 1:
        raise ValueError("r must lie in [1, inf]")
    return float(lebesgue_norm_array(field.coeffs, r, resolution))


def bernstein_ratio(field, N, p, q, resolution=None):
    """``||P_{<=N} u||_{L^q} / (N^{3/p - 3/q} ||P_{<=N} u||_{L^p})``."""
    if not 1 <= p <= q:
        raise ValueError("need 1 <= p <= q <= inf")
    proj = project_leq(field, N)
    low = lebesgue_norm(proj, p, resolution)
    if low == 0.0:
        raise ZeroDivisionError("ratio undefined for the zero field")
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    return lebesgue_norm(proj, q, resolution) / (N ** (3.0 / p - 3.0 * inv_q) * low)


def time_norm(times, values, q):
    """``L^q`` norm in time of sampled nonnegative ``values`` (trapezoid rule; ``q = inf`` is the max)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape[0] != values.shape[0]:
        raise ValueError("times and values differ in length")
    if times.size > 1 and np.any(np.diff(times) < 0):
        raise ValueError("time stamps must be monotone")
    if np.isinf(q):
        return float(values.max()) if values.size else 0.0
    if times.size < 2:
        raise ValueError("need at least two time samples for finite q")
    return float(np.trapezoid(values**q, times) ** (1.0 / q))


def mixed_norm(series, q, r, resolution=None):
    """``L^q_t L^r_x`` norm of a time-stamped list ``[(t, field), ...]``."""
    times = [t for t, _ in series]
    spatial = [lebesgue_norm(f, r, resolution) for _, f in series]
    return time_norm(times, spatial, q)


# ---------------------------------------------------------------------------
# invariant battery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckRow:
    check: str
    case: str
    value: float
    bound: float
    passed: bool


def random_field(M, rng, decay=1.0):
    """Real field with independent Gaussian cosine/sine coefficients scaled by ``<n>^{-decay}``."""
    from .fourier_field import half_lattice

    reps, _, _ = half_lattice(M)
    jb = np.sqrt(1.0 + np.sum(reps.astype(float) ** 2, axis=1)) ** (-decay)
    b = rng.standard_normal(len(reps)) * jb
    c = rng.standard_normal(len(reps)) * jb
    return FourierField.from_real_basis(M, float(rng.standard_normal()), b, c)


def invariant_battery(M=7, count=200, s_values=(0.0, 0.4, 0.8, 1.0), rng=None,
                      bernstein_cases=((2.0, 4.0), (2.0, np.inf), (4.0, np.inf)), N_values=(4, 8, 16),
                      bernstein_count=100, lp_band=(0.25, 4.0), bernstein_bound=10.0, resolution=None):
    """Littlewood-Paley and Bernstein checks on a battery of random fields.

    * ``lp_sobolev_ratio`` lies in ``lp_band`` for every field and ``s``;
    * ``bernstein_ratio`` stays below ``bernstein_bound``;
    * the blocks telescope back to the field to rounding.

    Returns a list of :class:`CheckRow` (one row per check family, holding the
    worst value found).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    decays = rng.uniform(0.0, 2.5, count)
    battery = [random_field(M, rng, d) for d in decays]
    rows = []
    lo, hi = lp_band
    for s in s_values:
        ratios = np.array([lp_sobolev_ratio(f, s) for f in battery])
        worst = float(ratios.max()) if ratios.max() - 1 >= 1 - ratios.min() else float(ratios.min())
        rows.append(CheckRow("lp_sobolev_ratio", f"s={s:.6g}", worst, hi if worst >= 1 else lo,
                             bool(ratios.min() >= lo and ratios.max() <= hi)))
    sub = battery[:bernstein_count]
    for p, q in bernstein_cases:
        worst = max(bernstein_ratio(f, N, p, q, resolution) for f in sub for N in N_values)
        qs = "inf" if np.isinf(q) else f"{q:g}"
        rows.append(CheckRow("bernstein_ratio", f"p={p:g},q={qs}", float(worst), bernstein_bound,
                             bool(worst <= bernstein_bound)))
    err = 0.0
    for f in battery:
        total = DyadicDecomposition.of(f).total()
        err = max(err, float(np.max(np.abs(total.coeffs - f.coeffs))))
    rows.append(CheckRow("telescoping", f"J={dyadic_depth(M)}", err, 1e-12, bool(err <= 1e-12)))
    return rows
