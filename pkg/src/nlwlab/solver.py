"""Time integration of ``(d_t^2 - Lap) v + |v + z|^{p-1}(v + z) = 0`` on T^3.

``z`` is a given forcing, normally a free wave.  The integrator is Strang
splitting: half a nonlinear kick on the velocity, the exact free flow, and
another half kick.  The nonlinearity is evaluated on an oversampled grid and
projected back onto the retained modes, so the scheme is the symplectic
integrator of the semi-discrete Hamiltonian whose potential is the grid sum
``h^3/(p+1) sum |v(x_k)|^{p+1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .fourier_field import (
    VOLUME,
    CauchyPair,
    FourierField,
    GridValues,
    analyze_array,
    default_resolution,
    sobolev_norm_array,
    synthesize_array,
    wavenumber,
    wavenumber_sq,
)
from .lp_calculus import _grid_norm, project_leq, time_norm
from .propagators import FreeWave, evolve_arrays


class BlowUpError(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, t, message=None):
        self.t = float(t)
        super().__init__(message or f"solution blew up at t = {self.t:.6g}")


class NonContractionError(RuntimeError):
    """Picard iteration failed to contract."""

    def __init__(self, factor, iterations, message=None):
        self.factor = float(factor)
        self.iterations = int(iterations)
        super().__init__(
            message or f"Duhamel map is not contracting (factor {self.factor:.3g} after "
                       f"{self.iterations} iterations); the local time is too large"
        )


def check_exponent(p):
    if not 3.0 < p < 5.0:
        raise ValueError(f"p must lie in (3,5), got {p}")


def critical_exponents(p, closed=False):
    """``(s_cr, s_min) = (3/2 - 2/(p-1), (p-3)/(p-1))``.

    ``closed=True`` admits the endpoints ``p = 3`` and ``p = 5``.
    """
    if closed:
        if not 3.0 <= p <= 5.0:
            raise ValueError(f"p must lie in [3,5], got {p}")
    else:
        check_exponent(p)
    return 1.5 - 2.0 / (p - 1.0), (p - 3.0) / (p - 1.0)


def strichartz_exponents(p):
    """Time and space exponents ``(2p/(p-3), 2p)`` of the working Strichartz pair."""
    return 2.0 * p / (p - 3.0), 2.0 * p


def power_nonlinearity(u, p):
    # overflow to inf is expected near blow-up; the integrator checks finiteness
    with np.errstate(over="ignore", invalid="ignore"):
        return np.abs(u) ** (p - 1.0) * u


def nonlinearity(values, p):
    """Pointwise ``|u|^{p-1} u``."""
    return GridValues(power_nonlinearity(values.values, p))


# ---------------------------------------------------------------------------
# states and records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverState:
    t: float
    v: FourierField
    vt: FourierField
    p: float
    N: int | None = None

    def __post_init__(self):
        check_exponent(self.p)
        if self.v.cutoff != self.vt.cutoff:
            raise ValueError("v and vt must share a cutoff")

    @property
    def cutoff(self):
        return self.v.cutoff

    @classmethod
    def zero(cls, M, p, N=None, t=0.0):
        z = FourierField.zeros(M)
        return cls(t, z, z, p, N)

    def h1_norm(self):
        return float(np.hypot(sobolev_norm_array(self.v.coeffs, 1.0),
                              sobolev_norm_array(self.vt.coeffs, 0.0)))


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    kinetic: float
    gradient: float
    potential: float

    @property
    def total(self):
        return self.kinetic + self.gradient + self.potential


class _Kernel:
    """Grid evaluation of the nonlinearity for one ``(M, G, p)``."""

    def __init__(self, M, p, resolution=None):
        self.M = M
        self.p = float(p)
        self.G = default_resolution(M) if resolution is None else int(resolution)
        if self.G < 2 * M + 2:
            raise ValueError(f"resolution {self.G} too small for cutoff {M}")
        self.cell = VOLUME / self.G**3
        self.k2 = wavenumber_sq(M)

    def grid(self, c):
        return synthesize_array(c, self.G)

    def force_from_grid(self, ug):
        return analyze_array(power_nonlinearity(ug, self.p), self.M)

    def force(self, c):
        return self.force_from_grid(self.grid(c))

    def kinetic(self, vt):
        return 0.5 * VOLUME * float(np.sum(np.abs(vt) ** 2))

    def gradient(self, v):
        return 0.5 * VOLUME * float(np.sum(self.k2 * np.abs(v) ** 2))

    def potential_from_grid(self, vg):
        return self.cell * float(np.sum(np.abs(vg) ** (self.p + 1.0))) / (self.p + 1.0)

    def energy(self, t, v, vt, vg=None):
        vg = self.grid(v) if vg is None else vg
        return EnergyRecord(float(t), self.kinetic(vt), self.gradient(v), self.potential_from_grid(vg))

    def power(self, vtg, Fu, Fv):
        """``-int vt (F(v+z) - F(v))`` by the grid sum."""
        return -self.cell * float(np.sum(vtg * (Fu - Fv)))


def energy(state, resolution=None):
    """Kinetic, gradient and potential parts of ``E(v)``."""
    k = _Kernel(state.cutoff, state.p, resolution)
    return k.energy(state.t, state.v.coeffs, state.vt.coeffs)


@dataclass
class TrajectoryRecord:
    """Diagnostics of one trajectory at its output times."""

    p: float
    N: int | None
    times: np.ndarray
    kinetic: np.ndarray
    gradient: np.ndarray
    potential: np.ndarray
    power: np.ndarray
    h1: np.ndarray
    lr_v: np.ndarray
    lr_z: np.ndarray
    lr_u: np.ndarray
    final: SolverState
    states: list = dc_field(default_factory=list)

    @property
    def total(self):
        return self.kinetic + self.gradient + self.potential

    def energies(self):
        return [EnergyRecord(*row) for row in zip(self.times, self.kinetic, self.gradient, self.potential)]

    @property
    def sup_energy(self):
        return float(np.max(self.total))

    def strichartz_norm(self, which="v"):
        """``L^{2p/(p-3)}_t L^{2p}_x`` norm of ``v``, ``z`` or ``u = v + z`` over the record."""
        q, _ = strichartz_exponents(self.p)
        return time_norm(self.times, {"v": self.lr_v, "z": self.lr_z, "u": self.lr_u}[which], q)

    def subsample(self, k):
        """Every ``k``-th output."""
        sl = slice(None, None, k)
        return TrajectoryRecord(
            self.p, self.N, self.times[sl], self.kinetic[sl], self.gradient[sl], self.potential[sl],
            self.power[sl], self.h1[sl], self.lr_v[sl], self.lr_z[sl], self.lr_u[sl], self.final,
            self.states[sl] if self.states else [],
        )


# ---------------------------------------------------------------------------
# Strang splitting
# ---------------------------------------------------------------------------

def _forcing_array(forcing, M):
    """Normalize a forcing spec to ``t -> amplitude array | None``."""
    if forcing is None:
        return lambda t: None
    if isinstance(forcing, FreeWave):
        if forcing.M != M:
            raise ValueError("forcing cutoff differs from the state cutoff")
        return forcing.position

    def call(t):
        f = forcing(t)
        if f is None:
            return None
        if isinstance(f, FourierField):
            f = f.with_cutoff(M).coeffs
        return f

    return call


class StrangIntegrator:
    """Strang splitting for one forcing; reuses the closing kick of a step as the next opening kick."""

    def __init__(self, M, p, forcing=None, resolution=None):
        self.kernel = _Kernel(M, p, resolution)
        self.M = M
        self.p = float(p)
        self.z = _forcing_array(forcing, M)
        self._cache = None

    def _total(self, v, t):
        z = self.z(t)
        return v if z is None else v + z

    def force(self, v, t):
        c = self._cache
        if c is not None and c[0] == t and c[1] is v:
            return c[2]
        f = self.kernel.force(self._total(v, t))
        self._cache = (t, v, f)
        return f

    def step(self, v, vt, t, t1):
        """Advance ``(v, vt)`` from ``t`` to ``t1``."""
        dt = t1 - t
        vt = vt - 0.5 * dt * self.force(v, t)
        v, vt = evolve_arrays(v, vt, dt, self.M)
        vt = vt - 0.5 * dt * self.force(v, t1)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(vt))):
            raise BlowUpError(t1)
        return v, vt

    def diagnostics(self, v, vt, t):
        """Energy parts, power, ``H^1 x L^2`` norm and ``L^{2p}`` norms at one time."""
        k = self.kernel
        vg = k.grid(v)
        z = self.z(t)
        zg = np.zeros_like(vg) if z is None else k.grid(z)
        ug = vg + zg
        Fu = power_nonlinearity(ug, self.p)
        c = self._cache
        if c is None or c[0] != t or c[1] is not v:
            # the kick at this time needs exactly this force
            self._cache = (t, v, analyze_array(Fu, self.M))
        Fv = power_nonlinearity(vg, self.p)
        vtg = k.grid(vt)
        r = 2.0 * self.p
        rec = (
            k.kinetic(vt), k.gradient(v), k.potential_from_grid(vg), k.power(vtg, Fu, Fv),
            float(np.hypot(sobolev_norm_array(v, 1.0), sobolev_norm_array(vt, 0.0))),
            float(_grid_norm(vg, r, k.G)), float(_grid_norm(zg, r, k.G)), float(_grid_norm(ug, r, k.G)),
        )
        return rec


def step_strang(state, forcing, dt, resolution=None):
    """One Strang step of size ``dt``.

    ``forcing`` maps a time to a :class:`FourierField` (or ``None`` for zero).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    integ = StrangIntegrator(state.cutoff, state.p, forcing, resolution)
    v, vt = integ.step(state.v.coeffs, state.vt.coeffs, state.t, state.t + dt)
    return SolverState(state.t + dt, FourierField(v), FourierField(vt), state.p, state.N)


def integrate(integ, v, vt, t0, T, dt_max, record_every=1, store_states=False, N=None):
    """Advance to ``T`` with ``dt = (T - t0)/ceil((T - t0)/dt_max)``, recording every few steps."""
    span = T - t0
    if not span > 0:
        raise ValueError("T must exceed the start time")
    nsteps = max(1, math.ceil(span / dt_max - 1e-9))
    dt = span / nsteps
    rows, times, states = [], [], []

    def record(i, v, vt):
        t = t0 + i * dt
        times.append(t)
        rows.append(integ.diagnostics(v, vt, t))
        if store_states:
            states.append(SolverState(t, FourierField(v), FourierField(vt), integ.p, N))

    record(0, v, vt)
    for i in range(1, nsteps + 1):
        v, vt = integ.step(v, vt, t0 + (i - 1) * dt, t0 + i * dt)
        if i % record_every == 0 or i == nsteps:
            record(i, v, vt)
    cols = np.array(rows, dtype=float).T
    final = SolverState(T, FourierField(v), FourierField(vt), integ.p, N)
    return TrajectoryRecord(integ.p, N, np.array(times), *cols, final=final, states=states)


def truncated_forcing(pair, N):
    """Free wave of ``(P_{<=N} u0, P_{<=N} u1)``; ``N=None`` keeps all modes."""
    if N is None:
        return FreeWave(pair)
    return FreeWave(CauchyPair(project_leq(pair.u0, N), project_leq(pair.u1, N), pair.s))


def solve_truncated(pair, N, p, T, dt_max=1e-2, resolution=None, record_every=1, store_states=False):
    """Solve for ``v_N`` from zero data, driven by the free wave of the ``P_{<=N}``-truncated pair.

    ``N=None`` drives with the untruncated free wave.
    """
    check_exponent(p)
    M = pair.cutoff
    integ = StrangIntegrator(M, p, truncated_forcing(pair, N), resolution)
    zero = np.zeros((2 * M + 1,) * 3, dtype=complex)
    return integrate(integ, zero, zero, 0.0, T, dt_max, record_every, store_states, N)


def solve_free_data(state, T, dt_max=1e-2, resolution=None, record_every=1, store_states=False):
    """Self-contained equation ``(d_t^2 - Lap) v + |v|^{p-1} v = 0`` started from ``state``."""
    integ = StrangIntegrator(state.cutoff, state.p, None, resolution)
    return integrate(integ, state.v.coeffs, state.vt.coeffs, state.t, T, dt_max,
                     record_every, store_states, state.N)


def energy_derivative_residual(trajectory, forcing=None, resolution=None):
    """Largest mismatch between the centred difference of ``E`` and ``-int vt (F(v+z) - F(v))``.

    The right-hand side is taken from the record unless ``forcing`` is given,
    in which case it is recomputed from the stored states.  The mismatch is
    divided by ``max(1, max E)``.
    """
    t = np.asarray(trajectory.times)
    if t.size < 3:
        raise ValueError("need at least three energy records")
    E = trajectory.total
    if forcing is None:
        power = np.asarray(trajectory.power)
    else:
        if len(trajectory.states) != t.size:
            raise ValueError("recomputing the power needs stored states")
        M = trajectory.states[0].cutoff
        integ = StrangIntegrator(M, trajectory.p, forcing, resolution)
        power = np.array([integ.diagnostics(s.v.coeffs, s.vt.coeffs, s.t)[3] for s in trajectory.states])
    dE = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    return float(np.max(np.abs(dE - power[1:-1])) / max(1.0, float(np.max(E))))


# ---------------------------------------------------------------------------
# local theory: step size, Picard iteration, continuation
# ---------------------------------------------------------------------------

def local_exponent(p):
    """``2(p-1)/(5-p)``: balances ``t^{(5-p)/2} R^{p-1}`` against a fixed small constant."""
    check_exponent(p)
    return 2.0 * (p - 1.0) / (5.0 - p)


def local_time(h1_norm, K, c=0.1, p=4.0, gamma=None):
    """``t* = c max(h1_norm + K, 1)^{-gamma}``, capped at 1."""
    if h1_norm < 0 or K < 0:
        raise ValueError("norms must be nonnegative")
    if not c > 0:
        raise ValueError("c must be positive")
    gamma = local_exponent(p) if gamma is None else float(gamma)
    return min(c * max(h1_norm + K, 1.0) ** (-gamma), 1.0)


@dataclass
class PicardResult:
    times: np.ndarray
    states: list
    iterations: int
    distances: list
    factor: float

    @property
    def final(self):
        return self.states[-1]


def _duhamel_cumulative(taus, F, M):
    """Trapezoid Duhamel integrals from ``tau = 0`` to every node, position and velocity."""
    w = wavenumber(M)
    cw = np.cos(taus[:, None, None, None] * w)
    sw = np.sin(taus[:, None, None, None] * w)
    C = cumulative_trapezoid(cw * F, taus, axis=0, initial=0)
    S = cumulative_trapezoid(sw * F, taus, axis=0, initial=0)
    vel = cw * C + sw * S
    num = sw * C - cw * S
    pos = np.divide(num, w, out=np.zeros_like(num), where=w > 0)
    # zero mode: int (t - t') F dt'
    mid = (M, M, M)
    f0 = F[(slice(None),) + mid]
    pos[(slice(None),) + mid] = (taus * cumulative_trapezoid(f0, taus, initial=0)
                                 - cumulative_trapezoid(taus * f0, taus, initial=0))
    return pos, vel


def picard_solve(initial, forcing, t_star, tol=1e-10, max_iter=100, steps=64, resolution=None):
    """Fixed-point iteration of the Duhamel map on ``[t0, t0 + t_star]``.

    The map sends ``v`` to ``S(t - t0)(v0, v1) - int sin((t-t')|nabla|)/|nabla| F(v + f)(t') dt'``
    with the time integral taken by the trapezoid rule on ``steps`` equal
    intervals.  Iteration stops once successive iterates are closer than
    ``tol`` in ``sup_t H^1 x L^2``.

    Raises
    ------
    NonContractionError
        If the iterates grow, stop shrinking, or turn non-finite.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    M, p = initial.cutoff, initial.p
    kernel = _Kernel(M, p, resolution)
    taus = np.linspace(0.0, float(t_star), steps + 1)
    times = initial.t + taus
    zf = _forcing_array(forcing, M)
    zs = [zf(t) for t in times]
    f = None if all(z is None for z in zs) else np.stack(
        [np.zeros((2 * M + 1,) * 3, dtype=complex) if z is None else z for z in zs])
    w = wavenumber(M)
    a, b = initial.v.coeffs, initial.vt.coeffs
    cw = np.cos(taus[:, None, None, None] * w)
    sw = np.sin(taus[:, None, None, None] * w)
    sinc = taus[:, None, None, None] * np.sinc(taus[:, None, None, None] * w / np.pi)
    free_v = cw * a + sinc * b
    free_vt = -w * sw * a + cw * b

    v, vt = free_v, free_vt
    distances, factor = [], 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, max_iter + 1):
            u = v if f is None else v + f
            F = kernel.force_from_grid(kernel.grid(u))
            pos, vel = _duhamel_cumulative(taus, F, M)
            nv, nvt = free_v - pos, free_vt - vel
            d = float(np.max(np.hypot(sobolev_norm_array(nv - v, 1.0), sobolev_norm_array(nvt - vt, 0.0))))
            v, vt = nv, nvt
            if not np.isfinite(d):
                raise NonContractionError(np.inf, it)
            if distances and distances[-1] > 0:
                factor = d / distances[-1]
            distances.append(d)
            if d < tol:
                break
            if len(distances) >= 3 and distances[-1] > distances[-2] > distances[-3]:
                raise NonContractionError(factor, it)
        else:
            raise NonContractionError(factor, max_iter,
                                      f"Picard iteration did not reach tol={tol:g} in {max_iter} iterations "
                                      f"(last factor {factor:.3g})")
    states = [SolverState(float(t), FourierField(v[i]), FourierField(vt[i]), p, initial.N)
              for i, t in enumerate(times)]
    return PicardResult(times, states, it, distances, factor)


@dataclass
class ContinuationResult:
    times: np.ndarray
    h1: np.ndarray
    t_stars: np.ndarray
    differences: dict
    final: SolverState
    finals_N: dict
    diagnostic: str | None = None

    @property
    def completed(self):
        return self.diagnostic is None


def continuation_solve(pair, p, T, N_list, dt_max=1e-2, c=0.1, gamma=None, K=None,
                       t_star_floor=1e-6, resolution=None):
    """Solve for ``v`` (untruncated forcing) interval by interval, with every ``v_N`` alongside.

    Each interval has length ``local_time(||(v, v_t)||_{H^1 x L^2}, K)`` and
    is split into equal steps no longer than ``dt_max``.  At interval ends
    ``w_N = ||(v - v_N, v_t - v_{N,t})||_{H^1 x L^2}`` is recorded.  If the
    local time falls below ``t_star_floor`` the partial result is returned
    with a diagnostic.
    """
    check_exponent(p)
    N_list = list(N_list)
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be ascending")
    M = pair.cutoff
    K = pair.norm(0.0) if K is None else float(K)
    main = StrangIntegrator(M, p, FreeWave(pair), resolution)
    trunc = {N: StrangIntegrator(M, p, truncated_forcing(pair, N), resolution) for N in N_list}
    zero = np.zeros((2 * M + 1,) * 3, dtype=complex)
    v, vt = zero, zero
    vN = {N: (zero, zero) for N in N_list}

    def h1(a, b):
        return float(np.hypot(sobolev_norm_array(a, 1.0), sobolev_norm_array(b, 0.0)))

    times, norms, t_stars = [0.0], [0.0], []
    diffs = {N: [0.0] for N in N_list}
    t, diagnostic = 0.0, None
    while t < T - 1e-12 * max(1.0, T):
        ts = local_time(norms[-1], K, c, p, gamma)
        if ts < t_star_floor:
            diagnostic = f"t* underflow at t={t:.6g}: t*={ts:.3g} < floor {t_star_floor:.3g}"
            break
        t_stars.append(ts)
        span = min(ts, T - t)
        n = max(1, math.ceil(span / dt_max - 1e-9))
        dt = span / n
        for i in range(n):
            ta, tb = t + i * dt, t + (i + 1) * dt
            v, vt = main.step(v, vt, ta, tb)
            for N in N_list:
                vN[N] = trunc[N].step(*vN[N], ta, tb)
        t = t + n * dt
        times.append(t)
        norms.append(h1(v, vt))
        for N in N_list:
            diffs[N].append(h1(v - vN[N][0], vt - vN[N][1]))
    final = SolverState(t, FourierField(v), FourierField(vt), p, None)
    finals = {N: SolverState(t, FourierField(a), FourierField(b), p, N) for N, (a, b) in vN.items()}
    return ContinuationResult(np.array(times), np.array(norms), np.array(t_stars),
                              {N: np.array(d) for N, d in diffs.items()}, final, finals, diagnostic)
