"""Sub-Gaussian laws and coefficient-wise randomization of Cauchy data.

Every random coefficient is addressed by ``(master_seed, sample_index, j,
basis, mode)``.  The first four select a Philox key; the mode is the counter
position inside that stream.  Modes are enumerated shell by shell (see
:func:`nlwlab.fourier_field.half_lattice`), so a draw never depends on the
cutoff of the data, the batch size or the worker that computes it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier_field import CauchyPair, FourierField, half_lattice

# basis codes inside a stream key
_CONST, _COS, _SIN = 0, 1, 2

LAW_KINDS = ("gaussian", "rademacher", "uniform")


@dataclass(frozen=True)
class RandomLaw:
    """Mean-zero law ``theta`` with ``E exp(gamma X) <= exp(c gamma^2)``.

    ``param`` is the variance for ``gaussian`` and the half-width for
    ``uniform``; it is ignored for ``rademacher``.
    """

    kind: str = "gaussian"
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise ValueError(f"unknown law {self.kind!r}; expected one of {LAW_KINDS}")
        if self.kind != "rademacher" and not self.param > 0:
            raise ValueError("law parameter must be positive")
        if self.kind == "rademacher":
            object.__setattr__(self, "param", 1.0)

    @classmethod
    def gaussian(cls, variance=1.0):
        return cls("gaussian", float(variance))

    @classmethod
    def rademacher(cls):
        return cls("rademacher", 1.0)

    @classmethod
    def uniform(cls, halfwidth=1.0):
        return cls("uniform", float(halfwidth))

    @classmethod
    def parse(cls, text):
        """``"gaussian"``, ``"gaussian:2"``, ``"rademacher"``, ``"uniform:0.5"``."""
        kind, _, arg = str(text).strip().lower().partition(":")
        return cls(kind, float(arg)) if arg else cls(kind)

    def __str__(self):
        if self.kind == "rademacher":
            return "rademacher"
        return f"{self.kind}:{self.param!r}"

    @property
    def subgaussian_c(self):
        """Smallest ``c`` in the moment generating function bound."""
        if self.kind == "gaussian":
            return 0.5 * self.param
        if self.kind == "rademacher":
            return 0.5
        return self.param**2 / 6.0

    @property
    def bound(self):
        """Largest possible ``|X|`` (``inf`` for the Gaussian)."""
        return np.inf if self.kind == "gaussian" else self.param

    def sample(self, rng, size):
        if self.kind == "gaussian":
            return np.sqrt(self.param) * rng.standard_normal(size)
        if self.kind == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size, dtype=np.int64) - 1.0
        return rng.uniform(-self.param, self.param, size)


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    sample_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master seed must fit in 64 bits")
        if self.sample_index < 0:
            raise ValueError("sample index must be nonnegative")

    def stream(self, *tag):
        """Independent Philox stream keyed by this seed and an integer tag."""
        seq = np.random.SeedSequence([self.master_seed, self.sample_index, *tag])
        key = seq.generate_state(2, dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def for_sample(self, index):
        return SeedSpec(self.master_seed, index)


def randomize_field(field, law, seed, j):
    """Multiply every real-basis coefficient of ``field`` by an independent draw."""
    M = field.cutoff
    reps, flat_pos, flat_neg = half_lattice(M)
    K = len(reps)
    alpha = law.sample(seed.stream(j, _CONST), 1)[0]
    beta = law.sample(seed.stream(j, _COS), K)
    gamma = law.sample(seed.stream(j, _SIN), K)
    flat = field.coeffs.ravel()
    amp = flat[flat_pos]
    # b -> beta b and c -> gamma c, i.e. Re and Im scale independently
    new = beta * amp.real + 1j * (gamma * amp.imag)
    out = np.empty_like(flat)
    out[flat_pos] = new
    out[flat_neg] = np.conj(new)
    mid = (flat.size - 1) // 2
    out[mid] = alpha * flat[mid].real
    return FourierField(out.reshape(field.coeffs.shape))


def draw_randomized_pair(pair, law, seed):
    """Randomize ``(u0, u1)`` coefficient-wise in the cosine/sine basis."""
    return CauchyPair(
        randomize_field(pair.u0, law, seed, 0),
        randomize_field(pair.u1, law, seed, 1),
        pair.s,
    )


@dataclass
class MGFReport:
    gammas: np.ndarray
    empirical: np.ndarray
    stderr: np.ndarray
    bound: np.ndarray
    violation: np.ndarray
    truncated: np.ndarray
    c: float

    @property
    def ok(self):
        return not bool(np.any(self.violation))


def mgf_bound_check(law, gamma_grid, samples, seed, c=None):
    """Empirical ``E exp(gamma X)`` against ``exp(c gamma^2)`` on a grid of ``gamma``.

    A violation is flagged when the empirical mean exceeds the bound by more
    than three standard errors.  Values of ``gamma`` whose exponent would
    overflow for some sample are reported as truncated and never flagged.
    """
    if samples < 10_000:
        raise ValueError("mgf_bound_check needs at least 10^4 samples")
    c = law.subgaussian_c if c is None else float(c)
    x = law.sample(seed.stream(7, 0), samples)
    gammas = np.atleast_1d(np.asarray(gamma_grid, dtype=float))
    emp = np.full(gammas.shape, np.nan)
    se = np.full(gammas.shape, np.nan)
    truncated = np.zeros(gammas.shape, dtype=bool)
    big = np.max(np.abs(x))
    for i, g in enumerate(gammas):
        if abs(g) * big > 700.0:
            truncated[i] = True
            continue
        e = np.exp(g * x)
        emp[i] = e.mean()
        se[i] = e.std(ddof=1) / np.sqrt(samples)
    with np.errstate(over="ignore"):
        bound = np.exp(c * gammas**2)
    violation = ~truncated & (emp - 3.0 * se > bound)
    return MGFReport(gammas, emp, se, bound, violation, truncated, c)


@dataclass
class KhinchinResult:
    ratio: float
    stderr: float
    moment: float


def khinchin_check(coeffs, law, q, samples, seed, chunk=2000):
    """Empirical ``||sum g_n c_n||_{L^q_omega} / (sqrt(q) ||c||_2)`` with its delta-method error."""
    c = np.asarray(coeffs, dtype=float).ravel()
    if q < 2:
        raise ValueError("q must be >= 2")
    if samples < 10_000:
        raise ValueError("khinchin_check needs at least 10^4 samples")
    norm = np.linalg.norm(c)
    if norm == 0:
        raise ValueError("coefficient sequence is zero")
    rng = seed.stream(8, 0)
    powers = np.empty(samples)
    for start in range(0, samples, chunk):
        stop = min(samples, start + chunk)
        g = law.sample(rng, (stop - start, c.size))
        powers[start:stop] = np.abs(g @ c) ** q
    m = powers.mean()
    se_m = powers.std(ddof=1) / np.sqrt(samples)
    ratio = m ** (1.0 / q) / (np.sqrt(q) * norm)
    return KhinchinResult(float(ratio), float(ratio * se_m / (q * m)), float(m))
