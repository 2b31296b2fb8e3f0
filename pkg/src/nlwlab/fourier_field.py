"""Real trigonometric fields on the torus T^3 = [0, 2pi)^3.

A field is stored as complex exponential amplitudes ``c(n)`` on the cube
``|n|_inf <= M`` so that ``u(x) = sum_n c(n) exp(i n.x)``.  The array is
indexed by ``n + M`` along each axis, which is also the lexicographic order
used by snapshot files.  Real-valuedness is the Hermitian symmetry
``c(-n) = conj(c(n))``.

The cosine/sine view ``u = a0 + sum_{n in half lattice} b_n cos(n.x) + c_n sin(n.x)``
is exposed through :meth:`FourierField.real_basis` and
:meth:`FourierField.from_real_basis`; each direction is counted once, via the
representative whose first nonzero component is positive.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi
VOLUME = TWO_PI**3

SNAPSHOT_MAGIC = b"NLWFIELD"


class AliasingError(ValueError):
    """Grid too coarse to represent the requested modes without aliasing."""


class ComplexOutputError(ValueError):
    """Operation would turn a real field into a complex one."""


# ---------------------------------------------------------------------------
# lattice helpers
# ---------------------------------------------------------------------------

def _readonly(a):
    a.flags.writeable = False
    return a


@lru_cache(maxsize=64)
def lattice(M):
    """Integer coordinates ``(n1, n2, n3)`` of the cube ``|n|_inf <= M``.

    Returned as three read-only arrays of shape ``(2M+1,)*3``.
    """
    r = np.arange(-M, M + 1)
    n1, n2, n3 = np.meshgrid(r, r, r, indexing="ij")
    return _readonly(n1), _readonly(n2), _readonly(n3)


@lru_cache(maxsize=64)
def wavenumber_sq(M):
    n1, n2, n3 = lattice(M)
    return _readonly((n1 * n1 + n2 * n2 + n3 * n3).astype(float))


@lru_cache(maxsize=64)
def wavenumber(M):
    """Euclidean length ``|n|`` on the lattice."""
    return _readonly(np.sqrt(wavenumber_sq(M)))


@lru_cache(maxsize=64)
def japanese(M):
    """``<n> = (1 + |n|^2)^(1/2)`` on the lattice."""
    return _readonly(np.sqrt(1.0 + wavenumber_sq(M)))


@lru_cache(maxsize=64)
def half_lattice(M):
    """Half-lattice representatives with ``|n|_inf <= M``.

    Rows are ordered by the shell ``|n|_inf`` and then lexicographically, so
    the list for ``M`` is a prefix of the list for any larger cutoff.  This is
    what makes per-mode random draws independent of the cutoff.

    Returns
    -------
    reps : (K, 3) int array
    flat_pos, flat_neg : (K,) int arrays
        Flat indices of ``n`` and ``-n`` into a ``(2M+1)^3`` array.
    """
    n1, n2, n3 = (a.ravel() for a in lattice(M))
    pos = (n1 > 0) | ((n1 == 0) & (n2 > 0)) | ((n1 == 0) & (n2 == 0) & (n3 > 0))
    idx = np.flatnonzero(pos)
    shell = np.maximum(np.maximum(np.abs(n1[idx]), np.abs(n2[idx])), np.abs(n3[idx]))
    order = np.lexsort((n3[idx], n2[idx], n1[idx], shell))
    idx = idx[order]
    reps = np.stack([n1[idx], n2[idx], n3[idx]], axis=1)
    size = 2 * M + 1
    flat_neg = np.ravel_multi_index(tuple((M - reps).T), (size,) * 3)
    return _readonly(reps), _readonly(idx), _readonly(flat_neg)


def is_power_of_two(G):
    return G >= 1 and (G & (G - 1)) == 0


def next_power_of_two(n):
    return 1 << max(0, int(np.ceil(np.log2(max(n, 1)))))


def default_resolution(M, oversample=2, minimum=32):
    """Power-of-two grid with ``oversample`` times the Nyquist count ``2M+2``."""
    return max(minimum, next_power_of_two(oversample * (2 * M + 2)))


def hermitian_residual(coeffs):
    """Largest ``|c(n) - conj(c(-n))|`` relative to the largest amplitude."""
    scale = np.max(np.abs(coeffs), initial=0.0)
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(coeffs - np.conj(coeffs[::-1, ::-1, ::-1]))) / scale)


def symmetrize(coeffs):
    """Project onto Hermitian-symmetric amplitudes."""
    return 0.5 * (coeffs + np.conj(coeffs[::-1, ::-1, ::-1]))


# ---------------------------------------------------------------------------
# transforms on raw arrays (leading batch axes allowed)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _fft_index(M, G):
    i = np.arange(-M, M + 1) % G
    return np.ix_(i, i, np.arange(0, M + 1))


def _check_grid(M, G):
    if not is_power_of_two(G):
        raise ValueError(f"resolution must be a power of two, got {G}")
    if G < 2 * M + 2:
        raise AliasingError(f"resolution {G} cannot carry cutoff {M}; need at least {2 * M + 2}")


def synthesize_array(coeffs, G):
    """Grid samples of Hermitian ``coeffs`` (shape ``(..., 2M+1, 2M+1, 2M+1)``)."""
    M = (coeffs.shape[-1] - 1) // 2
    _check_grid(M, G)
    batch = coeffs.shape[:-3]
    spec = np.zeros(batch + (G, G, G // 2 + 1), dtype=complex)
    i1, i2, i3 = _fft_index(M, G)
    spec[(...,) + (i1, i2, i3)] = coeffs[..., M:]
    return sfft.irfftn(spec, s=(G, G, G), axes=(-3, -2, -1), norm="forward")


def analyze_array(values, M):
    """Amplitudes ``|n|_inf <= M`` of real grid samples (shape ``(..., G, G, G)``)."""
    G = values.shape[-1]
    if 2 * M + 2 > G:
        raise AliasingError(f"cutoff {M} too large for resolution {G}; need cutoff <= {(G - 2) // 2}")
    spec = sfft.rfftn(values, axes=(-3, -2, -1), norm="forward")
    i1, i2, i3 = _fft_index(M, G)
    half = spec[(...,) + (i1, i2, i3)]
    out = np.empty(values.shape[:-3] + (2 * M + 1,) * 3, dtype=complex)
    out[..., M:] = half
    # the n3 = 0 plane comes out of the real transform Hermitian only up to
    # rounding; make it exact so that sums and differences stay real
    plane = out[..., M]
    out[..., M] = 0.5 * (plane + np.conj(plane[..., ::-1, ::-1]))
    rev = out[..., ::-1, ::-1, ::-1]
    out[..., :M] = np.conj(rev[..., :M])
    return out


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FourierField:
    """Finite real trigonometric series on T^3.

    Parameters
    ----------
    coeffs : complex array of shape ``(2M+1, 2M+1, 2M+1)``
        Exponential amplitudes indexed by ``n + M``.  Must be Hermitian.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 3 or len(set(c.shape)) != 1 or c.shape[0] % 2 != 1:
            raise ValueError(f"coefficient array must be a (2M+1)^3 cube, got shape {c.shape}")
        if hermitian_residual(c) > 1e-12:
            raise ComplexOutputError("coefficients are not Hermitian symmetric; field would be complex")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def cutoff(self):
        return (self.coeffs.shape[0] - 1) // 2

    # constructors ----------------------------------------------------------

    @classmethod
    def zeros(cls, M):
        return cls(np.zeros((2 * M + 1,) * 3, dtype=complex))

    @classmethod
    def constant(cls, value, M=0):
        c = np.zeros((2 * M + 1,) * 3, dtype=complex)
        c[M, M, M] = value
        return cls(c)

    @classmethod
    def from_modes(cls, M, cos=None, sin=None, const=0.0):
        """Build ``const + sum b cos(n.x) + sum c sin(n.x)`` from ``{n: amplitude}`` dicts.

        Modes given through a non-representative direction ``-n`` are
        folded accordingly (cos is even, sin is odd).
        """
        c = np.zeros((2 * M + 1,) * 3, dtype=complex)
        c[M, M, M] += const
        for table, phase in ((cos or {}, 1.0), (sin or {}, -1j)):
            for n, amp in table.items():
                n = tuple(int(k) for k in n)
                if max(abs(k) for k in n) > M:
                    raise ValueError(f"mode {n} exceeds cutoff {M}")
                if n == (0, 0, 0):
                    if phase == 1.0:
                        c[M, M, M] += amp
                    continue
                pos = tuple(k + M for k in n)
                neg = tuple(M - k for k in n)
                c[pos] += 0.5 * phase * amp
                c[neg] += np.conj(0.5 * phase * amp)
        return cls(c)

    @classmethod
    def from_real_basis(cls, M, a0, b, c):
        """Inverse of :meth:`real_basis`; ``b`` and ``c`` follow ``half_lattice(M)`` order."""
        _, flat_pos, flat_neg = half_lattice(M)
        amp = 0.5 * np.asarray(b, dtype=float) - 0.5j * np.asarray(c, dtype=float)
        out = np.zeros((2 * M + 1) ** 3, dtype=complex)
        out[flat_pos] = amp
        out[flat_neg] = np.conj(amp)
        out[(out.size - 1) // 2] = float(a0)
        return cls(out.reshape((2 * M + 1,) * 3))

    def real_basis(self):
        """``(a0, reps, b, c)`` with ``b_n = 2 Re c(n)`` and ``c_n = -2 Im c(n)``."""
        reps, flat_pos, _ = half_lattice(self.cutoff)
        flat = self.coeffs.ravel()
        amp = flat[flat_pos]
        return float(flat[(flat.size - 1) // 2].real), reps, 2.0 * amp.real, -2.0 * amp.imag

    def with_cutoff(self, M):
        """Zero-pad or truncate to a new cutoff."""
        old = self.cutoff
        if M == old:
            return self
        out = np.zeros((2 * M + 1,) * 3, dtype=complex)
        k = min(M, old)
        out[M - k:M + k + 1, M - k:M + k + 1, M - k:M + k + 1] = \
            self.coeffs[old - k:old + k + 1, old - k:old + k + 1, old - k:old + k + 1]
        return FourierField(out)

    # arithmetic --------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, FourierField):
            M = max(self.cutoff, other.cutoff)
            return self.with_cutoff(M).coeffs, other.with_cutoff(M).coeffs
        return NotImplemented

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return pair
        return FourierField(pair[0] + pair[1])

    def __sub__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return pair
        return FourierField(pair[0] - pair[1])

    def __mul__(self, scalar):
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented
        return FourierField(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return FourierField(-self.coeffs)

    def allclose(self, other, atol=1e-12, rtol=0.0):
        a, b = self._coerce(other)
        return bool(np.allclose(a, b, atol=atol, rtol=rtol))

    # snapshot I/O ------------------------------------------------------------

    def to_bytes(self, meta=None):
        """Snapshot: one ASCII header line, then little-endian ``(Re, Im)`` float64 pairs.

        ``meta`` adds ``key=value`` tokens (no whitespace) to the header.
        """
        tokens = [f"cutoff={self.cutoff}", "endian=little"]
        for k, v in (meta or {}).items():
            text = f"{k}={v}"
            if any(ch.isspace() for ch in text) or k in ("cutoff", "endian"):
                raise ValueError(f"invalid snapshot metadata {text!r}")
            tokens.append(text)
        header = SNAPSHOT_MAGIC + b" v1 " + " ".join(tokens).encode("ascii") + b"\n"
        data = np.empty(self.coeffs.size * 2, dtype="<f8")
        flat = self.coeffs.ravel()
        data[0::2] = flat.real
        data[1::2] = flat.imag
        return header + data.tobytes()

    @staticmethod
    def snapshot_meta(blob):
        """Header tokens of a snapshot as a ``{key: value}`` dict."""
        fields = io.BytesIO(blob).readline().split()
        if len(fields) < 4 or fields[0] != SNAPSHOT_MAGIC or fields[1] != b"v1":
            raise ValueError("not a field snapshot")
        try:
            meta = dict(f.decode("ascii").split("=", 1) for f in fields[2:])
        except ValueError as exc:
            raise ValueError("malformed snapshot header") from exc
        if "cutoff" not in meta or meta.get("endian") not in ("little", "big"):
            raise ValueError("snapshot header lacks cutoff or endianness")
        return meta

    @classmethod
    def from_bytes(cls, blob):
        stream = io.BytesIO(blob)
        stream.readline()
        meta = cls.snapshot_meta(blob)
        M = int(meta["cutoff"])
        dtype = {"little": "<f8", "big": ">f8"}[meta["endian"]]
        data = np.frombuffer(stream.read(), dtype=dtype)
        size = (2 * M + 1) ** 3
        if data.size != 2 * size:
            raise ValueError(f"snapshot body has {data.size} floats, expected {2 * size}")
        c = (data[0::2] + 1j * data[1::2]).reshape((2 * M + 1,) * 3)
        return cls(c)

    def save(self, path, meta=None):
        Path(path).write_bytes(self.to_bytes(meta))

    @classmethod
    def load(cls, path):
        return cls.from_bytes(Path(path).read_bytes())


@dataclass(frozen=True)
class GridValues:
    """Real samples on the uniform grid ``x_k = 2 pi k / G``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 3 or len(set(v.shape)) != 1:
            raise ValueError(f"grid values must be a G^3 cube, got shape {v.shape}")
        if not is_power_of_two(v.shape[0]):
            raise ValueError(f"resolution must be a power of two, got {v.shape[0]}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def resolution(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class CauchyPair:
    """Position/velocity data ``(u0, u1)`` with regularity label ``s`` (u1 is read in ``H^{s-1}``)."""

    u0: FourierField
    u1: FourierField
    s: float = 1.0

    def __post_init__(self):
        if self.u0.cutoff != self.u1.cutoff:
            M = max(self.u0.cutoff, self.u1.cutoff)
            object.__setattr__(self, "u0", self.u0.with_cutoff(M))
            object.__setattr__(self, "u1", self.u1.with_cutoff(M))

    @property
    def cutoff(self):
        return self.u0.cutoff

    @classmethod
    def zeros(cls, M, s=1.0):
        z = FourierField.zeros(M)
        return cls(z, z, s)

    def norm(self, sigma=None):
        """``||(u0, u1)||`` in ``H^sigma x H^(sigma-1)``; ``sigma`` defaults to ``s``."""
        sigma = self.s if sigma is None else sigma
        return float(np.hypot(sobolev_norm(self.u0, sigma), sobolev_norm(self.u1, sigma - 1.0)))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def synthesize(field, resolution):
    """Evaluate ``field`` on the ``resolution^3`` grid."""
    return GridValues(synthesize_array(field.coeffs, resolution))


def analyze(values, cutoff):
    """Exponential amplitudes of ``values`` up to ``cutoff``."""
    if isinstance(values, GridValues):
        values = values.values
    return FourierField(analyze_array(np.asarray(values, dtype=float), cutoff))


def evaluate_symbol(symbol, M):
    if callable(symbol):
        out = np.asarray(symbol(*lattice(M)), dtype=float)
        return np.broadcast_to(out, (2 * M + 1,) * 3)
    out = np.asarray(symbol, dtype=float)
    if out.shape != (2 * M + 1,) * 3:
        raise ValueError(f"symbol array has shape {out.shape}, expected {(2 * M + 1,) * 3}")
    return out


def apply_multiplier(field, symbol):
    """Fourier multiplier ``c(n) -> symbol(n) c(n)``.

    ``symbol`` is either a callable of the integer coordinate arrays
    ``(n1, n2, n3)`` or a precomputed lattice array.  It must be finite and
    even, otherwise a real field would be mapped to a complex one.
    """
    M = field.cutoff
    m = evaluate_symbol(symbol, M)
    if not np.all(np.isfinite(m)):
        raise ValueError("symbol is not finite on the retained lattice")
    scale = np.max(np.abs(m), initial=0.0)
    if scale and np.max(np.abs(m - m[::-1, ::-1, ::-1])) > 1e-14 * scale:
        raise ComplexOutputError("symbol is not even; output would not be real-valued")
    return FourierField(m * field.coeffs)


def bracket(sigma):
    """Symbol of ``<nabla>^sigma``."""
    return lambda n1, n2, n3: (1.0 + n1 * n1 + n2 * n2 + n3 * n3) ** (0.5 * sigma)


def abs_grad(n1, n2, n3):
    """Symbol of ``|nabla|``."""
    return np.sqrt(n1 * n1 + n2 * n2 + n3 * n3)


def neg_laplacian(n1, n2, n3):
    """Symbol of ``-Laplacian``."""
    return (n1 * n1 + n2 * n2 + n3 * n3).astype(float)


def sobolev_norm_array(coeffs, s):
    M = (coeffs.shape[-1] - 1) // 2
    w = japanese(M) ** (2.0 * s)
    return np.sqrt(VOLUME * np.sum(w * np.abs(coeffs) ** 2, axis=(-3, -2, -1)))


def sobolev_norm(field, s):
    """``||u||_{H^s}^2 = (2 pi)^3 sum <n>^{2s} |c(n)|^2``."""
    return float(sobolev_norm_array(field.coeffs, s))


def pair_energy_norm(v, vt):
    """``||(v, vt)||`` in ``H^1 x L^2``."""
    return float(np.hypot(sobolev_norm(v, 1.0), sobolev_norm(vt, 0.0)))


def profile_pair(M, s, delta=0.01, amplitude=1.0, velocity=True):
    """Cauchy data with cosine and sine coefficients ``amplitude <n>^{-(s+3/2+delta)}``.

    The velocity uses one derivative less, ``<n>^{-(s+1/2+delta)}``, so the
    pair lies in ``H^s x H^{s-1}`` but not in ``H^{s+delta'} x H^{s-1+delta'}``
    for ``delta' > delta`` as ``M -> inf``.  Zero modes are left empty.
    """
    reps, _, _ = half_lattice(M)
    jb = np.sqrt(1.0 + np.sum(reps.astype(float) ** 2, axis=1))
    w0 = amplitude * jb ** (-(s + 1.5 + delta))
    u0 = FourierField.from_real_basis(M, 0.0, w0, w0)
    if velocity:
        w1 = amplitude * jb ** (-(s + 0.5 + delta))
        u1 = FourierField.from_real_basis(M, 0.0, w1, w1)
    else:
        u1 = FourierField.zeros(M)
    return CauchyPair(u0, u1, s)
