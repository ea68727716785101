"""Spherical-harmonic and special-function kernel.

Real and complex orthonormal spherical harmonics, associated Legendre
functions, spherical Bessel/Hankel functions, exact Wigner 3-j symbols,
and coefficient rotation matrices. Everything here is a pure function of
its arguments and safe to call concurrently.

Conventions
-----------
* Angles passed to the low-level basis functions are (colatitude, azimuth)
  in radians; colatitude 0 is the +z pole.
* ``assoc_legendre`` excludes the Condon-Shortley phase. The complex basis
  carries the phase explicitly, so ``complex_sh`` agrees with the common
  physics convention and satisfies Y_n^{-m} = (-1)^m conj(Y_n^m).
* The real basis is the orthonormal cos/sin (N3D-style) basis: no
  Condon-Shortley phase anywhere.
* Coefficient vectors are ordered by index n*(n+1)+m (all degrees of order
  0, then order 1, ...).
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "num_coeffs",
    "max_order",
    "order_degree_vectors",
    "coeff_index",
    "assoc_legendre",
    "complex_sh",
    "complex_sh_matrix",
    "real_sh",
    "real_sh_matrix",
    "sph_bessel_j",
    "sph_bessel_y",
    "sph_hankel",
    "wigner3j",
    "truncation_order",
    "wavenumber",
    "wigner_little_d",
    "complex_sh_rotation",
    "real_sh_rotation",
]

SPEED_OF_SOUND = 343.0


def num_coeffs(n_max):
    """Number of coefficients of an expansion truncated at order ``n_max``."""
    return (n_max + 1) ** 2


def max_order(n_coeffs):
    """Inverse of :func:`num_coeffs`; raises if ``n_coeffs`` is not square."""
    order = math.isqrt(n_coeffs) - 1
    if num_coeffs(order) != n_coeffs:
        raise ValueError(f"{n_coeffs} is not a square coefficient count")
    return order


def order_degree_vectors(n_max):
    """Arrays (order n, degree m) for every coefficient index up to n_max."""
    n = np.repeat(np.arange(n_max + 1), 2 * np.arange(n_max + 1) + 1)
    m = np.concatenate([np.arange(-k, k + 1) for k in range(n_max + 1)])
    return n, m


def coeff_index(n, m):
    """Flat coefficient index of order n, degree m."""
    if abs(m) > n:
        raise ValueError(f"invalid SH index (n={n}, m={m})")
    return n * (n + 1) + m


def wavenumber(freq_hz, c=SPEED_OF_SOUND):
    """k = 2*pi*f/c in rad/m."""
    if freq_hz <= 0 or c <= 0:
        raise ValueError("frequency and speed of sound must be positive")
    return 2.0 * math.pi * freq_hz / c


def truncation_order(k, region_radius):
    """Expansion order bound ceil(k*e*R/2) for a source region of radius R."""
    if k <= 0 or region_radius <= 0:
        raise ValueError("wave number and radius must be positive")
    return int(math.ceil(k * math.e * region_radius / 2.0))


# ---------------------------------------------------------------------------
# Associated Legendre functions
# ---------------------------------------------------------------------------

_UNNORM_LEGENDRE_MAX = 15


def assoc_legendre(n, m, x):
    """Unnormalized associated Legendre L_n^m(x), no Condon-Shortley phase.

    Exposed for n <= 15 only; factorial growth makes the unnormalized
    values useless far above that, and internal code always works with the
    normalized table.
    """
    if m < 0 or m > n:
        raise ValueError(f"require 0 <= m <= n, got n={n}, m={m}")
    if n > _UNNORM_LEGENDRE_MAX:
        raise ValueError(f"unnormalized Legendre limited to n <= {_UNNORM_LEGENDRE_MAX}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("argument of assoc_legendre must lie in [-1, 1]")
    s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    # L_m^m = (2m-1)!! * (1-x^2)^(m/2)
    pmm = np.ones_like(x)
    for i in range(1, m + 1):
        pmm = pmm * (2 * i - 1) * s
    if n == m:
        return pmm if pmm.ndim else float(pmm)
    pmm1 = x * (2 * m + 1) * pmm
    if n == m + 1:
        return pmm1 if pmm1.ndim else float(pmm1)
    for ell in range(m + 2, n + 1):
        pmm, pmm1 = pmm1, (x * (2 * ell - 1) * pmm1 - (ell + m - 1) * pmm) / (ell - m)
    return pmm1 if pmm1.ndim else float(pmm1)


def _norm_legendre_table(n_max, x):
    """Fully normalized Legendre values, shape (npts, (n_max+1)(n_max+2)/2).

    Entry (n, m) at column n*(n+1)/2 + m holds
    sqrt((2n+1)/(4pi) * (n-m)!/(n+m)!) * L_n^m(x), no Condon-Shortley
    phase. Stable to orders in the hundreds.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    ncol = (n_max + 1) * (n_max + 2) // 2
    out = np.empty((x.size, ncol))

    def col(n, m):
        return n * (n + 1) // 2 + m

    out[:, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, n_max + 1):
        out[:, col(m, m)] = math.sqrt((2 * m + 1) / (2.0 * m)) * s * out[:, col(m - 1, m - 1)]
    for m in range(0, n_max):
        out[:, col(m + 1, m)] = math.sqrt(2 * m + 3) * x * out[:, col(m, m)]
    for m in range(0, n_max + 1):
        for n in range(m + 2, n_max + 1):
            a = math.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
            b = math.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
            out[:, col(n, m)] = a * (x * out[:, col(n - 1, m)] - b * out[:, col(n - 2, m)])
    return out


# ---------------------------------------------------------------------------
# Spherical harmonics
# ---------------------------------------------------------------------------


def complex_sh_matrix(n_max, colatitude, azimuth):
    """Complex SH basis evaluated at points, shape (npts, (n_max+1)^2)."""
    colat = np.atleast_1d(np.asarray(colatitude, dtype=float))
    az = np.atleast_1d(np.asarray(azimuth, dtype=float))
    if colat.shape != az.shape:
        raise ValueError("colatitude and azimuth must have matching shapes")
    leg = _norm_legendre_table(n_max, np.cos(colat))
    out = np.empty((colat.size, num_coeffs(n_max)), dtype=complex)
    phase = np.exp(1j * np.outer(az, np.arange(n_max + 1)))
    for n in range(n_max + 1):
        base = n * (n + 1)
        lcol = n * (n + 1) // 2
        out[:, base] = leg[:, lcol]
        for m in range(1, n + 1):
            pos = ((-1) ** m) * leg[:, lcol + m] * phase[:, m]
            out[:, base + m] = pos
            out[:, base - m] = ((-1) ** m) * np.conj(pos)
    return out


def complex_sh(n, m, colatitude, azimuth):
    """Single orthonormal complex SH value (Condon-Shortley convention)."""
    if abs(m) > n:
        raise ValueError(f"invalid SH index (n={n}, m={m})")
    mat = complex_sh_matrix(n, colatitude, azimuth)
    val = mat[:, coeff_index(n, m)]
    return val if np.ndim(colatitude) else complex(val[0])


def real_sh_matrix(n_max, colatitude, azimuth):
    """Real orthonormal SH basis at points, shape (npts, (n_max+1)^2).

    sin(|m| az) branch for m < 0, cos(m az) for m > 0, both carrying the
    sqrt(2) factor; no Condon-Shortley phase.
    """
    colat = np.atleast_1d(np.asarray(colatitude, dtype=float))
    az = np.atleast_1d(np.asarray(azimuth, dtype=float))
    if colat.shape != az.shape:
        raise ValueError("colatitude and azimuth must have matching shapes")
    leg = _norm_legendre_table(n_max, np.cos(colat))
    out = np.empty((colat.size, num_coeffs(n_max)))
    marg = np.outer(az, np.arange(n_max + 1))
    cosm, sinm = np.cos(marg), np.sin(marg)
    sqrt2 = math.sqrt(2.0)
    for n in range(n_max + 1):
        base = n * (n + 1)
        lcol = n * (n + 1) // 2
        out[:, base] = leg[:, lcol]
        for m in range(1, n + 1):
            out[:, base + m] = sqrt2 * leg[:, lcol + m] * cosm[:, m]
            out[:, base - m] = sqrt2 * leg[:, lcol + m] * sinm[:, m]
    return out


def real_sh(n, m, colatitude, azimuth):
    """Single real orthonormal SH value."""
    if abs(m) > n:
        raise ValueError(f"invalid SH index (n={n}, m={m})")
    mat = real_sh_matrix(n, colatitude, azimuth)
    val = mat[:, coeff_index(n, m)]
    return val if np.ndim(colatitude) else float(val[0])


# ---------------------------------------------------------------------------
# Spherical Bessel / Hankel functions
# ---------------------------------------------------------------------------


def sph_bessel_j(n, x):
    """Spherical Bessel function of the first kind j_n(x), x >= 0.

    Downward (Miller) recurrence, normalized against j_0 or j_1; stable for
    x < n where upward recurrence loses all accuracy.
    """
    if n < 0:
        raise ValueError("order must be >= 0")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("argument of sph_bessel_j must be >= 0")
    out = np.empty_like(x)

    tiny = x < 1e-12
    if np.any(tiny):
        out[tiny] = 1.0 if n == 0 else 0.0

    live = ~tiny
    if np.any(live):
        xv = x[live]
        j0 = np.sin(xv) / xv
        if n == 0:
            out[live] = j0
        else:
            j1 = np.sin(xv) / xv**2 - np.cos(xv) / xv
            start = n + 24 + int(np.ceil(np.max(xv)))
            jp = np.zeros_like(xv)          # j_{l+1} (unnormalized)
            jc = np.full_like(xv, 1e-30)    # j_l
            target = np.zeros_like(xv)
            t0 = np.zeros_like(xv)
            t1 = np.zeros_like(xv)
            for ell in range(start, -1, -1):
                jm = (2 * ell + 3) / xv * jc - jp
                jp, jc = jc, jm
                big = np.abs(jc) > 1e250
                if np.any(big):
                    jp[big] *= 1e-250
                    jc[big] *= 1e-250
                    target[big] *= 1e-250
                    t0[big] *= 1e-250
                    t1[big] *= 1e-250
                if ell == n:
                    target = jc.copy()
                if ell == 1:
                    t1 = jc.copy()
                if ell == 0:
                    t0 = jc.copy()
            # normalize against whichever reference is better conditioned
            use0 = np.abs(j0) >= np.abs(j1)
            norm = np.where(use0, j0 / np.where(t0 != 0, t0, 1.0),
                            j1 / np.where(t1 != 0, t1, 1.0))
            out[live] = target * norm
    return float(out[0]) if scalar else out


def sph_bessel_y(n, x):
    """Spherical Bessel function of the second kind y_n(x), x > 0 (upward)."""
    if n < 0:
        raise ValueError("order must be >= 0")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x <= 0):
        raise ValueError("argument of sph_bessel_y must be > 0")
    y0 = -np.cos(x) / x
    if n == 0:
        return float(y0[0]) if scalar else y0
    y1 = -np.cos(x) / x**2 - np.sin(x) / x
    for ell in range(1, n):
        y0, y1 = y1, (2 * ell + 1) / x * y1 - y0
    return float(y1[0]) if scalar else y1


def sph_hankel(n, x):
    """First-kind spherical Hankel h_n(x) = j_n(x) + i*y_n(x), x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(np.atleast_1d(x) <= 0):
        raise ValueError("sph_hankel is singular at x <= 0")
    val = sph_bessel_j(n, x) + 1j * sph_bessel_y(n, x)
    return complex(val) if np.ndim(x) == 0 else val


def sph_hankel_table(n_max, x):
    """h_0..h_{n_max} at points x, shape (npts, n_max+1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.size, n_max + 1), dtype=complex)
    for n in range(n_max + 1):
        out[:, n] = sph_hankel(n, x)
    return out


# ---------------------------------------------------------------------------
# Wigner 3-j
# ---------------------------------------------------------------------------


@lru_cache(maxsize=200_000)
def _wigner3j_cached(j1, j2, j3, m1, m2, m3):
    if m1 + m2 + m3 != 0:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    if j3 < abs(j1 - j2) or j3 > j1 + j2:
        return 0.0
    f = math.factorial
    # Racah single-sum form, evaluated with exact integer arithmetic; the
    # square root is taken only after assembling the exact rational value,
    # which avoids cancellation in the alternating sum.
    pref2 = Fraction(
        f(j1 + j2 - j3) * f(j1 - j2 + j3) * f(-j1 + j2 + j3)
        * f(j1 + m1) * f(j1 - m1) * f(j2 + m2) * f(j2 - m2)
        * f(j3 + m3) * f(j3 - m3),
        f(j1 + j2 + j3 + 1),
    )
    ssum = Fraction(0)
    k_lo = max(0, j2 - j3 - m1, j1 - j3 + m2)
    k_hi = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    for k in range(k_lo, k_hi + 1):
        den = (
            f(k) * f(j1 + j2 - j3 - k) * f(j1 - m1 - k) * f(j2 + m2 - k)
            * f(j3 - j2 + m1 + k) * f(j3 - j1 - m2 + k)
        )
        ssum += Fraction((-1) ** k, den)
    if ssum == 0:
        return 0.0
    sign = (-1) ** (j1 - j2 - m3) * (1 if ssum > 0 else -1)
    return sign * math.sqrt(float(pref2 * ssum * ssum))


def wigner3j(j1, j2, j3, m1, m2, m3):
    """Wigner 3-j symbol for integer arguments, exact within float rounding.

    Selection-rule violations return 0 rather than raising.
    """
    args = (j1, j2, j3, m1, m2, m3)
    if any(a != int(a) for a in args):
        raise ValueError("only integer 3-j symbols are supported")
    if j1 < 0 or j2 < 0 or j3 < 0:
        raise ValueError("angular momenta must be >= 0")
    return _wigner3j_cached(*(int(a) for a in args))


# ---------------------------------------------------------------------------
# Rotations of SH coefficient vectors
# ---------------------------------------------------------------------------


def wigner_little_d(n, beta):
    """Wigner d-matrix d^n_{m'm}(beta), shape (2n+1, 2n+1), exact factorials."""
    f = math.factorial
    c, s = math.cos(beta / 2.0), math.sin(beta / 2.0)
    d = np.zeros((2 * n + 1, 2 * n + 1))
    for mp in range(-n, n + 1):
        for m in range(-n, n + 1):
            pre = math.sqrt(f(n + mp) * f(n - mp) * f(n + m) * f(n - m))
            k_lo = max(0, m - mp)
            k_hi = min(n + m, n - mp)
            acc = 0.0
            for k in range(k_lo, k_hi + 1):
                num = (-1) ** (k + mp - m)
                den = f(n + m - k) * f(k) * f(n - mp - k) * f(k + mp - m)
                acc += num / den * c ** (2 * n + m - mp - 2 * k) * s ** (mp - m + 2 * k)
            d[mp + n, m + n] = pre * acc
    return d


def _zyz_from_matrix(rot):
    """Euler angles (alpha, beta, gamma) with rot = Rz(alpha)Ry(beta)Rz(gamma)."""
    r22 = min(1.0, max(-1.0, rot[2, 2]))
    beta = math.acos(r22)
    if abs(r22) > 1.0 - 1e-12:
        # gimbal: fold everything into alpha
        alpha = math.atan2(rot[1, 0], rot[0, 0]) * (1.0 if r22 > 0 else -1.0)
        return alpha, (0.0 if r22 > 0 else math.pi), 0.0
    alpha = math.atan2(rot[1, 2], rot[0, 2])
    gamma = math.atan2(rot[2, 1], -rot[2, 0])
    return alpha, beta, gamma


def complex_sh_rotation(n_max, rot):
    """Block-diagonal matrix rotating complex SH coefficients.

    For a = coefficients of f, ``complex_sh_rotation(n, R) @ a`` gives the
    coefficients of the rotated function f(R^{-1} x).
    """
    alpha, beta, gamma = _zyz_from_matrix(np.asarray(rot, dtype=float))
    size = num_coeffs(n_max)
    out = np.zeros((size, size), dtype=complex)
    for n in range(n_max + 1):
        d = wigner_little_d(n, beta)
        ms = np.arange(-n, n + 1)
        block = np.exp(-1j * np.outer(ms, [1]) * alpha) * d * np.exp(-1j * ms * gamma)
        base = n * n
        out[base:base + 2 * n + 1, base:base + 2 * n + 1] = block
    return out


def _real_from_complex_block(n):
    """Unitary U with realY = U @ complexY over one order block."""
    size = 2 * n + 1
    u = np.zeros((size, size), dtype=complex)
    rt2 = 1.0 / math.sqrt(2.0)
    u[n, n] = 1.0
    for m in range(1, n + 1):
        # real index n+m (cos branch), n-m (sin branch); complex index n+m / n-m
        u[n + m, n + m] = rt2 * (-1) ** m
        u[n + m, n - m] = rt2
        u[n - m, n + m] = rt2 * (-1) ** m * -1j
        u[n - m, n - m] = rt2 * 1j
    return u


def real_sh_rotation(n_max, rot):
    """Block-diagonal real matrix rotating real SH coefficient vectors.

    Same contract as :func:`complex_sh_rotation` but for the real basis;
    the result is real to rounding and is returned as float.
    """
    size = num_coeffs(n_max)
    out = np.zeros((size, size))
    cplx = complex_sh_rotation(n_max, rot)
    for n in range(n_max + 1):
        base = n * n
        sl = slice(base, base + 2 * n + 1)
        u = _real_from_complex_block(n)
        # real coeffs map to complex ones through U^T, back through conj(U)
        block = np.conj(u) @ cplx[sl, sl] @ u.T
        out[sl, sl] = np.real(block)
    return out
