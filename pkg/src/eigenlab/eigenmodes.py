"""Closed-form eigenfunction families on the model surfaces.

Sphere modes of degree k (eigenvalue k(k+1)): the rotation-invariant
family evaluated by two independent routes (an oscillatory circle integral
and the Legendre three-term recurrence), the equator-concentrating
top-order family c_k sin^k r e^{ik theta}, and seeded random combinations
of a full degree-k basis. Torus plane waves complete the set. Everything
is normalized to unit L^2 over the surface.

High-degree powers (sin^k, modulus^k) are evaluated in the log domain, so
k up to several thousand is safe in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureTooCoarse, Underresolved
from .geometry import (
    TWOPI,
    ManifoldModel,
    flat_torus,
    require_chart,
    round_sphere,
)

QUAD_TOL = 1e-8


def norm_zonal(k):
    """Prefactor making P_k(cos r) unit-L^2 on the sphere: sqrt((2k+1)/4pi)."""
    return math.sqrt((2 * k + 1) / (4 * np.pi))


def sphere_lambda(k):
    """Spectral parameter of degree-k sphere modes: lambda^2 = k(k+1)."""
    return math.sqrt(k * (k + 1.0))


# ---------------------------------------------------------------------------
# zonal routes


def eval_zonal_integral(k, r, nquad):
    """Unit-L^2 zonal value by the oscillatory circle integral.

    norm * (1/2pi) Int_0^{2pi} (cos r + i sin r cos tau)^k dtau, with the
    k-th power taken as exp(k log w) to avoid modulus under/overflow. The
    integrand is a trig polynomial of degree k, so the periodic midpoint
    rule with nquad > k nodes is exact; the precondition enforces margin.
    """
    if k < 0 or k != int(k):
        raise ValueError("degree k must be a nonnegative integer")
    if nquad < 4 * k + 16:
        raise Underresolved(f"nquad={nquad} below 4k+16={4 * k + 16}")
    r = float(r)
    tau = (np.arange(nquad) + 0.5) * (TWOPI / nquad)
    w = np.cos(r) + 1j * np.sin(r) * np.cos(tau)
    if k == 0:
        vals = np.ones_like(w)
    else:
        vals = np.zeros_like(w)
        nz = w != 0
        vals[nz] = np.exp(k * np.log(w[nz]))
    mean = vals.mean()
    if abs(mean.imag) > 1e-12 * max(1.0, abs(mean.real)):
        raise Underresolved(f"imaginary residue {mean.imag:.2e} above 1e-12")
    return norm_zonal(k) * mean.real


def eval_zonal_legendre(k, r):
    """Unit-L^2 zonal value via the Legendre recurrence; vectorized in r.

    The upward three-term recurrence is stable in k, so this is the fast
    reference route; it must agree with the integral route to 1e-8.
    """
    x = np.cos(np.asarray(r, dtype=float))
    return norm_zonal(k) * legendre_pk(k, x)


def legendre_pk(k, x):
    """P_k(x) by the upward three-term recurrence, vectorized in x."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if k == 0:
        return p_prev
    p = x.copy()
    for j in range(1, k):
        p, p_prev = ((2 * j + 1) * x * p - j * p_prev) / (j + 1), p
    return p


# ---------------------------------------------------------------------------
# highest weight


@lru_cache(maxsize=None)
def _hw_log_norm(k):
    """log c_k with c_k the unit-L^2 prefactor of sin^k r e^{ik theta}.

    Numerical route: Gauss-Legendre in x = cos r integrates the degree-2k
    polynomial (1-x^2)^k exactly with k+8 nodes.
    """
    x, w = np.polynomial.legendre.leggauss(k + 8)
    val = TWOPI * float(np.sum(w * (1.0 - x**2) ** k))
    return -0.5 * math.log(val)


def hw_log_norm_gamma(k):
    """Closed-form log c_k from the beta integral of sin^{2k+1}; test oracle."""
    return -0.5 * (
        math.log(2 * np.pi) + 0.5 * math.log(np.pi) + math.lgamma(k + 1) - math.lgamma(k + 1.5)
    )


def eval_highest_weight(k, x, log_norm=None):
    """c_k sin^k(r) e^{ik theta}; log-domain in the radial factor."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    require_chart(round_sphere(), x, closed=True)
    r, th = x[..., 0], x[..., 1]
    if log_norm is None:
        log_norm = _hw_log_norm(k)
    sr = np.sin(r)
    mag = np.zeros_like(sr)
    pos = sr > 0
    if k == 0:
        mag[:] = math.exp(log_norm)
    else:
        mag[pos] = np.exp(log_norm + k * np.log(sr[pos]))
    return mag * np.exp(1j * k * th)


# ---------------------------------------------------------------------------
# torus waves


def eval_torus_wave(kvec, x):
    """(2pi)^{-1} e^{i <kvec, x>}: exact flat eigenfunction, |u| constant."""
    kvec = np.asarray(kvec)
    if kvec.shape != (2,) or np.all(kvec == 0):
        raise ValueError("kvec must be a nonzero integer 2-vector")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.exp(1j * (x @ kvec.astype(float))) / TWOPI


# ---------------------------------------------------------------------------
# random degree-k combinations


def assoc_legendre_normalized(k, x):
    """Unit-normalized associated Legendre values P~_k^m(x), m = 0..k.

    Row m equals the colatitude part of the orthonormal degree-k basis with
    the Condon-Shortley sign, so sum_m |row_m|^2-type identities hold. The
    classic m-then-l recurrence; rows with large m underflow harmlessly to
    zero near the poles. Returns shape (k+1, len(x)).
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x**2, 0.0, None))
    out = np.empty((k + 1, x.size))
    pmm = np.full(x.size, math.sqrt(1.0 / (4 * np.pi)))
    for m in range(k + 1):
        if m > 0:
            pmm = -math.sqrt((2 * m + 1) / (2.0 * m)) * s * pmm
        if m == k:
            out[m] = pmm
            break
        p_prev = pmm
        p = math.sqrt(2 * m + 3) * x * pmm
        for ell in range(m + 2, k + 1):
            a = math.sqrt((4 * ell**2 - 1.0) / (ell**2 - m**2))
            b = math.sqrt(((ell - 1.0) ** 2 - m**2) / (4.0 * (ell - 1) ** 2 - 1.0))
            p, p_prev = a * (x * p - b * p_prev), p
        out[m] = p
    return out


def random_wave_coeffs(k, seed):
    """Unit-norm complex Gaussian coefficients c_m, m = -k..k, seeded."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(2 * k + 1) + 1j * rng.standard_normal(2 * k + 1)
    return c / np.linalg.norm(c)


def eval_random_wave(k, seed, x):
    """Seeded unit-L^2 random combination of the degree-k basis."""
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    c = random_wave_coeffs(k, seed)
    pk = assoc_legendre_normalized(k, np.cos(x[..., 0]))
    th = x[..., 1]
    # m = 0 term plus conjugate-paired m > 0 terms
    u = c[k] * pk[0].astype(complex)
    for m in range(1, k + 1):
        e = np.exp(1j * m * th)
        u += pk[m] * (c[k + m] * e + c[k - m] * ((-1) ** m) * np.conj(e))
    return u


def random_wave_rows(k, seed, r_values, ntheta):
    """Product-grid evaluation on uniform theta via FFT; rows indexed by r.

    Requires ntheta >= 2k + 2. Returns shape (len(r_values), ntheta) for
    theta_j = 2 pi j / ntheta.
    """
    if ntheta < 2 * k + 2:
        raise Underresolved("ntheta must exceed the angular bandwidth 2k+1")
    c = random_wave_coeffs(k, seed)
    pk = assoc_legendre_normalized(k, np.cos(np.asarray(r_values, dtype=float)))
    nr = pk.shape[1]
    spec = np.zeros((nr, ntheta), dtype=complex)
    spec[:, 0] = c[k] * pk[0]
    for m in range(1, k + 1):
        spec[:, m] = c[k + m] * pk[m]
        spec[:, ntheta - m] = c[k - m] * ((-1) ** m) * pk[m]
    return np.fft.ifft(spec, axis=1) * ntheta


# ---------------------------------------------------------------------------
# family objects


class Eigenfunction:
    """Closed-form mode with spectral parameter lam and h = 1/lam.

    values(X) evaluates at chart points, X shape (..., 2); norm_constant
    rescales the analytically unit-normalized reference formula. The two
    *_invariant_modulus flags mark symmetry of |<u, coherent state>| under
    rotations/translations (true for equivariant families), which lets the
    phase-space lift evaluate one symmetry orbit and broadcast.
    """

    model: ManifoldModel
    lam: float
    h: float
    norm_constant: float
    tag: str
    rotation_invariant_modulus = False
    translation_invariant_modulus = False

    def values(self, X):
        raise NotImplementedError

    def rescaled(self, factor):
        import copy

        out = copy.copy(self)
        out.norm_constant = self.norm_constant * factor
        return out

    def __call__(self, X):
        return self.values(X)


class Zonal(Eigenfunction):
    """Rotation-invariant degree-k sphere mode; peaks at the poles."""

    tag = "zonal"
    rotation_invariant_modulus = True

    def __init__(self, k, norm_constant=1.0):
        self.k = int(k)
        self.model = round_sphere()
        self.lam = sphere_lambda(k)
        self.h = 1.0 / self.lam if self.lam else np.inf
        self.norm_constant = norm_constant

    def values(self, X):
        X = np.asarray(X, dtype=float)
        vals = eval_zonal_legendre(self.k, X[..., 0])
        return self.norm_constant * vals.astype(complex)

    def radial_profile(self, r_values):
        return self.norm_constant * eval_zonal_legendre(self.k, r_values)


class HighestWeight(Eigenfunction):
    """Top angular order degree-k mode, concentrating on the equator."""

    tag = "highest-weight"
    rotation_invariant_modulus = True

    def __init__(self, k, norm_constant=1.0):
        self.k = int(k)
        self.model = round_sphere()
        self.lam = sphere_lambda(k)
        self.h = 1.0 / self.lam if self.lam else np.inf
        self.norm_constant = norm_constant

    def values(self, X):
        return self.norm_constant * eval_highest_weight(self.k, X)


class TorusWave(Eigenfunction):
    """Plane wave on the flat torus with integer wavevector kvec."""

    tag = "torus-wave"
    translation_invariant_modulus = True

    def __init__(self, kvec, norm_constant=1.0):
        self.kvec = np.asarray(kvec, dtype=int)
        if self.kvec.shape != (2,) or np.all(self.kvec == 0):
            raise ValueError("kvec must be a nonzero integer 2-vector")
        self.model = flat_torus()
        self.lam = float(np.linalg.norm(self.kvec))
        self.h = 1.0 / self.lam
        self.norm_constant = norm_constant

    def values(self, X):
        return self.norm_constant * eval_torus_wave(self.kvec, X)


class SphereRandomWave(Eigenfunction):
    """Seeded random unit combination of the full degree-k sphere basis."""

    tag = "random-wave"

    def __init__(self, k, seed, norm_constant=1.0):
        self.k = int(k)
        self.seed = int(seed)
        self.model = round_sphere()
        self.lam = sphere_lambda(k)
        self.h = 1.0 / self.lam
        self.norm_constant = norm_constant

    def values(self, X):
        return self.norm_constant * eval_random_wave(self.k, self.seed, X)

    def rows(self, r_values, ntheta):
        return self.norm_constant * random_wave_rows(self.k, self.seed, r_values, ntheta)


# ---------------------------------------------------------------------------
# quadrature grids


@dataclass
class EvalGrid:
    """Flattened quadrature grid with optional product-axis metadata."""

    model: ManifoldModel
    nodes: np.ndarray  # (N, 2)
    weights: np.ndarray  # (N,)
    axis0: np.ndarray | None = None
    axis1: np.ndarray | None = None

    def total_weight(self):
        return float(np.sum(self.weights))


def sphere_gauss_grid(nr, ntheta):
    """Gauss-Legendre in cos r crossed with uniform theta; total weight 4pi.

    Exact for integrands polynomial in cos r up to degree 2nr-1 and
    bandlimited in theta below ntheta, which covers |u|^2 for all sphere
    families of degree k when nr >= k+1 and ntheta > 2k+1.
    """
    x, w = np.polynomial.legendre.leggauss(nr)
    r = np.arccos(x[::-1])
    wr = w[::-1]
    th = (np.arange(ntheta) + 0.5) * (TWOPI / ntheta)
    R, TH = np.meshgrid(r, th, indexing="ij")
    W = np.broadcast_to((wr * (TWOPI / ntheta))[:, None], R.shape)
    nodes = np.stack([R.ravel(), TH.ravel()], axis=-1)
    return EvalGrid(round_sphere(), nodes, W.ravel().copy(), axis0=r, axis1=th)


def torus_grid(n):
    """Uniform midpoint lattice on [0, 2pi)^2; total weight (2pi)^2."""
    ax = (np.arange(n) + 0.5) * (TWOPI / n)
    X1, X2 = np.meshgrid(ax, ax, indexing="ij")
    nodes = np.stack([X1.ravel(), X2.ravel()], axis=-1)
    w = np.full(n * n, (TWOPI / n) ** 2)
    return EvalGrid(flat_torus(), nodes, w, axis0=ax, axis1=ax)


def grid_for(model, nr=None, ntheta=None, n=None):
    if model.kind == "sphere":
        return sphere_gauss_grid(nr or 256, ntheta or 64)
    return torus_grid(n or 256)


def l2_norm(u: Eigenfunction, grid: EvalGrid) -> float:
    """L^2 norm of u over the grid, using the product FFT route if present."""
    if isinstance(u, SphereRandomWave) and grid.axis0 is not None:
        rows = u.rows(grid.axis0, len(grid.axis1))
        w = grid.weights.reshape(rows.shape)
        return math.sqrt(float(np.sum(w * np.abs(rows) ** 2)))
    vals = u.values(grid.nodes)
    return math.sqrt(float(np.sum(grid.weights * np.abs(vals) ** 2)))


def _refined(grid: EvalGrid) -> EvalGrid:
    if grid.model.kind == "sphere":
        return sphere_gauss_grid(2 * len(grid.axis0), 2 * len(grid.axis1))
    return torus_grid(2 * len(grid.axis0))


def l2_normalize(u: Eigenfunction, grid: EvalGrid, quad_tol=QUAD_TOL) -> Eigenfunction:
    """Rescale u to unit L^2 norm; Cauchy-checks the quadrature first."""
    n0 = l2_norm(u, grid)
    n1 = l2_norm(u, _refined(grid))
    if abs(n1 - n0) > quad_tol * max(1.0, n1):
        raise QuadratureTooCoarse(f"norm moved {abs(n1 - n0):.2e} under refinement")
    return u.rescaled(1.0 / n1)
