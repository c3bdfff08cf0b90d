"""Numerical defect measures: coherent-state lifts on the unit cosphere bundle.

A PhaseGrid discretizes S*M over a chart window as base cells x fiber
angles, with exact per-cell Liouville measure. husimi_lift pairs an
eigenfunction against Gaussian coherent states centered on the cell
centers (width sqrt(width*h) in geodesic normal coordinates, plane-wave
phase xi0/h) and returns the normalized |<u, phi>|^2 cell measure, a
genuine probability vector. Limit measures of the model families are
available in closed form for comparison, plus transport/TV diagnostics.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySupport, ResolutionMismatch, UnsupportedModel
from .geometry import (
    SPHERE,
    TORUS,
    TWOPI,
    ManifoldModel,
    flat_torus,
    phase_embed,
    round_sphere,
    sphere_embed,
)

MASS_TOL = 1e-6


def max_workers():
    """Worker cap for cell-parallel loops, from EIGENLAB_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("EIGENLAB_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# phase grid


@dataclass
class PhaseGrid:
    """Product discretization of S*M over a chart window.

    axis0/axis1 are base-cell centers (r/theta on the sphere, x1/x2 on the
    torus); fiber holds fiber-angle cell centers. m0 carries the exact
    per-band base measure in the axis0 direction, so the total cell
    measure telescopes to the Liouville measure of the covered window.
    Cells flatten in C order (i0, i1, ifiber).
    """

    model: ManifoldModel
    axis0: np.ndarray
    axis1: np.ndarray
    fiber: np.ndarray
    m0: np.ndarray  # per-axis0 exact base measure factor
    m1: float  # axis1 measure factor
    mf: float  # fiber measure factor
    window: tuple = ()
    _embedded: np.ndarray | None = field(default=None, repr=False)
    _tree: cKDTree | None = field(default=None, repr=False)

    @property
    def shape(self):
        return (len(self.axis0), len(self.axis1), len(self.fiber))

    @property
    def ncells(self):
        return len(self.axis0) * len(self.axis1) * len(self.fiber)

    def cell_measure(self):
        """Liouville measure per cell, flattened; sums to the window measure."""
        m = self.m0[:, None, None] * self.m1 * self.mf
        return np.broadcast_to(m, self.shape).ravel()

    def cell_coords(self):
        """Base points X (N,2) and unit covectors XI (N,2) at cell centers."""
        A0, A1, AF = np.meshgrid(self.axis0, self.axis1, self.fiber, indexing="ij")
        X = np.stack([A0.ravel(), A1.ravel()], axis=-1)
        ca, sa = np.cos(AF.ravel()), np.sin(AF.ravel())
        if self.model.kind == SPHERE:
            XI = np.stack([ca, sa * np.sin(A0.ravel())], axis=-1)
        else:
            XI = np.stack([ca, sa], axis=-1)
        return X, XI

    def embedded(self):
        if self._embedded is None:
            X, XI = self.cell_coords()
            self._embedded = phase_embed(self.model, X, XI)
        return self._embedded

    def embedded_at(self, indices):
        """Phase embedding of selected flat cell indices, without building
        the full-grid embedding (large support grids stay cheap)."""
        if self._embedded is not None:
            return self._embedded[indices]
        n0, n1, nf = self.shape
        i0, rem = np.divmod(np.asarray(indices), n1 * nf)
        i1, i2 = np.divmod(rem, nf)
        a0 = self.axis0[i0]
        af = self.fiber[i2]
        X = np.stack([a0, self.axis1[i1]], axis=-1)
        ca, sa = np.cos(af), np.sin(af)
        if self.model.kind == SPHERE:
            XI = np.stack([ca, sa * np.sin(a0)], axis=-1)
        else:
            XI = np.stack([ca, sa], axis=-1)
        return phase_embed(self.model, X, XI)

    def tree(self):
        if self._tree is None:
            self._tree = cKDTree(self.embedded())
        return self._tree

    def max_base_pitch(self):
        if self.model.kind == SPHERE:
            dr = self.axis0[1] - self.axis0[0] if len(self.axis0) > 1 else self.window[1]
            dth = (self.axis1[1] - self.axis1[0]) if len(self.axis1) > 1 else TWOPI
            return max(dr, dth * float(np.max(np.sin(self.axis0))))
        d0 = self.axis0[1] - self.axis0[0] if len(self.axis0) > 1 else TWOPI
        d1 = self.axis1[1] - self.axis1[0] if len(self.axis1) > 1 else TWOPI
        return max(d0, d1)

    def max_pitch(self):
        """Largest per-axis cell pitch including the fiber direction."""
        return max(self.max_base_pitch(), self.mf)


def sphere_phase_grid(
    n0=64, n1=64, nf=64, r_window=(0.2, np.pi - 0.2), fiber_window=None, fiber_offset=0.5
):
    """Sphere cosphere grid over r in r_window; pole caps stay excluded.

    fiber_window optionally restricts the fiber circle to a union of
    intervals [(a, b), ...] for windowed support studies; cell measure
    stays exact on the restriction. fiber_offset=0 puts cell centers on the
    meridian angles 0 and pi, which keeps limit-measure supports on single
    fiber rings.
    """
    r_lo, r_hi = r_window
    edges = np.linspace(r_lo, r_hi, n0 + 1)
    axis0 = 0.5 * (edges[:-1] + edges[1:])
    m0 = np.cos(edges[:-1]) - np.cos(edges[1:])
    axis1 = (np.arange(n1) + 0.5) * (TWOPI / n1)
    fiber, mf = _fiber_axis(nf, fiber_window, fiber_offset)
    return PhaseGrid(
        round_sphere(), axis0, axis1, fiber, m0, TWOPI / n1, mf, window=(r_lo, r_hi)
    )


def torus_phase_grid(n0=64, n1=64, nf=64, fiber_window=None, fiber_offset=0.5):
    axis = (np.arange(n0) + 0.5) * (TWOPI / n0)
    axis1 = (np.arange(n1) + 0.5) * (TWOPI / n1)
    fiber, mf = _fiber_axis(nf, fiber_window, fiber_offset)
    m0 = np.full(n0, TWOPI / n0)
    return PhaseGrid(flat_torus(), axis, axis1, fiber, m0, TWOPI / n1, mf, window=(0.0, TWOPI))


def _fiber_axis(nf, fiber_window, fiber_offset=0.5):
    if fiber_window is None:
        return (np.arange(nf) + fiber_offset) * (TWOPI / nf), TWOPI / nf
    lengths = [b - a for a, b in fiber_window]
    if max(lengths) - min(lengths) > 1e-12:
        raise ValueError("fiber_window intervals must have equal lengths")
    per = max(2, nf // len(fiber_window))
    parts = [a + (np.arange(per) + fiber_offset) * ((b - a) / per) for a, b in fiber_window]
    fiber = np.concatenate(parts)
    return fiber, sum(lengths) / len(fiber)


# ---------------------------------------------------------------------------
# lift estimate and support


@dataclass
class LiftEstimate:
    """Discrete probability measure on a PhaseGrid (the numerical lift)."""

    grid: PhaseGrid
    weights: np.ndarray
    h: float
    window: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("lift weights must be nonnegative")
        s = float(w.sum())
        if abs(s - 1.0) > MASS_TOL:
            raise ValueError(f"lift weights sum to {s}, not 1")
        self.weights = w


@dataclass
class MeasureSupport:
    """Cells whose weight clears tau * max weight, with the leak reported."""

    grid: PhaseGrid
    indices: np.ndarray
    tau: float
    retained_mass: float

    @property
    def support_leak(self):
        return 1.0 - self.retained_mass

    def points(self):
        X, XI = self.grid.cell_coords()
        return X[self.indices], XI[self.indices]

    def embedded(self):
        return self.grid.embedded_at(self.indices)


# ---------------------------------------------------------------------------
# quadrature meshes for the coherent-state pairings


@dataclass
class _QuadMesh:
    """Area-weighted evaluation mesh, ragged in the azimuthal direction."""

    xy: np.ndarray  # (N, 2) chart coords
    w: np.ndarray  # (N,) area weights
    row_r: np.ndarray  # (nrows,) sphere row colatitudes / torus row x1
    row_start: np.ndarray  # (nrows+1,) offsets into xy
    row_n: np.ndarray  # (nrows,) nodes per row
    u: np.ndarray | None = None  # (N,) eigenfunction values


def _sphere_mesh(step, r_lo, r_hi):
    r_lo = max(2e-3, r_lo)
    r_hi = min(np.pi - 2e-3, r_hi)
    nrows = max(8, int(np.ceil((r_hi - r_lo) / step)))
    edges = np.linspace(r_lo, r_hi, nrows + 1)
    rows = 0.5 * (edges[:-1] + edges[1:])
    band = np.cos(edges[:-1]) - np.cos(edges[1:])
    xs, ws, counts = [], [], []
    for r, bm in zip(rows, band):
        n = max(8, int(np.ceil(TWOPI * np.sin(r) / step)))
        th = (np.arange(n) + 0.5) * (TWOPI / n)
        xs.append(np.stack([np.full(n, r), th], axis=-1))
        ws.append(np.full(n, bm / n))
        counts.append(n)
    xy = np.concatenate(xs)
    w = np.concatenate(ws)
    counts = np.asarray(counts)
    starts = np.concatenate([[0], np.cumsum(counts)])
    return _QuadMesh(xy, w, rows, starts, counts)


def _torus_mesh(step):
    n = max(8, int(np.ceil(TWOPI / step)))
    ax = (np.arange(n) + 0.5) * (TWOPI / n)
    X1, X2 = np.meshgrid(ax, ax, indexing="ij")
    xy = np.stack([X1.ravel(), X2.ravel()], axis=-1)
    w = np.full(n * n, (TWOPI / n) ** 2)
    starts = np.arange(n + 1) * n
    return _QuadMesh(xy, w, ax, starts, np.full(n, n))


def _mesh_window(mesh, r0, th0, rad, on_sphere):
    """Indices of mesh nodes in a rectangle covering the geodesic rad-ball."""
    nrows = len(mesh.row_r)
    if on_sphere:
        jlo, jhi = np.searchsorted(mesh.row_r, [r0 - rad, r0 + rad])
        rows = range(max(0, jlo - 1), min(nrows, jhi + 1))
    else:
        # x1 wraps on the torus, so take a modular row range
        drow = TWOPI / nrows
        half = min(int(np.ceil(rad / drow)) + 1, (nrows - 1) // 2)
        j0 = int(np.floor(r0 / drow - 0.5))
        rows = [(j0 + o) % nrows for o in range(-half, half + 1)]
    idx = []
    c_rad = math.cos(rad)
    for j in rows:
        n = mesh.row_n[j]
        r = mesh.row_r[j]
        if on_sphere:
            # azimuth bound beta with cos d = cos r0 cos r + sin r0 sin r cos beta
            s = math.sin(r0) * math.sin(r)
            c = math.cos(r0) * math.cos(r)
            if s < 1e-12:
                beta = np.pi
            else:
                beta = math.acos(min(1.0, max(-1.0, (c_rad - c) / s)))
        else:
            beta = rad
        half = int(np.ceil(beta / (TWOPI / n))) + 1
        if 2 * half + 1 >= n:
            idx.append(np.arange(mesh.row_start[j], mesh.row_start[j] + n))
        else:
            j0 = int(np.floor(th0 / (TWOPI / n) - 0.5))
            cols = np.arange(j0 - half, j0 + half + 1) % n
            idx.append(mesh.row_start[j] + cols)
    return np.concatenate(idx) if idx else np.empty(0, dtype=int)


def _eval_on_mesh(u, mesh, model):
    """Eigenfunction values on all mesh nodes, using cheap structure."""
    from . import eigenmodes as em

    if model.kind == SPHERE and isinstance(u, em.SphereRandomWave):
        coeffs = em.random_wave_coeffs(u.k, u.seed) * u.norm_constant
        pk = em.assoc_legendre_normalized(u.k, np.cos(mesh.row_r))
        vals = np.empty(len(mesh.xy), dtype=complex)
        for j in range(len(mesh.row_r)):
            sl = slice(mesh.row_start[j], mesh.row_start[j + 1])
            th = mesh.xy[sl, 1]
            row = coeffs[u.k] * pk[0, j] * np.ones(len(th), dtype=complex)
            for m in range(1, u.k + 1):
                if pk[m, j] != 0.0:
                    e = np.exp(1j * m * th)
                    row += pk[m, j] * (
                        coeffs[u.k + m] * e + coeffs[u.k - m] * (-1) ** m * np.conj(e)
                    )
            vals[sl] = row
        return vals
    return u.values(mesh.xy)


# ---------------------------------------------------------------------------
# the lift


def husimi_lift(u, grid: PhaseGrid, width=1.0, quad_step_factor=1.5, trunc_sigmas=5.0):
    """Coherent-state (positive quantization) lift of u onto the grid.

    weight(cell) ∝ |<u, phi_(x0,xi0)>|^2 * cell Liouville measure, where
    phi has Gaussian envelope exp(-d(y,x0)^2 / (2 width h)) in the geodesic
    distance and plane-wave phase exp(i <y - x0, xi0> / h) in the chart
    pairing (coordinate differences against covector components, angles
    wrapped). Base cells near the sphere poles are handled by the mesh
    itself: azimuthal node counts scale with sin r, so windows reaching a
    pole stay exact and cheap.
    """
    if not 0.5 <= width <= 2.0:
        raise ValueError("width must lie in [0.5, 2]")
    h = u.h
    s = math.sqrt(width * h)
    if grid.max_base_pitch() > 4.0 * s:
        raise ResolutionMismatch(
            f"base pitch {grid.max_base_pitch():.3f} exceeds 4x footprint {s:.3f}"
        )
    rad = trunc_sigmas * s
    step = quad_step_factor * h
    on_sphere = grid.model.kind == SPHERE
    if on_sphere:
        mesh = _sphere_mesh(step, grid.window[0] - rad, grid.window[1] + rad)
    else:
        mesh = _torus_mesh(step)
    mesh.u = _eval_on_mesh(u, mesh, grid.model)

    n0, n1, nf = grid.shape
    ca, sa = np.cos(grid.fiber), np.sin(grid.fiber)
    rot_fast = on_sphere and getattr(u, "rotation_invariant_modulus", False)
    trans_fast = (not on_sphere) and getattr(u, "translation_invariant_modulus", False)
    cols = [grid.axis1[0]] if rot_fast else grid.axis1
    dens = np.empty((n0, len(cols), nf))

    def fill_cell(i, j):
        r0, th0 = grid.axis0[i], cols[j]
        idx = _mesh_window(mesh, r0, th0, rad, on_sphere)
        y = mesh.xy[idx]
        amp = mesh.w[idx] * mesh.u[idx]
        c1 = y[:, 0] - r0
        c2 = (y[:, 1] - th0 + np.pi) % TWOPI - np.pi
        if on_sphere:
            d2 = _geodesic_dist2_sphere(y, r0, th0)
            # covector chart components of the fiber directions at this cell
            xi0 = np.sin(grid.fiber) * math.sin(r0)
            xir = np.cos(grid.fiber)
        else:
            c1 = (c1 + np.pi) % TWOPI - np.pi
            d2 = c1**2 + c2**2
            xi0, xir = sa, ca
        amp = amp * np.exp(-d2 / (2.0 * s * s))
        phase = np.exp(-1j * (np.outer(c1, xir) + np.outer(c2, xi0)) / h)
        dens[i, j] = np.abs(amp @ phase) ** 2

    if trans_fast:
        fill_cell(0, 0)
        dens[:, :, :] = dens[0, 0]
    else:
        pairs = [(i, j) for i in range(n0) for j in range(len(cols))]
        workers = max_workers()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                list(ex.map(lambda p: fill_cell(*p), pairs))
        else:
            for p in pairs:
                fill_cell(*p)
    if rot_fast:
        dens = np.broadcast_to(dens, (n0, n1, nf))
    W = dens.ravel() * grid.cell_measure()
    W = W / W.sum()
    return LiftEstimate(
        grid, W, h, width, meta={"family": getattr(u, "tag", "custom"), "quad_step": step}
    )


def _geodesic_dist2_sphere(y, r0, th0):
    """Squared geodesic distance from chart points y to (r0, th0)."""
    q0 = sphere_embed(np.array([r0, th0]))
    dots = np.clip(sphere_embed(y) @ q0, -1.0, 1.0)
    return np.arccos(dots) ** 2


# ---------------------------------------------------------------------------
# limit measures of the model families


def zonal_measure_oracle(grid: PhaseGrid) -> LiftEstimate:
    """Exact limit measure of the zonal family pushed onto grid cells.

    Uniform in the (pole fiber angle, flow time) parametrization of the
    meridian Lagrangian: mass per cell band is proportional to the r-band
    width, split over the two radial orientations, deposited on the fiber
    cells nearest the meridian angles 0 and pi.
    """
    if grid.model.kind != SPHERE:
        raise UnsupportedModel("zonal limit measure lives on the sphere")
    n0, n1, nf = grid.shape
    # flow time equals arclength along meridians, so each uniform r band
    # carries mass proportional to its width
    band = np.full(n0, (grid.window[1] - grid.window[0]) / n0)
    W = np.zeros(grid.shape)
    for target in (0.0, np.pi):
        share = _nearest_fiber_shares(grid.fiber, target)
        W += band[:, None, None] * (np.ones(n1) / n1)[None, :, None] * share[None, None, :]
    W = W.ravel()
    return LiftEstimate(grid, W / W.sum(), 0.0, 0.0, meta={"family": "zonal-limit"})


def _nearest_fiber_shares(fiber, target):
    """Split unit mass over the fiber cell(s) nearest the target angle."""
    gap = np.abs((fiber - target + np.pi) % TWOPI - np.pi)
    best = gap.min()
    share = (gap <= best + 1e-12).astype(float)
    return share / share.sum()


def deposit_points(grid: PhaseGrid, X, XI, masses=None) -> LiftEstimate:
    """Push sampled phase points onto nearest grid cells (limit measures)."""
    e = phase_embed(grid.model, np.asarray(X, float), np.asarray(XI, float))
    _, idx = grid.tree().query(e)
    W = np.zeros(grid.ncells)
    if masses is None:
        masses = np.full(len(idx), 1.0 / len(idx))
    np.add.at(W, idx, masses)
    return LiftEstimate(grid, W / W.sum(), 0.0, 0.0, meta={"family": "sampled-limit"})


def _nearest_axis_shares(axis, value, period=None):
    """Per-axis nearest-center mass split (ties shared), as (idx, share)."""
    gap = np.abs(axis - value)
    if period is not None:
        gap = np.minimum(gap, period - gap)
    best = gap.min()
    idx = np.nonzero(gap <= best + 1e-12)[0]
    return idx, np.full(len(idx), 1.0 / len(idx))


def equator_measure_oracle(grid: PhaseGrid) -> LiftEstimate:
    """Uniform measure on the equatorial closed geodesic, +theta orientation.

    Deposited by per-axis nearest cell centers (exact for product grids):
    uniform over the theta cells, on the r rows nearest pi/2 and the fiber
    rings nearest the +theta direction.
    """
    if grid.model.kind != SPHERE:
        raise UnsupportedModel("equatorial geodesic lives on the sphere")
    n0, n1, nf = grid.shape
    ri, rs = _nearest_axis_shares(grid.axis0, np.pi / 2)
    fi, fs = _nearest_axis_shares(grid.fiber, np.pi / 2, period=TWOPI)
    W = np.zeros(grid.shape)
    for i, si in zip(ri, rs):
        for f, sf in zip(fi, fs):
            W[i, :, f] += si * sf / n1
    W = W.ravel()
    return LiftEstimate(grid, W / W.sum(), 0.0, 0.0, meta={"family": "equator-limit"})


def torus_wave_measure_oracle(grid: PhaseGrid, kvec) -> LiftEstimate:
    """Uniform measure on the invariant torus {xi parallel to kvec},
    deposited on the fiber rings nearest the wave direction."""
    if grid.model.kind != TORUS:
        raise UnsupportedModel("invariant torus measure lives on the torus")
    kvec = np.asarray(kvec, dtype=float)
    alpha = float(np.arctan2(kvec[1], kvec[0])) % TWOPI
    n0, n1, nf = grid.shape
    fi, fs = _nearest_axis_shares(grid.fiber, alpha, period=TWOPI)
    W = np.zeros(grid.shape)
    for f, sf in zip(fi, fs):
        W[:, :, f] += sf / (n0 * n1)
    W = W.ravel()
    return LiftEstimate(grid, W / W.sum(), 0.0, 0.0, meta={"family": "torus-wave-limit"})


# ---------------------------------------------------------------------------
# diagnostics


def tv_distance(w1, w2):
    """Total-variation distance between probability vectors on one grid."""
    return 0.5 * float(np.sum(np.abs(np.asarray(w1) - np.asarray(w2))))


def flow_invariance_defect(lift: LiftEstimate, t) -> float:
    """TV distance between the lift and its time-t transport.

    Cell centers flow by the closed-form geodesic flow (exact, chart-free
    via the embedding); mass redeposits on the nearest cell center, so all
    mass is conserved. Expected O(sqrt(h) + cell size) for true modes.
    """
    if abs(t) > 5.0:
        raise ValueError("|t| <= 5 keeps transport within calibrated range")
    if t == 0.0:
        return 0.0
    grid = lift.grid
    X, XI = grid.cell_coords()
    if grid.model.kind == SPHERE:
        from .geometry import _great_circle, sphere_embed_phase, sphere_unembed_phase

        q, v = sphere_embed_phase(X, XI)
        qt, vt = _great_circle(q, v, float(t))
        Xt, XIt = sphere_unembed_phase(qt, vt)
    else:
        Xt = np.mod(X + float(t) * XI, TWOPI)
        XIt = XI
    e = phase_embed(grid.model, Xt, XIt)
    _, idx = grid.tree().query(e)
    Wt = np.zeros(grid.ncells)
    np.add.at(Wt, idx, lift.weights)
    return tv_distance(lift.weights, Wt)


def liouville_deviation(lift: LiftEstimate) -> float:
    """TV distance to the normalized Liouville measure on the grid window."""
    m = lift.grid.cell_measure()
    return tv_distance(lift.weights, m / m.sum())


def support_threshold(lift: LiftEstimate, tau) -> MeasureSupport:
    """Cells with weight >= tau * max weight; reports the retained mass."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    wmax = lift.weights.max()
    if wmax <= 0.0:
        raise EmptySupport("lift carries no mass")
    idx = np.nonzero(lift.weights >= tau * wmax)[0]
    if idx.size == 0:
        raise EmptySupport("no cell clears the threshold")
    return MeasureSupport(lift.grid, idx, tau, float(lift.weights[idx].sum()))


def measure_of_set(lift: LiftEstimate, region, dist_tol=0.0) -> float:
    """Mass of the cells whose centers satisfy the region predicate.

    region(X, XI, dist_tol) -> bool array over cell centers; dist_tol is
    the slack the predicate may use for membership decisions.
    """
    X, XI = lift.grid.cell_coords()
    mask = np.asarray(region(X, XI, dist_tol), dtype=bool)
    return float(lift.weights[mask].sum())


# region predicate builders


def whole_space():
    return lambda X, XI, tol: np.ones(len(X), dtype=bool)


def empty_region():
    return lambda X, XI, tol: np.zeros(len(X), dtype=bool)


def meridian_band(model):
    """Fiber-angle proximity to the meridian field {xi = +-dr} (sphere)."""

    def pred(X, XI, tol):
        from .geometry import covector_embed

        v = covector_embed(model, X, XI)
        vp = covector_embed(model, X, np.stack([np.ones(len(X)), np.zeros(len(X))], axis=-1))
        gp = np.linalg.norm(v - vp, axis=1)
        gm = np.linalg.norm(v + vp, axis=1)
        return np.minimum(gp, gm) <= tol

    return pred


def equator_band():
    """Sasaki proximity to the oriented equatorial geodesic circle (sphere)."""

    def pred(X, XI, tol):
        base_gap = np.abs(X[:, 0] - np.pi / 2)
        from .geometry import covector_embed

        model = round_sphere()
        v = covector_embed(model, X, XI)
        Xeq = X.copy()
        Xeq[:, 0] = np.pi / 2
        veq = covector_embed(model, Xeq, np.stack([np.zeros(len(X)), np.ones(len(X))], axis=-1))
        return np.hypot(base_gap, np.linalg.norm(v - veq, axis=1)) <= tol

    return pred


def direction_band(direction):
    """Covector proximity to a fixed unit direction (flat models)."""
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)

    def pred(X, XI, tol):
        return np.linalg.norm(XI - direction, axis=1) <= tol

    return pred


def pole_flowout_band(delta):
    """Meridian-direction cells within flow time delta of the north pole."""
    inner = meridian_band(round_sphere())

    def pred(X, XI, tol):
        return (X[:, 0] <= delta) & inner(X, XI, max(tol, 1e-9))

    return pred
