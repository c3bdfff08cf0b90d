"""Model surfaces and their geodesic flow.

Three models: the round 2-sphere in a polar chart (r, theta) about the
north pole, the flat square torus [0, 2pi)^2, and the Euclidean plane.
The flow is the Hamiltonian flow of p = (1/2)|xi|^2_g on the cotangent
bundle, so unit covectors travel at unit speed and time equals arclength.

A Stormer-Verlet integrator (with energy-drift step control) coexists
with closed-form flows (great circles, straight lines); the two are kept
as independent routes and cross-checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartViolation, NoConvergence, ShellViolation, UnsupportedModel

CHART_MARGIN = 1e-3  # radians kept clear of each sphere-chart pole
SHELL_TOL = 1e-6  # |p - 1/2| slack defining the unit-covector shell

SPHERE = "sphere"
TORUS = "torus"
PLANE = "plane"

TWOPI = 2.0 * np.pi


@dataclass(frozen=True)
class ManifoldModel:
    """A model surface plus its chart conventions.

    kind "sphere": polar chart (r, theta), r in (chart_margin, pi - chart_margin).
    kind "torus":  (x1, x2) in [0, 2pi)^2, flat metric, wrapped.
    kind "plane":  Cartesian (x1, x2).
    """

    kind: str
    chart_margin: float = CHART_MARGIN
    shell_tol: float = SHELL_TOL


def round_sphere():
    return ManifoldModel(SPHERE)


def flat_torus():
    return ManifoldModel(TORUS)


def euclidean_plane():
    return ManifoldModel(PLANE)


@dataclass(frozen=True)
class PhasePoint:
    """Chart coordinates x and covector components xi, both shape (2,)."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xi))):
            raise ValueError("phase point has non-finite components")


def phase_point(x0, x1, xi0, xi1):
    return PhasePoint(np.array([x0, x1]), np.array([xi0, xi1]))


# ---------------------------------------------------------------------------
# charts


def chart_valid(model, X, closed=False):
    """Boolean validity of chart points, X shape (..., 2).

    closed=True accepts the chart closure (sphere poles included), which is
    enough for embeddings, distances and eigenfunction formulas; metric and
    flow operations need the strict interior away from the pole margins.
    """
    X = np.asarray(X, dtype=float)
    if model.kind == SPHERE:
        r = X[..., 0]
        if closed:
            return (r >= 0.0) & (r <= np.pi)
        return (r > model.chart_margin) & (r < np.pi - model.chart_margin)
    return np.isfinite(X).all(axis=-1)


def require_chart(model, X, closed=False):
    if not np.all(chart_valid(model, X, closed=closed)):
        raise ChartViolation(f"point outside valid {model.kind} chart region")


def wrap_chart(model, X):
    """Wrap periodic coordinates back into the fundamental chart."""
    X = np.asarray(X, dtype=float)
    if model.kind == TORUS:
        return np.mod(X, TWOPI)
    if model.kind == SPHERE:
        out = X.copy()
        out[..., 1] = np.mod(out[..., 1], TWOPI)
        return out
    return X


# ---------------------------------------------------------------------------
# metric and Hamiltonian

def _ginv_diag(model, X):
    """Diagonal of g^{-1} at chart points, shape (..., 2). All models diagonal."""
    X = np.asarray(X, dtype=float)
    d = np.ones(X.shape)
    if model.kind == SPHERE:
        d[..., 1] = 1.0 / np.sin(X[..., 0]) ** 2
    return d


def metric_inverse_at(model, x):
    """Inverse metric tensor g^{-1}(x) as a symmetric 2x2 matrix."""
    x = np.asarray(x, dtype=float)
    require_chart(model, x)
    return np.diag(_ginv_diag(model, x))


def hamiltonian(model, z: PhasePoint) -> float:
    """p(z) = (1/2) xi^T g^{-1}(x) xi. Unit covectors have p = 1/2."""
    require_chart(model, z.x)
    d = _ginv_diag(model, z.x)
    return float(0.5 * np.sum(d * z.xi**2))


def _ham_batch(model, X, XI):
    return 0.5 * np.sum(_ginv_diag(model, X) * XI**2, axis=-1)


def _dham_dx(model, X, XI):
    """dp/dx, shape (..., 2). Only the sphere r-slot is nonzero."""
    f = np.zeros(np.asarray(X, dtype=float).shape)
    if model.kind == SPHERE:
        r = X[..., 0]
        f[..., 0] = -(XI[..., 1] ** 2) * np.cos(r) / np.sin(r) ** 3
    return f


def on_shell(model, z: PhasePoint, tol=None) -> bool:
    tol = model.shell_tol if tol is None else tol
    return abs(hamiltonian(model, z) - 0.5) <= tol


def require_shell(model, z):
    if not on_shell(model, z):
        raise ShellViolation("phase point off the unit-covector shell")


def clairaut(model, z: PhasePoint) -> float:
    """Conserved angular momentum xi_theta of sphere geodesic flow."""
    if model.kind != SPHERE:
        raise UnsupportedModel("angular-momentum integral needs a surface of revolution")
    require_chart(model, z.x)
    return float(z.xi[1])


# ---------------------------------------------------------------------------
# symplectic integrator

_MAX_HALVINGS = 22

# Yoshida triple-jump weights: composing three Stormer-Verlet substeps with
# these fractions yields a fixed 4th-order symplectic step.
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1
_YOSHIDA = (_W1, _W0, _W1)


def _verlet_substep(model, X, XI, dt, curved):
    """One Stormer-Verlet step on p = (1/2) xi^T g^{-1}(x) xi.

    For these diagonal metrics the generalized leapfrog is explicit: the
    force depends only on the conserved xi_theta, and the drift midpoint
    average needs the already-updated r.
    """
    f0 = _dham_dx(model, X, XI)
    XIh = XI - 0.5 * dt * f0
    if curved:
        r0 = X[..., 0]
        r1 = r0 + dt * XIh[..., 0]
        th1 = X[..., 1] + 0.5 * dt * XIh[..., 1] * (
            1.0 / np.sin(r0) ** 2 + 1.0 / np.sin(r1) ** 2
        )
        X = np.stack([r1, th1], axis=-1)
    else:
        X = X + dt * XIh
    f1 = _dham_dx(model, X, XIh)
    XI = XIh - 0.5 * dt * f1
    return X, XI


def _verlet_path(model, X0, XI0, dt, nsteps, record_every=0):
    """Composed-Verlet integration, batched over rows.

    Returns the final state, the max energy drift seen along the way, and
    states recorded every record_every macro steps.
    """
    X = np.array(X0, dtype=float, copy=True)
    XI = np.array(XI0, dtype=float, copy=True)
    H0 = _ham_batch(model, X, XI)
    drift = 0.0
    rec = []
    curved = model.kind == SPHERE
    margin = model.chart_margin
    for k in range(nsteps):
        for w in _YOSHIDA:
            X, XI = _verlet_substep(model, X, XI, w * dt, curved)
        if curved:
            r = X[..., 0]
            if np.any(r <= margin) or np.any(r >= np.pi - margin):
                raise ChartViolation("trajectory left the polar chart; re-chart and retry")
        drift = max(drift, float(np.max(np.abs(_ham_batch(model, X, XI) - H0))))
        if record_every and (k + 1) % record_every == 0:
            rec.append((X.copy(), XI.copy()))
    return X, XI, drift, rec


def _state_gap(model, X1, XI1, X2, XI2):
    e1 = phase_embed(model, X1, XI1)
    e2 = phase_embed(model, X2, XI2)
    return float(np.max(np.abs(e1 - e2)))


def _flow_batch(model, X0, XI0, t, tol):
    """Integrate a batch for time t, halving the step until both the energy
    drift and a two-grid Richardson gap fall below tol."""
    X0 = np.asarray(X0, dtype=float)
    XI0 = np.asarray(XI0, dtype=float)
    if t == 0.0:
        return X0.copy(), XI0.copy()
    if model.kind != SPHERE:
        # flat metric: zero force, the single Verlet step is the exact flow
        X, XI, _, _ = _verlet_path(model, X0, XI0, t, 1)
        return X, XI
    dt0 = min(0.05, (tol / min(10.0, max(abs(t), 1.0))) ** 0.25)
    nsteps = max(1, int(np.ceil(abs(t) / dt0)))
    X, XI, drift, _ = _verlet_path(model, X0, XI0, t / nsteps, nsteps)
    for _ in range(_MAX_HALVINGS):
        X2, XI2, drift2, _ = _verlet_path(model, X0, XI0, t / (2 * nsteps), 2 * nsteps)
        gap = _state_gap(model, X, XI, X2, XI2)
        if drift2 <= tol and gap <= tol:
            return X2, XI2
        nsteps *= 2
        X, XI, drift = X2, XI2, drift2
    raise NoConvergence(f"drift {drift:.3e} above tol after {_MAX_HALVINGS} halvings")


def geodesic_flow(model, z: PhasePoint, t, tol=1e-8) -> PhasePoint:
    """G_t(z) by adaptive-step Stormer-Verlet; stays on the energy shell.

    Raises ChartViolation if the trajectory exits the chart (sphere pole
    neighborhoods); callers re-chart via rotate_to_equator and retry.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    require_chart(model, z.x)
    if hamiltonian(model, z) <= 0:
        raise ValueError("flow needs a nonzero covector")
    X, XI = _flow_batch(model, z.x[None, :], z.xi[None, :], float(t), tol)
    out = wrap_chart(model, X[0])
    return PhasePoint(out, XI[0])


def geodesic_flow_path(model, z: PhasePoint, times, tol=1e-8):
    """G_t(z) at each lattice time; one shared integration per sign."""
    times = np.asarray(times, dtype=float)
    out = [None] * len(times)
    order = np.argsort(np.abs(times), kind="stable")
    # walk outward from t = 0 separately for each sign, reusing the state
    for sign in (1.0, -1.0):
        idx = [i for i in order if np.sign(times[i]) == sign or times[i] == 0.0]
        prev_t = 0.0
        X, XI = z.x[None, :].astype(float), z.xi[None, :].astype(float)
        for i in idx:
            t = times[i]
            if t != prev_t:
                X, XI = _flow_batch(model, X, XI, t - prev_t, tol)
                prev_t = t
            if out[i] is None:
                out[i] = PhasePoint(wrap_chart(model, X[0]), XI[0])
    return out


# ---------------------------------------------------------------------------
# closed-form flows (oracle route)


def closed_form_flow(model, z: PhasePoint, t) -> PhasePoint:
    """Exact geodesic flow: great circle on the sphere, lines on flat models."""
    require_chart(model, z.x)
    if model.kind == SPHERE:
        q, v = sphere_embed_phase(z.x[None, :], z.xi[None, :])
        q, v = _great_circle(q, v, t)
        X, XI = sphere_unembed_phase(q, v)
        return PhasePoint(X[0], XI[0])
    d = _ginv_diag(model, z.x)
    x = z.x + t * d * z.xi
    return PhasePoint(wrap_chart(model, x), z.xi.copy())


def _great_circle(Q, V, t):
    s = np.linalg.norm(V, axis=-1, keepdims=True)
    st, ct = np.sin(s * t), np.cos(s * t)
    Qt = Q * ct + (V / s) * st
    Vt = -Q * s * st + V * ct
    return Qt, Vt


# ---------------------------------------------------------------------------
# sphere embeddings and chart rotations


def sphere_embed(X):
    """Chart points (r, theta) -> unit vectors in R^3, shape (..., 3)."""
    X = np.asarray(X, dtype=float)
    r, th = X[..., 0], X[..., 1]
    sr = np.sin(r)
    return np.stack([sr * np.cos(th), sr * np.sin(th), np.cos(r)], axis=-1)


def sphere_unembed(Q):
    Q = np.asarray(Q, dtype=float)
    r = np.arccos(np.clip(Q[..., 2], -1.0, 1.0))
    th = np.mod(np.arctan2(Q[..., 1], Q[..., 0]), TWOPI)
    return np.stack([r, th], axis=-1)


def _sphere_frame(X):
    """Orthonormal frame (e_r, e_theta) of the polar chart, embedded."""
    X = np.asarray(X, dtype=float)
    r, th = X[..., 0], X[..., 1]
    cr, sr, cth, sth = np.cos(r), np.sin(r), np.cos(th), np.sin(th)
    e_r = np.stack([cr * cth, cr * sth, -sr], axis=-1)
    e_th = np.stack([-sth, cth, np.zeros_like(th)], axis=-1)
    return e_r, e_th


def sphere_embed_phase(X, XI):
    """(x, xi) -> (q, v) with v the metric-dual velocity in T_q S^2.

    At a chart pole the theta-component is degenerate (xi_theta = 0 there
    for any finite-energy covector), so the guarded division keeps pole
    rows finite.
    """
    X = np.asarray(X, dtype=float)
    XI = np.asarray(XI, dtype=float)
    e_r, e_th = _sphere_frame(X)
    sr = np.sin(X[..., 0])[..., None]
    q = sphere_embed(X)
    vth = np.where(np.abs(sr) > 1e-12, XI[..., 1:2] / np.where(sr == 0, 1.0, sr), 0.0)
    v = XI[..., 0:1] * e_r + vth * e_th
    return q, v


def sphere_unembed_phase(Q, V):
    X = sphere_unembed(Q)
    e_r, e_th = _sphere_frame(X)
    sr = np.sin(X[..., 0])[..., None]
    xi_r = np.sum(V * e_r, axis=-1, keepdims=True)
    xi_th = np.sum(V * e_th, axis=-1, keepdims=True) * sr
    return X, np.concatenate([xi_r, xi_th], axis=-1)


def rotation_to_equator(q, v):
    """Rotation mapping the oriented great-circle plane of (q, v) onto the
    equator through (1,0,0) tangent to (0,1,0); the rotated trajectory then
    never approaches a chart pole."""
    q = np.asarray(q, dtype=float).reshape(3)
    vh = np.asarray(v, dtype=float).reshape(3)
    vh = vh / np.linalg.norm(vh)
    e3 = np.cross(q, vh)
    return np.stack([q, vh, e3])


# ---------------------------------------------------------------------------
# distances


def geodesic_distance(model, x, y) -> float:
    """Riemannian distance between chart points (chart closure allowed)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    require_chart(model, x, closed=True)
    require_chart(model, y, closed=True)
    return float(_dist_batch(model, x[None, :], y[None, :])[0])


def _dist_batch(model, X, Y):
    if model.kind == SPHERE:
        dots = np.sum(sphere_embed(X) * sphere_embed(Y), axis=-1)
        return np.arccos(np.clip(dots, -1.0, 1.0))
    if model.kind == TORUS:
        d = np.abs(X - Y) % TWOPI
        d = np.minimum(d, TWOPI - d)
        return np.sqrt(np.sum(d**2, axis=-1))
    return np.sqrt(np.sum((X - Y) ** 2, axis=-1))


def covector_embed(model, X, XI):
    """Covector part of the phase embedding (metric-dual, chordal-ready)."""
    if model.kind == SPHERE:
        _, v = sphere_embed_phase(X, XI)
        return v
    return np.asarray(XI, dtype=float)


def phase_embed(model, X, XI):
    """Wraparound-safe embedding of phase points for lattices and trees.

    sphere: (q, v) in R^6; torus: (cos x1, sin x1, cos x2, sin x2, xi) in
    R^6; plane: raw (x, xi) in R^4. Chordal distances in these coordinates
    are equivalent to the Sasaki distance at the scales we box-count.
    """
    X = np.asarray(X, dtype=float)
    XI = np.asarray(XI, dtype=float)
    if model.kind == SPHERE:
        q, v = sphere_embed_phase(X, XI)
        return np.concatenate([q, v], axis=-1)
    if model.kind == TORUS:
        c = np.stack(
            [np.cos(X[..., 0]), np.sin(X[..., 0]), np.cos(X[..., 1]), np.sin(X[..., 1])],
            axis=-1,
        )
        return np.concatenate([c, XI], axis=-1)
    return np.concatenate([X, XI], axis=-1)


def sasaki_distance(model, z1: PhasePoint, z2: PhasePoint) -> float:
    """Metric on the unit cosphere bundle: sqrt(base^2 + covector gap^2).

    The covector gap is chordal in the model's embedding, which aligns
    fibers over nearby base points without transport bookkeeping. Zero iff
    the points coincide; equivalent to the Sasaki distance.
    """
    require_shell(model, z1)
    require_shell(model, z2)
    base = geodesic_distance(model, z1.x, z2.x)
    g1 = covector_embed(model, z1.x[None, :], z1.xi[None, :])
    g2 = covector_embed(model, z2.x[None, :], z2.xi[None, :])
    gap = float(np.linalg.norm(g1 - g2))
    return float(np.hypot(base, gap))
