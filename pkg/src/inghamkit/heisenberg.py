"""Group Fourier analysis on the Heisenberg groups ``H_n``.

Coordinates are exponential coordinates ``(t, x, y)`` with ``t`` central and
``x, y`` in ``R^n``; the group law is

    (t, x, y)(t', x', y') = (t + t' + (x.y' - y.x')/2, x + x', y + y').

For ``lambda != 0`` the Schrödinger representation on ``L^2(R^n)`` is

    pi_lambda(t, x, y) phi(u) = exp(2 pi i lambda (t + y.u + x.y/2)) phi(u + x)

and ``pi(f) = int f(g) pi(g^-1) dg`` is an integral operator whose kernel is
the partial transform of ``f`` in ``t`` (frequency ``lambda``) and ``y``
(frequency ``lambda (u + w)/2``), evaluated at ``x = u - w``.  The Plancherel
density on the cross-section is ``|lambda|^n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import InputError, NearSingularError, NumericError, ResolutionError
from .grid import SampledFunction, _check_budget, forward_transform, l2_norm, transform_at
from .nilpotent import LieAlgebraSpec, heisenberg_algebra
from .vanish import log_integral
from .weights import DecayProfile, criterion, evaluate_profile

__all__ = [
    "SINGULAR_LAMBDA",
    "GroupFunction",
    "HSOperator",
    "gaussian_group_function",
    "heisenberg_multiply",
    "slice_autocorrelation",
    "central_transform",
    "schrodinger_kernel",
    "hs_norm_squared",
    "gauss_legendre_panels",
    "plancherel_check",
    "plancherel_refinement",
    "lemma_slice_identity",
    "weighted_plancherel_mass",
    "ingham_nilpotent_check",
    "central_construction",
    "factorization_check",
    "mass_bound_check",
]

SINGULAR_LAMBDA = 1e-6
DEFAULT_DELTA = 1e-3
DEFAULT_LAMBDA_MAX = 8.0
DEFAULT_PANELS = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(2)


@dataclass(frozen=True, eq=False)
class GroupFunction:
    """Samples of ``f`` on ``H_n`` with axes ordered ``(t, x_1..x_n, y_1..y_n)``."""

    algebra: LieAlgebraSpec
    samples: SampledFunction
    check_support: bool = True

    def __post_init__(self):
        d = self.algebra.dim
        if d % 2 == 0:
            raise InputError("Heisenberg algebras have odd dimension")
        n = (d - 1) // 2
        if not np.array_equal(self.algebra.c, heisenberg_algebra(n).c):
            raise InputError(f"algebra {self.algebra.name!r} is not H_{n} in the standard basis")
        if self.samples.dims != d:
            raise InputError(f"samples must have {d} axes, got {self.samples.dims}")
        if self.check_support:
            peak = self.samples.peak()
            v = np.abs(self.samples.values)
            for a in range(d):
                faces = np.concatenate([np.take(v, 0, axis=a).ravel(), np.take(v, -1, axis=a).ravel()])
                if peak > 0 and faces.max() >= 1e-12 * peak:
                    raise InputError(f"f is not compactly supported inside the box along axis {a}")

    @property
    def n(self) -> int:
        return (self.algebra.dim - 1) // 2

    @property
    def dt(self) -> float:
        return float(self.samples.spacing[0])

    @property
    def transverse_cell(self) -> float:
        return float(np.prod(self.samples.spacing[1:]))

    def norm_squared(self) -> float:
        return l2_norm(self.samples) ** 2

    def scaled(self, alpha) -> "GroupFunction":
        return GroupFunction(self.algebra, self.samples * alpha, self.check_support)


def gaussian_group_function(n: int = 1, sigma: float = 0.25, nt: int = 32, nx: int = 32,
                            t_half: float = 1.0, x_half: float = 4.0) -> GroupFunction:
    """``exp(-pi t^2/sigma^2) exp(-pi |x|^2) exp(-pi |y|^2)`` on a centred box."""
    lo = [-t_half] + [-x_half] * (2 * n)
    hi = [t_half] + [x_half] * (2 * n)
    counts = [nt] + [nx] * (2 * n)

    def fn(t, *rest):
        return np.exp(-np.pi * t ** 2 / sigma ** 2 - np.pi * sum(r ** 2 for r in rest))

    f = SampledFunction.from_callable(fn, lo, hi, counts, f"gaussian H{n} sigma={sigma:g}")
    return GroupFunction(heisenberg_algebra(n), f)


def heisenberg_multiply(a, b, n: int = 1) -> np.ndarray:
    """Closed-form group law in exponential coordinates."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    xa, ya = a[..., 1:n + 1], a[..., n + 1:]
    xb, yb = b[..., 1:n + 1], b[..., n + 1:]
    t = a[..., 0] + b[..., 0] + 0.5 * (np.sum(xa * yb, -1) - np.sum(ya * xb, -1))
    return np.concatenate([t[..., None], xa + xb, ya + yb], axis=-1)


def slice_autocorrelation(F: GroupFunction) -> SampledFunction:
    """``g(t) = int (f_y * f_y^*)(t) dy`` with ``f_y^*(t) = conj(f_y(-t))``.

    ``g`` lives on the symmetric grid ``t = k dt``, ``|k| < N_t``.
    """
    f = F.samples
    v = f.values
    nt = v.shape[0]
    rev = np.conj(v[::-1])
    _check_budget((2 * nt - 1) * int(np.prod(v.shape[1:])))
    corr = fftconvolve(v, rev, axes=0) * F.dt
    g = corr.reshape(2 * nt - 1, -1).sum(axis=1) * F.transverse_cell
    return SampledFunction([-(nt - 1) * F.dt], [F.dt], g, "slice autocorrelation")


def central_transform(F: GroupFunction, lambdas) -> np.ndarray:
    """``f`` transformed in ``t`` at each ``lambda``; shape ``(len(lambdas), x..., y...)``."""
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    f = F.samples
    t = f.axis(0)
    kernel = np.exp(-2j * np.pi * np.outer(lam, t)) * F.dt
    return np.tensordot(kernel, f.values, axes=([1], [0]))


@dataclass(frozen=True, eq=False)
class HSOperator:
    """Kernel of ``pi_lambda(f)`` sampled in centre-of-mass coordinates.

    ``kernel[i, k]`` is ``K(u, w)`` at ``x = u - w = x_axes[i]`` and
    ``s = (u + w)/2 = s_axes[k]`` (multi-indices for ``n > 1``); the map
    ``(u, w) -> (x, s)`` has unit Jacobian, so ``cellvol = dx^n ds^n``.
    """

    lam: float
    kernel: np.ndarray = field(repr=False)
    x_spacing: float
    s_spacing: float
    cellvol: float

    def hs_norm(self) -> float:
        return math.sqrt(self.hs_norm_squared())

    def hs_norm_squared(self) -> float:
        return float(np.sum(np.abs(self.kernel) ** 2) * self.cellvol)


def schrodinger_kernel(F: GroupFunction, lam: float, pad: int = 1) -> HSOperator:
    """Sample the kernel of ``pi_lambda(f)``.

    The ``s`` axis covers exactly one period ``1/(|lambda| dy)`` of the
    discrete ``y``-transform with ``pad * M_y`` points, so the discrete
    Hilbert-Schmidt norm obeys Parseval in ``y`` exactly.

    Raises
    ------
    NearSingularError
        If ``|lambda| < 1e-6``.
    ResolutionError
        If ``pad < 1`` (the ``s`` grid would under-sample one period).
    """
    lam = float(lam)
    if abs(lam) < SINGULAR_LAMBDA:
        raise NearSingularError(f"|lambda| = {abs(lam):.3g} is below {SINGULAR_LAMBDA:g}")
    if int(pad) < 1:
        raise ResolutionError("the s grid needs at least as many points as the y grid")
    n = F.n
    f = F.samples
    A = central_transform(F, [lam])[0]
    y_axes = tuple(range(n, 2 * n))
    my = f.shape[n + 1:]
    ms = tuple(int(pad) * m for m in my)
    dy = f.spacing[n + 1:]
    _check_budget(int(np.prod(f.shape[1:n + 1])) * int(np.prod(ms)))
    raw = np.fft.fftshift(np.fft.fftn(A, s=ms, axes=y_axes), axes=y_axes)
    for a, (m, h, y0) in enumerate(zip(ms, dy, f.origin[n + 1:])):
        eta = np.fft.fftshift(np.fft.fftfreq(m, d=h))
        shape = [1] * (2 * n)
        shape[n + a] = -1
        raw = raw * np.exp(-2j * np.pi * y0 * eta).reshape(shape)
    K = raw * float(np.prod(dy))
    dx = float(np.prod(f.spacing[1:n + 1]))
    ds = float(np.prod(1.0 / (abs(lam) * np.asarray(dy) * np.asarray(ms))))
    return HSOperator(lam, K, dx, ds, dx * ds)


def hs_norm_squared(F: GroupFunction, lambdas, pad: int = 1) -> np.ndarray:
    """``||pi_lambda(f)||_HS^2`` at each lambda via :func:`schrodinger_kernel`."""
    return np.array([schrodinger_kernel(F, lam, pad).hs_norm_squared() for lam in np.atleast_1d(lambdas)])


def gauss_legendre_panels(a: float, b: float, panels: int) -> tuple:
    """Nodes and weights of composite 2-point Gauss-Legendre on ``[a, b]``."""
    if panels < 1 or not b > a:
        raise InputError("need b > a and at least one panel")
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2
    mid = edges[:-1] + half
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    weights = (half[:, None] * _GL_W[None, :]).ravel()
    return nodes, weights


def _cross_section_rule(lambda_max, panels, delta):
    pos, w = gauss_legendre_panels(delta, lambda_max, panels)
    return np.concatenate([-pos[::-1], pos]), np.concatenate([w[::-1], w])


@dataclass(frozen=True)
class PlancherelReport:
    norm_squared: float
    raw: float
    bridged: float
    relative_error_raw: float
    relative_error: float
    delta: float
    lambda_max: float
    panels: int
    nodes: int
    table: tuple = field(repr=False, default=())

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "table"}
        out["table"] = [{"lambda": l, "weight": w, "hs2": h, "density": d} for l, w, h, d in self.table]
        return out


def plancherel_check(F: GroupFunction, lambda_max: float = DEFAULT_LAMBDA_MAX,
                     panels: int = DEFAULT_PANELS, delta: float = DEFAULT_DELTA,
                     tol: float | None = None, max_doublings: int = 3) -> PlancherelReport:
    """Compare ``int ||pi_lambda(f)||_HS^2 |lambda|^n dlambda`` with ``||f||_2^2``.

    The excluded gap ``(-delta, delta)`` costs ``O(delta)`` (the integrand is
    ``g_hat(lambda)``, which does not vanish at 0).  ``raw`` omits it;
    ``bridged`` adds the trapezoid ``delta * (h(-delta) + h(delta))`` and is the
    value used for ``relative_error``.

    Raises
    ------
    NumericError
        If ``tol`` is given and still missed after ``max_doublings`` panel doublings.
    """
    trace = []
    p = panels
    for _ in range(max_doublings + 1):
        rep = _plancherel_once(F, lambda_max, p, delta)
        trace.append((p, rep.relative_error))
        if tol is None or rep.relative_error <= tol:
            return rep
        p *= 2
    raise NumericError(
        "Plancherel quadrature did not reach tolerance; refinement trace: "
        + ", ".join(f"{k} panels -> {e:.3e}" for k, e in trace)
    )


def _plancherel_once(F, lambda_max, panels, delta) -> PlancherelReport:
    if not (0 < delta < lambda_max):
        raise InputError("need 0 < delta < lambda_max")
    n = F.n
    nodes, weights = _cross_section_rule(lambda_max, panels, delta)
    hs2 = hs_norm_squared(F, nodes)
    dens = np.abs(nodes) ** n
    raw = float(np.sum(weights * hs2 * dens))
    edge = hs_norm_squared(F, [-delta, delta]) * delta ** n
    bridged = raw + delta * float(edge.sum())
    ref = F.norm_squared()
    err_raw = abs(raw - ref) / ref if ref > 0 else abs(raw)
    err = abs(bridged - ref) / ref if ref > 0 else abs(bridged)
    table = tuple((float(l), float(w), float(h), float(d)) for l, w, h, d in zip(nodes, weights, hs2, dens))
    return PlancherelReport(ref, raw, bridged, err_raw, err, delta, lambda_max, panels, nodes.size, table)


def plancherel_refinement(F: GroupFunction, panels=(16, 32, 64), lambda_max: float = DEFAULT_LAMBDA_MAX,
                          delta: float = DEFAULT_DELTA) -> dict:
    """Errors under panel doubling and the observed orders ``log2(e_k / e_{k+1})``."""
    reps = [_plancherel_once(F, lambda_max, p, delta) for p in panels]
    errs = [r.relative_error for r in reps]
    orders = []
    for e0, e1 in zip(errs, errs[1:]):
        orders.append(math.log2(e0 / e1) if e0 > 0 and e1 > 0 else math.inf)
    return {
        "panels": list(panels),
        "relative_errors": errs,
        "relative_errors_raw": [r.relative_error_raw for r in reps],
        "orders": orders,
    }


def lemma_slice_identity(F: GroupFunction, lambdas) -> dict:
    """Tabulate ``g_hat(lambda)`` against ``||pi_lambda(f)||_HS^2 |lambda|^n``.

    The left side comes from the autocorrelation ``g``, the right side from
    the Schrödinger kernel; the two routes share no code beyond the samples.
    """
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    g = slice_autocorrelation(F)
    left = np.real(transform_at(g, lam))
    right = hs_norm_squared(F, lam) * np.abs(lam) ** F.n
    scale = np.maximum(np.abs(left), np.abs(right))
    top = scale.max() if scale.size else 0.0
    rel = np.where(scale > 1e-30 * max(top, 1e-300), np.abs(left - right) / np.where(scale > 0, scale, 1), 0.0)
    return {
        "lambdas": lam.tolist(),
        "g_hat": left.tolist(),
        "hs_weighted": right.tolist(),
        "max_relative_discrepancy": float(rel.max()) if rel.size else 0.0,
        "min_g_hat": float(left.min()) if left.size else 0.0,
        "min_hs_weighted": float(right.min()) if right.size else 0.0,
    }


def weighted_plancherel_mass(F: GroupFunction, p: DecayProfile, lambda_max: float = DEFAULT_LAMBDA_MAX,
                             panels: int = DEFAULT_PANELS, delta: float = DEFAULT_DELTA,
                             norm: str = "central") -> float:
    """``int ||pi_nu(f)||_HS^2 exp(2 psi) |Pf(nu)| dnu`` over the cross-section.

    ``norm="central"`` uses ``psi(|nu_1|)``; ``norm="full"`` uses
    ``psi(||nu||)``.  On ``H_n`` the cross-section points are
    ``nu = (lambda, 0, ..., 0)``, so the two agree there.
    """
    nodes, weights = _cross_section_rule(lambda_max, panels, delta)
    reps = np.zeros((nodes.size, F.algebra.dim))
    reps[:, 0] = nodes
    r = np.abs(nodes) if norm == "central" else np.linalg.norm(reps, axis=1)
    if norm not in ("central", "full"):
        raise InputError("norm must be 'central' or 'full'")
    hs2 = hs_norm_squared(F, nodes)
    logs = np.log(np.maximum(hs2, 1e-300)) + 2 * evaluate_profile(p, r) + F.n * np.log(np.abs(nodes))
    vals = np.where(hs2 > 0, np.exp(np.minimum(logs, 700.0)), 0.0)
    return float(np.sum(weights * vals))


def ingham_nilpotent_check(F: GroupFunction, p: DecayProfile, lambda_max: float | None = None,
                           panels_per_unit: int = 2, zero_tol: float = 1e-12) -> dict:
    """Weighted Plancherel mass under band doubling, combined with the criterion.

    A nonzero ``f`` whose weighted mass stays finite for a weight with a
    divergent criterion integral is flagged as inconsistent at grid scale.
    """
    nyq = 0.5 / F.dt
    top = nyq if lambda_max is None else min(float(lambda_max), nyq)
    bands = []
    B = 1.0
    while B < top * (1 - 1e-12):
        bands.append(B)
        B *= 2
    bands.append(top)
    masses = []
    for B in bands:
        panels = max(4, int(math.ceil(panels_per_unit * B)))
        masses.append(weighted_plancherel_mass(F, p, B, panels))
    inc = np.diff(masses)
    growing = bool(len(inc) >= 2 and inc[-1] > 0.05 * max(masses[-1], 1e-300) and inc[-1] >= 0.8 * inc[-2])
    finite = bool(np.isfinite(masses[-1]) and masses[-1] < 1e300 and not growing)
    crit = criterion(p).classification
    norm2 = F.norm_squared()
    nonzero = F.samples.peak() > zero_tol
    g = slice_autocorrelation(F)
    G = forward_transform(g)
    reduction = log_integral(G, p, floor=max(1e-300, 1e-13 * float(np.abs(G.values).max())))
    if not nonzero:
        verdict = "consistent"
    elif crit == "divergent" and finite:
        verdict = "inconsistent-at-grid-scale"
    else:
        verdict = "consistent"
    return {
        "verdict": verdict,
        "criterion": crit,
        "norm_squared": norm2,
        "bands": bands,
        "weighted_masses": masses,
        "mass_growing": growing,
        "mass_finite": finite,
        "reduction": reduction.to_dict(),
    }


def central_construction(g: SampledFunction, h: GroupFunction, delta: float | None = None) -> GroupFunction:
    """``f(x) = int_Z g(t) h(t^-1 x) dt``, a convolution along the centre.

    Raises
    ------
    InputError
        If ``g`` is not one-dimensional, its spacing differs from the central
        spacing of ``h``, or its support is not inside ``[-delta, delta]``.
    """
    if g.dims != 1:
        raise InputError("g must be a function on R")
    if not math.isclose(g.spacing[0], h.dt, rel_tol=1e-12):
        raise InputError(f"g spacing {g.spacing[0]!r} differs from the central spacing {h.dt!r}")
    v = np.abs(g.values)
    peak = v.max()
    if peak > 0:
        if max(v[0], v[-1]) >= 1e-12 * peak:
            raise InputError("g does not vanish at the edges of its grid")
        if delta is not None:
            t = g.axis(0)
            if np.any(v[np.abs(t) > delta * (1 + 1e-12)] >= 1e-12 * peak):
                raise InputError(f"g is not supported in [-{delta:g}, {delta:g}]")
    f = h.samples
    shape = (-1,) + (1,) * (f.dims - 1)
    vals = fftconvolve(f.values, g.values.reshape(shape), axes=0) * h.dt
    origin = f.origin.copy()
    origin[0] += g.origin[0]
    out = SampledFunction(origin, f.spacing, vals, f"central({g.label}, {f.label})")
    return GroupFunction(h.algebra, out, h.check_support)


def factorization_check(f: GroupFunction, g: SampledFunction, h: GroupFunction, lambdas) -> dict:
    """``||pi(f)||_HS^2`` against ``|g_hat|^2 ||pi(h)||_HS^2`` at each lambda."""
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    left = hs_norm_squared(f, lam)
    ghat = transform_at(g, lam)
    right = np.abs(ghat) ** 2 * hs_norm_squared(h, lam)
    scale = np.maximum(left, right)
    top = scale.max() if scale.size else 0.0
    live = scale > 1e-30 * max(top, 1e-300)
    rel = np.zeros(lam.shape)
    rel[live] = np.abs(left[live] - right[live]) / scale[live]
    return {
        "lambdas": lam.tolist(),
        "hs2_f": left.tolist(),
        "product": right.tolist(),
        "max_relative_error": float(rel.max()) if rel.size else 0.0,
    }


def mass_bound_check(f: GroupFunction, g: SampledFunction, h: GroupFunction, p: DecayProfile,
                     lambda_max: float = DEFAULT_LAMBDA_MAX, panels: int = DEFAULT_PANELS,
                     delta: float = DEFAULT_DELTA) -> dict:
    """Weighted mass of ``f`` against ``C ||h||^2`` with ``C = max |g_hat|^2 e^{2 psi}``.

    ``C * sum_i w_i H_i`` (``H_i`` the Plancherel integrand of ``h`` at the
    quadrature nodes) bounds the discrete mass exactly; ``C ||h||_2^2`` is its
    continuum counterpart.
    """
    nodes, weights = _cross_section_rule(lambda_max, panels, delta)
    n = f.n
    hs_f = hs_norm_squared(f, nodes)
    hs_h = hs_norm_squared(h, nodes)
    dens = np.abs(nodes) ** n
    e2 = np.exp(2 * evaluate_profile(p, np.abs(nodes)))
    mass = float(np.sum(weights * hs_f * e2 * dens))
    C = float(np.max(np.abs(transform_at(g, nodes)) ** 2 * e2))
    h_quad = float(np.sum(weights * hs_h * dens))
    h_norm2 = h.norm_squared()
    return {
        "weighted_mass": mass,
        "C": C,
        "bound_quadrature": C * h_quad,
        "bound_norm": C * h_norm2,
        "h_norm_squared": h_norm2,
        "holds_quadrature": bool(mass <= C * h_quad * (1 + 1e-10)),
        "holds_norm": bool(mass <= C * h_norm2 * (1 + 1e-3)),
    }
