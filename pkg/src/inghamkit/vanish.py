"""Half-space supports and the Paley-Wiener log-integral test.

A function supported in ``{x . eta <= s}`` is first moved so that the
half-space becomes ``{x_1 <= 0}``.  Its slices ``g_y(x_1)`` (partial transform
in the remaining variables) are then supported on a half line, and the
log-integral ``int |log|g_y_hat(t)|| / (1 + t^2) dt`` decides whether such a
slice can be nonzero.  Everything here is a numerical diagnostic: finite
grids can only show trends, never prove divergence.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates
from scipy.special import logsumexp

from .errors import ContractError, InputError
from .grid import (
    SUPPORT_THRESHOLD,
    SampledFunction,
    Spectrum,
    forward_transform,
    l2_norm,
    slice_transform,
)
from .weights import DecayProfile, criterion, evaluate_profile

__all__ = [
    "HalfSpace",
    "SupportReport",
    "LogIntegralReport",
    "PipelineReport",
    "LOG_FLOOR",
    "halfspace_support",
    "normalize_halfspace",
    "householder",
    "log_integral",
    "log_integrand_csv",
    "theorem23_pipeline",
]

LOG_FLOOR = 1e-300
FLOORED_LIMIT = 0.10
SLICE_SKIP = 1e-10
# relative FFT noise level used by the pipeline's floor
NOISE_LEVEL = 1e-13


@dataclass(frozen=True, eq=False)
class HalfSpace:
    """``{x : x . eta <= s}`` with a unit normal ``eta``."""

    eta: np.ndarray
    s: float = 0.0

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float)).copy()
        if eta.ndim != 1 or not np.all(np.isfinite(eta)):
            raise InputError("eta must be a finite vector")
        if abs(np.linalg.norm(eta) - 1.0) > 1e-12:
            raise InputError(f"eta must be a unit vector, |eta| = {np.linalg.norm(eta)!r}")
        if not math.isfinite(self.s):
            raise InputError("offset must be finite")
        eta.flags.writeable = False
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "s", float(self.s))

    @classmethod
    def from_direction(cls, v, s: float = 0.0) -> "HalfSpace":
        v = np.asarray(v, dtype=float)
        return cls(v / np.linalg.norm(v), s)

    @property
    def dims(self) -> int:
        return self.eta.size


@dataclass(frozen=True)
class SupportReport:
    holds: bool
    margin: float
    violations: int
    threshold: float

    def __bool__(self):
        return self.holds


def _projection(f: SampledFunction, eta: np.ndarray) -> np.ndarray:
    out = np.zeros(f.shape)
    for a, x in enumerate(f.axes()):
        shape = [1] * f.dims
        shape[a] = -1
        out = out + eta[a] * x.reshape(shape)
    return out


def _check_dims(f, h):
    if f.dims != h.dims:
        raise InputError(f"half-space lives in R^{h.dims}, function in R^{f.dims}")


def halfspace_support(f: SampledFunction, h: HalfSpace, threshold: float = SUPPORT_THRESHOLD) -> SupportReport:
    """Whether every sample with ``x . eta > s`` is below ``threshold * peak``.

    ``margin`` is the largest ``x . eta - s`` over samples above threshold, so
    it is positive exactly when the support pokes out of the half-space.
    """
    _check_dims(f, h)
    mag = np.abs(f.values)
    peak = mag.max()
    if peak == 0:
        return SupportReport(True, -math.inf, 0, threshold)
    proj = _projection(f, h.eta) - h.s
    tol = 1e-12 * max(1.0, float(np.max(np.abs(f.upper))), float(np.max(np.abs(f.origin))))
    live = mag >= threshold * peak
    margin = float(proj[live].max())
    bad = int(np.count_nonzero(live & (proj > tol)))
    return SupportReport(bad == 0, margin, bad, threshold)


def householder(eta: np.ndarray) -> np.ndarray:
    """Symmetric orthogonal matrix sending ``eta`` to ``e_1`` (identity if already there)."""
    d = eta.size
    e1 = np.zeros(d)
    e1[0] = 1.0
    v = eta - e1
    nv = np.linalg.norm(v)
    if nv < 1e-15:
        return np.eye(d)
    v = v / nv
    H = np.eye(d) - 2.0 * np.outer(v, v)
    # snap entries that are exact in exact arithmetic (axis-aligned normals)
    H[np.abs(H) < 1e-15] = 0.0
    return H


@dataclass(frozen=True)
class NormalizationReport:
    matrix: np.ndarray = field(repr=False)
    shift: np.ndarray = field(repr=False)
    norm_before: float = 0.0
    norm_after: float = 0.0
    relative_l2_error: float = 0.0
    clipped_mass: float = 0.0
    exact: bool = False


def normalize_halfspace(f: SampledFunction, h: HalfSpace, with_report: bool = False):
    """Resample ``f`` so that its supporting half-space becomes ``{x_1 <= 0}``.

    The new function is ``g(z) = f(H z + s eta)`` with ``H`` the Householder
    reflection exchanging ``eta`` and ``e_1``.  Values come from cubic spline
    interpolation (exact when ``H`` is a signed permutation and the shift lies
    on the grid); residual spline ringing on ``z_1 > 0`` is removed and its
    mass recorded.

    Raises
    ------
    ContractError
        If ``f`` is not supported in the half-space.
    """
    _check_dims(f, h)
    support = halfspace_support(f, h)
    if not support.holds:
        raise ContractError(
            f"support leaves the half-space by {support.margin:.6g} ({support.violations} samples)"
        )
    d = f.dims
    H = householder(h.eta)
    shift = h.s * h.eta
    identity = np.allclose(H, np.eye(d), atol=0) and h.s == 0
    if identity:
        g = f.with_values(f.values, label=f"normalized({f.label})")
        rep = NormalizationReport(H, shift, l2_norm(f), l2_norm(g), 0.0, 0.0, True)
        return (g, rep) if with_report else g

    hs = float(np.min(f.spacing))
    corners = np.array(np.meshgrid(*[[lo, hi] for lo, hi in zip(f.origin, f.upper - f.spacing)],
                                   indexing="ij")).reshape(d, -1).T
    image = (corners - shift) @ H.T
    lo = np.floor(image.min(axis=0) / hs + 1e-9) * hs
    hi = np.ceil(image.max(axis=0) / hs - 1e-9) * hs
    n = np.round((hi - lo) / hs).astype(int) + 1
    z_axes = [lo[a] + hs * np.arange(n[a]) for a in range(d)]
    Z = np.array(np.meshgrid(*z_axes, indexing="ij")).reshape(d, -1)
    X = H @ Z + shift[:, None]
    idx = (X - f.origin[:, None]) / f.spacing[:, None]
    on_nodes = bool(np.all(np.abs(idx - np.round(idx)) < 1e-9))
    if on_nodes:
        # signed permutation onto grid nodes: copy samples directly
        ii = np.round(idx).astype(int)
        inside = np.all((ii >= 0) & (ii < np.array(f.shape)[:, None]), axis=0)
        vals = np.zeros(ii.shape[1], dtype=np.complex128)
        vals[inside] = f.values[tuple(ii[:, inside])]
    else:
        re = map_coordinates(f.values.real, idx, order=3, mode="constant", cval=0.0)
        im = map_coordinates(f.values.imag, idx, order=3, mode="constant", cval=0.0)
        vals = re + 1j * im
    vals = vals.reshape(tuple(n))
    spill = z_axes[0] > 1e-12 * max(1.0, abs(z_axes[0]).max())
    spill_vals = vals[spill]
    clipped = float(np.sqrt(np.sum(np.abs(spill_vals) ** 2) * hs ** d))
    vals[spill] = 0.0
    g = SampledFunction(lo, np.full(d, hs), vals, f"normalized({f.label})")
    before, after = l2_norm(f), l2_norm(g)
    err = abs(after - before) / before if before > 0 else 0.0
    rep = NormalizationReport(H, shift, before, after, err, clipped, on_nodes)
    return (g, rep) if with_report else g


@dataclass(frozen=True)
class LogIntegralReport:
    """Log-integral diagnostics for one one-dimensional spectrum.

    ``minus_table`` rows are ``(T, int_{|t|<=T} log^-|F| w, int_{|t|<=T}
    log^-(|F| e^psi) w)`` with ``w = 1/(1+t^2)``, for doubling ``T``.
    """

    plus_part: float
    weighted_bound: float
    bound_holds: bool
    minus_table: tuple
    classification: str
    floored_fraction: float
    floor: float
    decomposition_ok: bool
    comparison_ok: bool
    comparison_samples: int
    degenerate: bool = False
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "plus_part": _num(self.plus_part),
            "weighted_bound": _num(self.weighted_bound),
            "bound_holds": self.bound_holds,
            "minus_table": [
                {"T": _num(T), "minus": _num(a), "minus_weighted": _num(b)}
                for T, a, b in self.minus_table
            ],
            "classification": self.classification,
            "floored_fraction": self.floored_fraction,
            "floor": self.floor,
            "decomposition_ok": self.decomposition_ok,
            "comparison_ok": self.comparison_ok,
            "comparison_samples": self.comparison_samples,
            "degenerate": self.degenerate,
            "detail": self.detail,
        }


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _doubling(tmax: float, t0: float) -> list:
    T, out = t0, []
    while T < tmax * (1 - 1e-12):
        out.append(T)
        T *= 2
    out.append(tmax)
    return out


def _classify_minus(table, floored_fraction) -> tuple:
    if floored_fraction > FLOORED_LIMIT:
        return "inconclusive", f"{floored_fraction:.1%} of samples hit the floor"
    parts = np.array([row[1] for row in table])
    if parts.size < 4:
        return "inconclusive", "fewer than four doubling steps"
    inc = np.diff(parts)
    last = inc[-3:]
    if np.all(last <= 1e-14 * max(1.0, parts[-1])):
        return "convergent", "partials stationary"
    if np.all(last[:-1] > 0):
        ratio = float(np.median(last[1:] / last[:-1]))
    else:
        ratio = 0.0
    if ratio >= 0.8:
        return "divergent-trend", f"doubling increments keep ratio {ratio:.3f}"
    if ratio <= 0.6:
        return "convergent", f"doubling increments shrink with ratio {ratio:.3f}"
    return "inconclusive", f"doubling ratio {ratio:.3f} between thresholds"


def log_integral(F: Spectrum, p: DecayProfile, floor: float = LOG_FLOOR, t0: float = 1.0) -> LogIntegralReport:
    """log+/log- decomposition of ``int |log(|F| e^psi)| / (1+t^2)``.

    Samples with ``|F| < floor`` are replaced by ``floor`` and counted; more
    than ten percent floored samples make the classification inconclusive.
    """
    if F.dims != 1:
        raise InputError("log_integral needs a one-dimensional spectrum")
    t = F.frequencies[0]
    dt = float(F.frequency_spacing[0])
    mag = np.abs(F.values)
    if not np.any(mag > 0):
        return LogIntegralReport(0.0, 0.0, True, (), "degenerate", 1.0, floor, True, True, 0,
                                 True, "identically zero spectrum: vanishing is certified")
    floored = mag < floor
    frac = float(np.mean(floored))
    logF = np.log(np.maximum(mag, floor))
    psi = evaluate_profile(p, np.abs(t))
    logW = logF + psi
    w = 1.0 / (1.0 + t ** 2)

    plus = np.maximum(logW, 0.0)
    minusF = np.maximum(-logF, 0.0)
    minusW = np.maximum(-logW, 0.0)
    plus_part = float(np.sum(plus * w) * dt)
    log_bound = float(logsumexp(logW + np.log(w))) + math.log(dt)
    bound = math.exp(log_bound) if log_bound < 700 else math.inf
    bound_ok = plus_part <= bound * (1 + 1e-12) + 1e-300

    ok = ~floored
    decomposition = bool(np.all(np.abs(logF[ok]) == np.maximum(logF[ok], 0) + minusF[ok]))
    small = ok & (logW <= 0)
    comparison = bool(np.all(minusF[small] >= minusW[small]))

    tmax = float(np.max(np.abs(t)))
    table = []
    for T in _doubling(tmax, t0):
        sel = np.abs(t) <= T
        table.append((T, float(np.sum((minusF * w)[sel]) * dt), float(np.sum((minusW * w)[sel]) * dt)))
    cls, why = _classify_minus(table, frac)
    return LogIntegralReport(plus_part, bound, bool(bound_ok), tuple(table), cls, frac, floor,
                             decomposition, comparison, int(np.count_nonzero(small)), False, why)


def log_integrand_csv(F: Spectrum, p: DecayProfile, floor: float = LOG_FLOOR, path=None) -> str:
    """Rows ``t, log|F|, psi, log+(|F|e^psi), log-|F|, floored`` for plotting."""
    if F.dims != 1:
        raise InputError("log_integrand_csv needs a one-dimensional spectrum")
    t = F.frequencies[0]
    mag = np.abs(F.values)
    logF = np.log(np.maximum(mag, floor))
    psi = evaluate_profile(p, np.abs(t))
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["t", "log_abs_F", "psi", "log_plus_weighted", "log_minus", "floored"])
    for row in zip(t, logF, psi, np.maximum(logF + psi, 0), np.maximum(-logF, 0), mag < floor):
        wr.writerow([repr(float(v)) for v in row[:5]] + [int(row[5])])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


@dataclass(frozen=True)
class PipelineReport:
    verdict: str
    consistency: str
    criterion: str
    norm: float
    at_noise_floor: bool
    log_weighted_mass: float
    slices_total: int
    slices_tested: int
    slice_reports: tuple
    floor: float
    diagnostics: dict

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "consistency": self.consistency,
            "criterion": self.criterion,
            "norm": self.norm,
            "at_noise_floor": self.at_noise_floor,
            "log_weighted_mass": _num(self.log_weighted_mass),
            "slices_total": self.slices_total,
            "slices_tested": self.slices_tested,
            "floor": self.floor,
            "slices": [dict(eta=list(map(float, eta)), **r.to_dict()) for eta, r in self.slice_reports],
            "diagnostics": self.diagnostics,
        }


def _directional_mass(F: Spectrum, p, q, N) -> float:
    """log of ``sum |F|^q e^{q psi(|xi_1|)} / (1+|xi|)^N`` times the cell volume."""
    xi1 = np.abs(F.mesh()[0])
    with np.errstate(divide="ignore"):
        logF = np.log(np.abs(F.values))
    lr = np.log1p(F.radius())
    psi = evaluate_profile(p, xi1)
    if math.isinf(q):
        return float(np.max(logF + psi - N * lr))
    a = (q * (logF + psi) - N * lr).ravel()
    if np.all(a == -np.inf):
        return -math.inf
    return float(logsumexp(a)) + math.log(F.cell_volume)


def theorem23_pipeline(f: SampledFunction, h: HalfSpace, p: DecayProfile, q: float = 2.0,
                       N: float = 0.0, zero_tol: float = 1e-12) -> PipelineReport:
    """Half-space vanishing pipeline.

    Normalizes the half-space to ``{x_1 <= 0}``, takes slices ``g_y`` in the
    transverse variables, and runs :func:`log_integral` on each nonnegligible
    slice.  The verdict is ``"must-vanish"`` when the criterion integral of
    ``p`` diverges (then any nonzero ``f`` contradicts the hypotheses, which is
    recorded in ``consistency``) and ``"theorem-silent"`` otherwise.
    """
    if not (q >= 1):
        raise InputError("q must be at least 1")
    g, norm_rep = normalize_halfspace(f, h, with_report=True)
    crit = criterion(p).classification
    norm = l2_norm(f)
    at_floor = bool(f.peak() <= zero_tol)

    if g.dims == 1:
        slices = [(np.zeros(0), g)]
    else:
        fam = slice_transform(g)
        norms = fam.slice_norms().ravel()
        top = norms.max()
        slices = [
            (fam.eta(k), fam[k]) for k in range(len(fam))
            if top > 0 and norms[k] >= SLICE_SKIP * top
        ]
    total = 1 if g.dims == 1 else int(np.prod(g.shape[1:]))
    spectra = [(eta, forward_transform(s)) for eta, s in slices]
    scale = max((float(np.abs(S.values).max()) for _, S in spectra), default=0.0)
    floor = max(LOG_FLOOR, NOISE_LEVEL * scale)
    reports = tuple((eta, log_integral(S, p, floor)) for eta, S in spectra)

    full = forward_transform(g)
    log_mass = _directional_mass(full, p, q, N)
    classes = [r.classification for _, r in reports]
    if crit == "divergent":
        verdict = "must-vanish"
        consistency = "consistent" if at_floor else "contradiction"
    else:
        verdict = "theorem-silent"
        consistency = "consistent"
    diagnostics = {
        "weighted_mass_finite_on_grid": bool(log_mass < 700),
        "slice_classes": {c: classes.count(c) for c in sorted(set(classes))},
        "normalization_exact": norm_rep.exact,
        "normalization_l2_error": norm_rep.relative_l2_error,
        "q": q,
        "N": N,
    }
    if consistency == "contradiction":
        diagnostics["explanation"] = (
            "f is nonzero and half-space supported, yet the weight has a divergent criterion "
            "integral; the finite grid mass cannot extend to the continuum"
        )
    return PipelineReport(verdict, consistency, crit, norm, at_floor, log_mass, total,
                          len(reports), reports, floor, diagnostics)
