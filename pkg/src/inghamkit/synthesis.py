"""Compactly supported functions with prescribed spectral decay.

The construction convolves many normalized indicators
``(1/(2a)) 1_[-a, a]``.  Their transforms multiply, so

    f_hat(xi) = prod_k sinc(2 a_k xi)            (numpy's normalized sinc)

and ``supp f = [-sum a_k, sum a_k]``.  Gaps are grouped in dyadic levels:
level ``k`` (``k = 1..K``) holds ``2**(k-1)`` copies of one gap ``b_k`` with
level mass ``2**(k-1) b_k`` proportional to ``psi(2**k) / 2**k``.  The level
masses therefore sum like the dyadic form of ``int psi(t)/t^2 dt`` while the
multiplicity supplies enough factors to beat ``exp(psi)`` on each octave.

The module also holds the two convolution reductions: smoothing a compactly
supported function by a bump (:func:`mollify`) and shrinking a vanishing ball
while trading a weighted ``L^q`` spectral bound for an ``L^1`` one
(:func:`reduce_weighted`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import logsumexp

from .errors import ContractError, InputError, ResolutionError
from .grid import (
    SampledFunction,
    Spectrum,
    _check_budget,
    convolve,
    forward_transform,
    inverse_transform,
    vanishing_radius,
)
from .weights import DecayProfile, criterion, evaluate_profile

__all__ = [
    "DEFAULT_LEVELS",
    "GapSequence",
    "GridSpec",
    "ReductionReport",
    "gaps_from_profile",
    "ingham_spectrum",
    "ingham_log_modulus",
    "default_grid",
    "ingham_function",
    "tensor_ingham",
    "envelope_scan",
    "envelope_stability",
    "bump",
    "mollify",
    "weighted_spectral_mass",
    "reduce_weighted",
]

DEFAULT_LEVELS = 10

# gaps below this fraction of l are dropped; double precision cannot place
# such a gap on any grid the budget allows
GAP_FLOOR = 2.0 ** -40

_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class GapSequence:
    """Dyadic blocks of equal gaps.

    Attributes
    ----------
    level_gaps : ndarray
        One gap per level, nonincreasing.
    multiplicities : ndarray of int
        How often each level gap is repeated.
    target_halfwidth : float
        The support budget ``l``; ``total <= l``.
    profile : dict or None
        Serialized profile the gaps were derived from.
    """

    level_gaps: np.ndarray
    multiplicities: np.ndarray
    target_halfwidth: float
    profile: dict | None = None

    def __post_init__(self):
        b = np.array(self.level_gaps, dtype=float).ravel()
        m = np.array(self.multiplicities, dtype=np.int64).ravel()
        l = float(self.target_halfwidth)
        if b.size == 0 or b.shape != m.shape:
            raise InputError("need one multiplicity per level gap")
        if not np.all(np.isfinite(b)) or np.any(b <= 0):
            raise InputError("gaps must be positive and finite")
        if np.any(m < 1):
            raise InputError("multiplicities must be positive")
        if np.any(np.diff(b) > 1e-15 * b[0]):
            raise InputError("gaps must be nonincreasing")
        if not (l > 0 and math.isfinite(l)):
            raise InputError("target halfwidth must be positive")
        if float(np.dot(m, b)) > l * (1 + 1e-12):
            raise InputError(f"gaps sum to {np.dot(m, b)!r}, more than l = {l!r}")
        for arr in (b, m):
            arr.flags.writeable = False
        object.__setattr__(self, "level_gaps", b)
        object.__setattr__(self, "multiplicities", m)
        object.__setattr__(self, "target_halfwidth", l)

    @property
    def truncation_index(self) -> int:
        return int(self.level_gaps.size)

    @property
    def count(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def gaps(self) -> np.ndarray:
        """Every gap, repeated according to its multiplicity."""
        return np.repeat(self.level_gaps, self.multiplicities)

    @property
    def level_masses(self) -> np.ndarray:
        return self.level_gaps * self.multiplicities

    @property
    def total(self) -> float:
        return float(np.sum(self.level_masses))

    @property
    def smallest(self) -> float:
        return float(self.level_gaps[-1])

    @classmethod
    def single(cls, gaps, l=None) -> "GapSequence":
        """Plain sequence ``a_1 >= a_2 >= ...`` without grouping."""
        gaps = np.asarray(gaps, dtype=float)
        total = float(gaps.sum())
        return cls(gaps, np.ones(gaps.size, dtype=int), total if l is None else l)

    def to_dict(self) -> dict:
        return {
            "target_halfwidth": self.target_halfwidth,
            "levels": [
                {"gap": float(b), "multiplicity": int(m)}
                for b, m in zip(self.level_gaps, self.multiplicities)
            ],
            "total": self.total,
            "profile": self.profile,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GapSequence":
        try:
            levels = data["levels"]
            return cls(
                [lv["gap"] for lv in levels],
                [lv["multiplicity"] for lv in levels],
                data["target_halfwidth"],
                data.get("profile"),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed gap sequence: {exc}") from exc


def gaps_from_profile(p: DecayProfile, l: float, K: int = DEFAULT_LEVELS) -> GapSequence:
    """Gap levels whose transform decays at least like ``exp(-psi)``.

    Level ``k`` carries mass proportional to ``psi(2**k)/2**k``; the masses are
    scaled so that all gaps add up to ``l (1 - 2**-K)``.

    Raises
    ------
    ContractError
        If the criterion integral of ``p`` is not convergent or ``p`` is neither
        non-decreasing nor of product form.
    """
    if not (isinstance(K, (int, np.integer)) and K >= 1):
        raise InputError("K must be a positive integer")
    l = float(l)
    if not (l > 0 and math.isfinite(l)):
        raise InputError("l must be a positive number")
    meta = _profile_meta(p)
    k = np.arange(1, K + 1)
    psi = np.asarray(evaluate_profile(p, 2.0 ** k), dtype=float)
    if not np.any(psi > 0):
        # no decay requested: one indicator already qualifies
        return GapSequence([l / 2], [1], l, meta)
    report = criterion(p)
    if report.classification != "convergent":
        raise ContractError(
            f"profile {p.name!r}: criterion integral is {report.classification}; "
            "no compactly supported function can decay that fast"
        )
    if not (p.is_nondecreasing or p.is_product_form):
        raise ContractError(f"profile {p.name!r} is neither non-decreasing nor of product form")
    mult = 2 ** (k - 1)
    weight = psi / 2.0 ** k / mult
    keep = weight > 0
    weight, mult = weight[keep], mult[keep]
    order = np.argsort(-weight, kind="stable")
    weight, mult = weight[order], mult[order]
    budget = l * (1 - 2.0 ** -K)
    gaps = weight * budget / np.dot(mult, weight)
    small = gaps < GAP_FLOOR * l
    if small.any():
        cut = int(np.argmax(small))
        if cut == 0:
            raise ContractError("every gap falls below floating-point resolution")
        warnings.warn(
            f"truncating at {cut} of {gaps.size} levels: gaps below {GAP_FLOOR:.1e} * l",
            RuntimeWarning,
            stacklevel=2,
        )
        weight, mult = weight[:cut], mult[:cut]
        budget = l * (1 - 2.0 ** -cut)
        gaps = weight * budget / np.dot(mult, weight)
    return GapSequence(gaps, mult, l, meta)


def _profile_meta(p):
    try:
        return p.to_dict()
    except InputError:
        return {"name": p.name, "family": p.family}


def ingham_log_modulus(g: GapSequence, xi) -> tuple:
    """``(log|f_hat(xi)|, sign)`` of the analytic product, overflow free."""
    xi = np.asarray(xi, dtype=float)
    logmag = np.zeros(xi.shape)
    negative = np.zeros(xi.shape, dtype=np.int64)
    for b, m in zip(g.level_gaps, g.multiplicities):
        s = np.sinc(2 * b * xi)
        logmag += m * np.log(np.maximum(np.abs(s), _TINY))
        if m % 2:
            negative += s < 0
    sign = np.where(negative % 2 == 1, -1.0, 1.0)
    return logmag, sign


def ingham_spectrum(g: GapSequence, xi):
    """``prod_k sin(2 pi a_k xi) / (2 pi a_k xi)`` at ``xi``.

    Every factor is bounded by 1, so the direct product can only underflow
    towards zero, which is harmless here.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.ones(xi.size)
    flat = xi.ravel()
    live = np.arange(xi.size)
    # high multiplicities first: they zero out most samples early
    for i in np.argsort(-g.multiplicities, kind="stable"):
        x = 2 * g.level_gaps[i] * flat[live]
        s = np.ones_like(x)
        nz = x != 0
        s[nz] = np.sin(np.pi * x[nz]) / (np.pi * x[nz])
        out[live] *= s ** int(g.multiplicities[i])
        live = live[out[live] != 0]
    return out.reshape(xi.shape)


@dataclass(frozen=True)
class GridSpec:
    """Symmetric sampling box ``[-halfwidth, halfwidth)`` with ``n`` points."""

    halfwidth: float
    n: int

    def __post_init__(self):
        if not (self.halfwidth > 0 and int(self.n) >= 2):
            raise InputError("grid needs a positive halfwidth and at least two points")

    @property
    def spacing(self) -> float:
        return 2 * self.halfwidth / self.n


def default_grid(g: GapSequence, oversample: float = 4.0, margin: float = 1.5) -> GridSpec:
    """Power-of-two grid covering ``[-margin l, margin l)`` with ``h <= a_K/oversample``."""
    L = margin * g.target_halfwidth
    need = 2 * L * oversample / g.smallest
    n = 1 << max(int(math.ceil(math.log2(need))), 4)
    _check_budget(n)
    return GridSpec(L, n)


def ingham_function(g: GapSequence, grid_spec: GridSpec | None = None) -> tuple:
    """Sample the Ingham function of ``g`` and its transform.

    The transform is the analytic product evaluated on the dual grid; ``f`` is
    its exact discrete inverse, so the pair is consistent to rounding.

    Returns
    -------
    (SampledFunction, Spectrum)

    Raises
    ------
    ResolutionError
        If the grid spacing exceeds a quarter of the smallest gap.
    """
    spec = grid_spec or default_grid(g)
    h = spec.spacing
    if h > g.smallest / 4 * (1 + 1e-12):
        raise ResolutionError(
            f"spacing {h:.3e} cannot resolve the smallest gap {g.smallest:.3e} (need <= gap/4)"
        )
    if spec.halfwidth < g.total:
        raise InputError("sampling box is smaller than the support")
    _check_budget(spec.n)
    origin = -spec.halfwidth
    shell = Spectrum(np.zeros(spec.n), [origin], [h])
    F = shell.with_values(ingham_spectrum(g, shell.frequencies[0]))
    f = inverse_transform(F, label=f"ingham K={g.truncation_index} l={g.target_halfwidth:g}")
    return f, F


def tensor_ingham(g: GapSequence, d: int, grid_spec: GridSpec | None = None) -> tuple:
    """``f(x_1) ... f(x_d)``, supported in the cube ``[-l, l]^d``.

    Pass gaps built for ``l / sqrt(d)`` to land inside the ball ``B(0, l)``.
    """
    if d < 1:
        raise InputError("dimension must be positive")
    f1, F1 = ingham_function(g, grid_spec)
    _check_budget(f1.values.size ** d)
    vals, spec = f1.values, F1.values
    for _ in range(d - 1):
        vals = np.multiply.outer(vals, f1.values)
        spec = np.multiply.outer(spec, F1.values)
    origin = np.full(d, f1.origin[0])
    spacing = np.full(d, f1.spacing[0])
    return (
        SampledFunction(origin, spacing, vals, f"{f1.label} ^{d}"),
        Spectrum(spec, origin, spacing),
    )


def envelope_scan(g: GapSequence, p: DecayProfile, band=(1.0, 1e4), step: float = 0.0125) -> dict:
    """Maximum of ``|f_hat(xi)| exp(psi(xi))`` over a dense sample of ``band``."""
    lo, hi = float(band[0]), float(band[1])
    if not (0 <= lo < hi):
        raise InputError("band must satisfy 0 <= lo < hi")
    n = int(math.ceil((hi - lo) / step)) + 1
    _check_budget(n)
    xi = np.linspace(lo, hi, n)
    logmag, _ = ingham_log_modulus(g, xi)
    log_env = logmag + evaluate_profile(p, xi)
    i = int(np.argmax(log_env))
    return {
        "band": [lo, hi],
        "samples": n,
        "log_max": float(log_env[i]),
        "max": float(np.exp(min(log_env[i], 700.0))),
        "argmax": float(xi[i]),
        "finite": bool(np.isfinite(log_env[i]) and log_env[i] < 700.0),
    }


def envelope_stability(g: GapSequence, p: DecayProfile, band=(1.0, 1e4), step: float = 0.0125) -> dict:
    """Compare the envelope maximum on ``band`` with the one on the doubled band."""
    first = envelope_scan(g, p, band, step)
    second = envelope_scan(g, p, (band[0], 2 * band[1]), step)
    change = math.expm1(min(second["log_max"] - first["log_max"], 700.0))
    return {
        "band": first,
        "doubled": second,
        "relative_change": change,
        "stable": bool(first["finite"] and second["finite"] and change < 0.05),
    }


def _aligned_axes(h: np.ndarray, radius: float):
    """Grid nodes ``j h`` (per axis) covering ``[-radius, radius]``."""
    return [np.arange(-int(math.ceil(radius / s)), int(math.ceil(radius / s)) + 1) * s for s in h]


def bump(l: float, spacing, d: int = 1) -> SampledFunction:
    """Smooth bump supported in ``B(0, l/2)``, unit discrete integral.

    Samples ``exp(-1/(1 - |2x/l|^2))`` on the nodes ``j * spacing``; the node
    at the origin is always present, so the bump is centred exactly.
    """
    if not (l > 0):
        raise InputError("bump radius must be positive")
    h = np.broadcast_to(np.asarray(spacing, dtype=float), (d,)).copy()
    axes = _aligned_axes(h, l / 2)
    mesh = np.meshgrid(*axes, indexing="ij")
    u = sum((2 * x / l) ** 2 for x in mesh)
    vals = np.zeros(u.shape)
    inside = u < 1
    vals[inside] = np.exp(-1.0 / (1.0 - u[inside]))
    mass = vals.sum() * np.prod(h)
    if mass == 0:
        raise ResolutionError("grid too coarse to sample the bump")
    origin = np.array([a[0] for a in axes])
    return SampledFunction(origin, h, vals / mass, f"bump l={l:g}")


def _cell_diagonal(f: SampledFunction) -> float:
    return float(np.sqrt(np.sum(f.spacing ** 2)))


def mollify(f0: SampledFunction, l: float) -> SampledFunction:
    """``f0 * phi_1`` with ``phi_1`` the bump of :func:`bump` for radius ``l/2``.

    ``f0`` must be supported in the closed ball ``B(0, l/2)``; the result is
    then supported in the closed ball ``B(0, l)``.
    """
    peak = f0.peak()
    if peak > 0:
        r = f0.radius()
        outside = r > l / 2 * (1 + 1e-9)
        if np.any(np.abs(f0.values[outside]) >= 1e-12 * peak):
            worst = float(r[outside & (np.abs(f0.values) >= 1e-12 * peak)].max())
            raise InputError(f"f0 reaches radius {worst:.6g}, beyond l/2 = {l / 2:.6g}")
    phi = bump(l, f0.spacing, f0.dims)
    return convolve(f0, phi, label=f"mollified({f0.label})")


def _log_abs(values):
    mag = np.abs(values)
    with np.errstate(divide="ignore"):
        return np.log(mag)


def weighted_spectral_mass(F: Spectrum, p: DecayProfile, q: float = 1.0, N: float = 0.0,
                           band: float | None = None) -> dict:
    """``sum |F|^q exp(q psi(|xi|)) / (1+|xi|)^N`` times the cell volume.

    Computed in the log domain.  ``band`` restricts the sum to ``|xi| <= band``;
    without it the FFT noise floor times ``exp(psi)`` can dominate for fast
    growing weights.  ``q = inf`` gives the weighted supremum instead.
    """
    if not (q >= 1):
        raise InputError("q must be at least 1")
    if N < 0:
        raise InputError("N must be nonnegative")
    r = F.radius()
    logs = _log_abs(F.values) + evaluate_profile(p, r)
    weight = N * np.log1p(r)
    mask = np.ones(r.shape, dtype=bool) if band is None else r <= band
    if math.isinf(q):
        log_mass = float(np.max((logs - weight)[mask]))
    else:
        log_mass = float(logsumexp((q * logs - weight)[mask])) + math.log(F.cell_volume)
    return {
        "q": q,
        "N": N,
        "band": band,
        "log_mass": log_mass,
        "mass": math.exp(log_mass) if log_mass < 700 else math.inf,
        "finite": bool(np.isfinite(log_mass) or log_mass == -math.inf),
    }


@dataclass(frozen=True)
class ReductionReport:
    """Outcome of :func:`reduce_weighted`.

    ``log_*`` fields are natural logarithms; the matching plain fields are
    ``inf`` on overflow.  The Hölder chain reads
    ``lhs <= lq_mass**(1/q) * dual_factor``; ``loose_rhs`` is the cruder bound
    that keeps the whole envelope ``(1+|xi|)**N`` on the dual side.
    """

    l: float
    q: float
    N: float
    input_radius: float
    output_radius: float
    structural_radius: float
    expected_radius: float
    cell_diagonal: float
    halving_ok: bool
    log_lhs: float
    log_lq_mass: float
    log_dual_factor: float
    log_loose_dual_factor: float
    holder_slack: float
    holder_ok: bool
    transform_mismatch: float
    band: float | None

    @property
    def lhs(self) -> float:
        return _safe_exp(self.log_lhs)

    @property
    def holder_rhs(self) -> float:
        return _safe_exp(self.log_lq_mass / _qq(self.q) + self.log_dual_factor)

    @property
    def loose_rhs(self) -> float:
        return _safe_exp(self.log_lq_mass / _qq(self.q) + self.log_loose_dual_factor)

    def to_dict(self) -> dict:
        out = {k: _jsonable(v) for k, v in self.__dict__.items()}
        out.update(lhs=_jsonable(self.lhs), holder_rhs=_jsonable(self.holder_rhs),
                   loose_rhs=_jsonable(self.loose_rhs))
        return out


def _qq(q):
    return 1.0 if math.isinf(q) else q


def _safe_exp(x):
    if x == -math.inf:
        return 0.0
    return math.exp(x) if x < 700 else math.inf


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _pad_to(f: SampledFunction, shape) -> np.ndarray:
    out = np.zeros(shape, dtype=np.complex128)
    out[tuple(slice(0, n) for n in f.shape)] = f.values
    return out


def _lse(a):
    a = np.asarray(a).ravel()
    if a.size == 0 or np.all(a == -np.inf):
        return -math.inf
    return float(logsumexp(a))


def reduce_weighted(f: SampledFunction, p: DecayProfile, q: float, N: float, l: float,
                    band: float | None = None) -> tuple:
    """Convolve ``f`` (vanishing on ``B(0, l)``) with a bump of radius ``l/2``.

    The output vanishes on ``B(0, l/2)`` and its weighted ``L^1`` spectral mass
    is bounded through Hölder's inequality by the weighted ``L^q`` mass of
    ``f`` times a dual norm of the bump transform.  Both sides are evaluated
    on the same dual grid, where the bound holds exactly.

    Returns
    -------
    (SampledFunction, ReductionReport)
    """
    if not (q >= 1):
        raise InputError("q must be at least 1")
    if N < 0 or not (l > 0):
        raise InputError("need N >= 0 and l > 0")
    r_in = vanishing_radius(f)
    if r_in < l * (1 - 1e-9):
        raise ContractError(f"f does not vanish on B(0, {l:g}): support reaches radius {r_in:.6g}")
    phi = bump(l, f.spacing, f.dims)
    out = convolve(f, phi, label=f"reduced({f.label})")

    # zero padding to the output grid makes the product identity exact
    Ff = forward_transform(SampledFunction(f.origin, f.spacing, _pad_to(f, out.shape)))
    Fphi = forward_transform(SampledFunction(phi.origin, phi.spacing, _pad_to(phi, out.shape)))
    Fout = forward_transform(out)
    product = Ff.values * Fphi.values
    scale = max(np.abs(product).max(), 1e-300)
    mismatch = float(np.abs(Fout.values - product).max() / scale)

    r = Fout.radius()
    mask = np.ones(r.shape, dtype=bool) if band is None else r <= band
    psi = evaluate_profile(p, r)
    log_cell = math.log(Fout.cell_volume)
    la, lb = _log_abs(Ff.values), _log_abs(Fphi.values)
    log1pr = np.log1p(r)

    log_lhs = _lse((la + lb + psi)[mask]) + log_cell
    if math.isinf(q):
        log_lq = float(np.max((la + psi - N * log1pr)[mask]))
        log_dual = _lse((N * log1pr + lb)[mask]) + log_cell
        log_loose = log_dual
    else:
        log_lq = _lse((q * (la + psi) - N * log1pr)[mask]) + log_cell
        log_dual = _dual_norm(lb + N / q * log1pr, q, mask, log_cell)
        log_loose = _dual_norm(lb + N * log1pr, q, mask, log_cell)
    log_rhs = log_lq / _qq(q) + log_dual
    if log_lhs == -math.inf:
        slack = 0.0
    else:
        slack = float(log_lhs - log_rhs)
    holder_ok = bool(log_lhs == -math.inf or slack <= math.log1p(1e-8))

    r_out = vanishing_radius(out)
    structural = _structural_radius(f, phi, out)
    diag = _cell_diagonal(f)
    # the bump has radius l/2, so the vanishing radius drops by exactly l/2
    expected = r_in - l / 2
    if math.isinf(r_in):
        halving_ok = math.isinf(r_out)
    else:
        halving_ok = bool(r_out >= l / 2 - diag and abs(structural - expected) <= diag)
    report = ReductionReport(
        float(l), float(q), float(N), r_in, r_out, structural, expected, diag, halving_ok,
        log_lhs, log_lq, log_dual, log_loose, slack, holder_ok, mismatch, band,
    )
    return out, report


def _dual_norm(log_vals, q, mask, log_cell):
    """log of the ``l^{q'}`` norm, ``q' = q/(q-1)``, of ``exp(log_vals)``."""
    if q == 1:
        return float(np.max(log_vals[mask]))
    qd = q / (q - 1)
    return (_lse(qd * log_vals[mask]) + log_cell) / qd


def _structural_radius(f, phi, out) -> float:
    """Radius of the exact sample support of ``f * phi`` (Minkowski sum of supports)."""
    mf = (np.abs(f.values) > 0).astype(float)
    mp = (phi.values > 0).astype(float)
    if not mf.any():
        return math.inf
    reach = fftconvolve(mf, mp) > 0.5
    return float(out.radius()[reach].min())
