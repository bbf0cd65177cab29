"""Decay profiles psi and the criterion integral I = int_1^oo psi(t)/t^2 dt.

Catalog families are classified exactly from their tail behaviour; tabulated
profiles and user-supplied theta functions fall back to a growth fit over
geometrically spaced partial integrals and may come back ``inconclusive``.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gamma

from .errors import InputError, NumericError

__all__ = [
    "DecayProfile",
    "CriterionReport",
    "log_profile",
    "log_power_profile",
    "power_profile",
    "linear_profile",
    "constant_profile",
    "zero_profile",
    "product_profile",
    "tabulated_profile",
    "evaluate_profile",
    "criterion",
    "radial_criterion_d",
    "sphere_area",
    "parse_profile",
    "profile_from_dict",
    "load_profile",
    "CATALOG_DECADES",
]

CATALOG_DECADES = tuple(10.0**k for k in range(1, 9))

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10

# growth-fit thresholds for profiles without a symbolic tail
SLOPE_FLOOR = 0.05  # per decade
CONVERGENT_RATIO = 0.5
DIVERGENT_RATIO = 0.8

_E = math.e
_FAMILIES = ("log", "log_power", "power", "linear", "constant", "zero", "product", "tabulated")
_MONOTONICITY = ("increasing", "product", "none")


@dataclass(frozen=True, eq=False)
class DecayProfile:
    """A weight ``psi: [0, oo) -> [0, oo)``.

    ``monotonicity`` is ``"increasing"`` (non-decreasing psi), ``"product"``
    (``psi = t * theta(t)`` with theta non-increasing to 0) or ``"none"``.
    Use the module-level constructors rather than instantiating directly.
    """

    family: str
    params: dict = field(default_factory=dict)
    scale: float = 1.0
    monotonicity: str = "none"
    name: str = ""
    theta_fn: Callable | None = None
    table: tuple | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InputError(f"unknown profile family {self.family!r}")
        if self.monotonicity not in _MONOTONICITY:
            raise InputError(f"unknown monotonicity {self.monotonicity!r}")
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise InputError("profile scale must be a finite nonnegative number")

    def __call__(self, t):
        return evaluate_profile(self, t)

    @property
    def is_product_form(self) -> bool:
        return self.monotonicity == "product"

    @property
    def is_nondecreasing(self) -> bool:
        if self.family == "log_power":
            # t/log(e+t)^beta is increasing on [0, oo) as long as beta < 3.15
            return self.params["beta"] <= 3.0
        if self.family == "tabulated":
            return bool(np.all(np.diff(self.table[1]) >= 0))
        if self.family == "product":
            return False
        return True

    def theta(self, t):
        """Decreasing factor of a product-form profile, ``psi(t) = t theta(t)``."""
        if not self.is_product_form:
            raise InputError(f"profile {self.name!r} is not of product form")
        t = _nonneg(t)
        s = self.scale
        if self.family == "log":
            return s / np.log(_E + t)
        if self.family == "log_power":
            return s / np.log(_E + t) ** self.params["beta"]
        if self.family == "zero":
            return np.zeros_like(t)
        return s * np.asarray(self.theta_fn(t), dtype=float)

    def scaled(self, c: float) -> "DecayProfile":
        return DecayProfile(
            self.family, dict(self.params), self.scale * c, self.monotonicity,
            f"{c:g}*({self.name})", self.theta_fn, self.table,
        )

    def to_dict(self) -> dict:
        if self.family == "product":
            raise InputError("profiles with a user theta function cannot be serialized")
        out = {
            "name": self.name,
            "family": self.family,
            "params": dict(self.params),
            "scale": self.scale,
            "monotonicity": self.monotonicity,
        }
        if self.table is not None:
            out["table"] = {"t": self.table[0].tolist(), "psi": self.table[1].tolist()}
        return out


def log_profile(scale: float = 1.0) -> DecayProfile:
    """``psi(t) = t / log(e + t)``."""
    return DecayProfile("log", {}, scale, "product", _named(scale, "t/log(e+t)"))


def log_power_profile(beta: float, scale: float = 1.0) -> DecayProfile:
    """``psi(t) = t / log(e + t)**beta``."""
    if beta <= 0:
        raise InputError("beta must be positive")
    return DecayProfile(
        "log_power", {"beta": float(beta)}, scale, "product",
        _named(scale, f"t/log(e+t)^{beta:g}"),
    )


def power_profile(alpha: float, scale: float = 1.0) -> DecayProfile:
    """``psi(t) = t**alpha``."""
    if alpha < 0:
        raise InputError("alpha must be nonnegative")
    return DecayProfile("power", {"alpha": float(alpha)}, scale, "increasing",
                        _named(scale, f"t^{alpha:g}"))


def linear_profile(a: float = 1.0) -> DecayProfile:
    return DecayProfile("linear", {}, a, "increasing", _named(a, "t"))


def constant_profile(c: float) -> DecayProfile:
    return DecayProfile("constant", {}, c, "increasing", f"{c:g}")


def zero_profile() -> DecayProfile:
    return DecayProfile("zero", {}, 1.0, "product", "0")


def product_profile(theta: Callable, name: str = "t*theta(t)") -> DecayProfile:
    """``psi(t) = t * theta(t)`` for a user theta, assumed non-increasing to 0."""
    return DecayProfile("product", {}, 1.0, "product", name, theta_fn=theta)


def tabulated_profile(t, values, monotonicity: str | None = None, name: str = "table") -> DecayProfile:
    """Linearly interpolated samples; held constant past the last sample."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != v.shape or t.size < 2:
        raise InputError("table needs matching 1-D arrays with at least 2 samples")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise InputError("table samples must be finite")
    if t[0] != 0 or np.any(np.diff(t) <= 0):
        raise InputError("table abscissae must start at 0 and increase strictly")
    if np.any(v < 0):
        raise InputError("profile values must be nonnegative")
    if monotonicity is None:
        monotonicity = "increasing" if np.all(np.diff(v) >= 0) else "none"
    t.flags.writeable = False
    v.flags.writeable = False
    return DecayProfile("tabulated", {}, 1.0, monotonicity, name, table=(t, v))


def _named(scale, body):
    return body if scale == 1.0 else f"{scale:g}*{body}"


def _nonneg(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise InputError("profiles are defined on [0, oo)")
    return t


def evaluate_profile(p: DecayProfile, t):
    """``psi(t)`` for scalar or array ``t >= 0``."""
    t = _nonneg(t)
    s = p.scale
    if p.family == "log":
        out = s * t / np.log(_E + t)
    elif p.family == "log_power":
        out = s * t / np.log(_E + t) ** p.params["beta"]
    elif p.family == "power":
        out = s * t ** p.params["alpha"]
    elif p.family == "linear":
        out = s * t
    elif p.family == "constant":
        out = np.full_like(t, s)
    elif p.family == "zero":
        out = np.zeros_like(t)
    elif p.family == "product":
        out = t * p.theta(t)
    else:
        out = s * np.interp(t, p.table[0], p.table[1])
    out = np.asarray(out, dtype=float)
    if np.any(out < 0):
        raise NumericError(f"profile {p.name!r} produced negative values")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CriterionReport:
    """Outcome of testing ``I = int_1^oo psi(t)/t^2 dt`` for divergence."""

    classification: str
    partial_integrals: tuple
    value: float | None
    method: str
    profile: str = ""
    detail: str = ""
    surface_constant: float = 1.0
    dimension: int = 1

    def __post_init__(self):
        if self.value is not None and self.classification != "convergent":
            raise ValueError("value is only reported for convergent integrals")

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "classification": self.classification,
            "method": self.method,
            "value": self.value,
            "dimension": self.dimension,
            "surface_constant": self.surface_constant,
            "partial_integrals": [{"T": T, "I": I} for T, I in self.partial_integrals],
            "detail": self.detail,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _quad(fn, a, b, what):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"quadrature failed on panel {what} = [{a:g}, {b:g}]: {exc}") from exc
    if not math.isfinite(val):
        raise NumericError(f"non-finite integral on panel {what} = [{a:g}, {b:g}]")
    return val, err


def _panel_integral(p: DecayProfile, T0: float, T1: float) -> float:
    """``int_{T0}^{T1} psi(t)/t^2 dt`` for one panel."""
    if p.family == "tabulated":
        return p.scale * _table_integral(p.table, T0, T1)
    # t = e^u flattens the integrand over a decade
    val, _ = _quad(lambda u: evaluate_profile(p, math.exp(u)) * math.exp(-u),
                   math.log(T0), math.log(T1), "t")
    return val


def _table_integral(table, T0, T1):
    """Exact integral of a piecewise-linear psi against 1/t^2 over [T0, T1]."""
    t, v = table
    knots = np.concatenate(([T0], t[(t > T0) & (t < T1)], [T1]))
    vals = np.interp(knots, t, v)
    a, b = knots[:-1], knots[1:]
    fa, fb = vals[:-1], vals[1:]
    slope = (fb - fa) / (b - a)
    intercept = fa - slope * a
    return float(np.sum(intercept * (1 / a - 1 / b) + slope * np.log(b / a)))


def _partials(p: DecayProfile, decades) -> tuple:
    out, total, lo = [], 0.0, 1.0
    for T in decades:
        total += _panel_integral(p, lo, T)
        out.append((float(T), float(total)))
        lo = T
    return tuple(out)


def _log_power_value(beta: float, scale: float, T: float, I_T: float) -> float:
    # tail int_T^oo dt/(t log(e+t)^beta); v = 1/log t turns it into a finite
    # algebraic-weight integral on [0, 1/log T]
    vmax = 1.0 / math.log(T)

    def smooth(v):
        if v == 0:
            return 1.0
        return (1.0 + v * math.log1p(math.exp(1.0 - 1.0 / v))) ** (-beta)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            tail, _ = integrate.quad(smooth, 0.0, vmax, weight="alg", wvar=(beta - 2.0, 0.0),
                                     epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL)
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"tail quadrature failed beyond T = {T:g}: {exc}") from exc
    return I_T + scale * tail


def _symbolic(p: DecayProfile):
    """Exact (classification, value-or-None, reason) for catalog families."""
    s = p.scale
    if s == 0 or p.family == "zero":
        return "convergent", 0.0, "psi vanishes identically"
    if p.family == "log":
        return "divergent", None, "psi(t)/t^2 ~ 1/(t log t), whose integral diverges like log log T"
    if p.family == "log_power":
        beta = p.params["beta"]
        if beta > 1:
            return "convergent", None, f"psi(t)/t^2 ~ 1/(t log^{beta:g} t) with exponent {beta:g} > 1"
        return "divergent", None, f"psi(t)/t^2 ~ 1/(t log^{beta:g} t) with exponent {beta:g} <= 1"
    if p.family == "power":
        alpha = p.params["alpha"]
        if alpha < 1:
            return "convergent", float(s / (1 - alpha)), f"psi(t)/t^2 = t^({alpha:g}-2), exponent below -1"
        return "divergent", None, f"psi(t)/t^2 = t^({alpha:g}-2), exponent at least -1"
    if p.family == "linear":
        return "divergent", None, "psi(t)/t^2 = a/t"
    if p.family == "constant":
        return "convergent", float(s), "psi(t)/t^2 = c/t^2"
    return None


def _growth_fit(partials):
    """Classify a table of partial integrals taken at T = 10, 100, ..."""
    if len(partials) < 4:
        return "inconclusive", None, "fewer than four decades of data"
    I = np.array([v for _, v in partials])
    logT = np.log10([T for T, _ in partials])
    inc = np.diff(np.concatenate(([0.0], I)))[-4:]
    slope = float(np.polyfit(logT[-4:], I[-4:], 1)[0])
    if np.all(inc <= 1e-15 * max(1.0, abs(I[-1]))):
        return "convergent", float(I[-1]), "partial integrals are flat"
    if np.any(inc[:-1] <= 0):
        ratio = 0.0 if inc[-1] <= 0 else float("inf")
    else:
        ratio = float(np.exp(np.mean(np.log(inc[1:] / inc[:-1]))))
    if ratio <= CONVERGENT_RATIO:
        tail = inc[-1] * ratio / (1 - ratio) if inc[-1] > 0 else 0.0
        return "convergent", float(I[-1] + tail), (
            f"per-decade increments shrink geometrically (ratio {ratio:.3g}); "
            "geometric tail added"
        )
    if abs(slope) < SLOPE_FLOOR:
        return "inconclusive", None, f"fitted slope {slope:.3g} per decade is below {SLOPE_FLOOR}"
    if ratio >= DIVERGENT_RATIO:
        return "divergent", None, (
            f"slope {slope:.3g} per decade with increment ratio {ratio:.3g}"
        )
    return "inconclusive", None, f"slope {slope:.3g}, increment ratio {ratio:.3g}"


def criterion(p: DecayProfile) -> CriterionReport:
    """Decide whether ``int_1^oo psi(t)/t^2 dt`` diverges."""
    sym = _symbolic(p)
    if sym is not None:
        partials = _partials(p, CATALOG_DECADES)
        cls, value, reason = sym
        if cls == "convergent" and value is None:
            T, I_T = partials[-1]
            value = _log_power_value(p.params["beta"], p.scale, T, I_T)
        return CriterionReport(cls, partials, value if cls == "convergent" else None,
                               "symbolic-tail", p.name, reason)
    decades = CATALOG_DECADES
    if p.family == "tabulated":
        decades = tuple(T for T in CATALOG_DECADES if T <= p.table[0][-1])
    partials = _partials(p, decades)
    cls, value, reason = _growth_fit(partials)
    return CriterionReport(cls, partials, value, "numeric-extrapolation", p.name, reason)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d (2 for d = 1)."""
    if d < 1:
        raise InputError("dimension must be positive")
    return 2 * math.pi ** (d / 2) / gamma(d / 2)


def radial_criterion_d(p: DecayProfile, d: int) -> CriterionReport:
    """``int_{|xi|>=1} theta(|xi|)/|xi|^d dxi`` in polar form.

    The radial integral equals ``|S^{d-1}| int_1^oo theta(t)/t dt``, i.e. the
    surface constant times the one-dimensional criterion of ``t theta(t)``.
    """
    if not p.is_product_form:
        raise InputError(f"profile {p.name!r} is not of product form")
    base = criterion(p)
    c = sphere_area(d)
    return CriterionReport(
        base.classification,
        tuple((T, c * I) for T, I in base.partial_integrals),
        None if base.value is None else c * base.value,
        base.method,
        base.profile,
        f"{base.detail}; reduced from R^{d} with |S^{d - 1}| = {c:.12g}",
        c,
        d,
    )


_NUM = r"[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?"
_GRAMMAR = [
    (re.compile(rf"^(?:(?P<s>{_NUM})\*)?t/log\(e\+t\)$"), "log"),
    (re.compile(rf"^(?:(?P<s>{_NUM})\*)?t/log\(e\+t\)\^(?P<p>{_NUM})$"), "log_power"),
    (re.compile(rf"^(?:(?P<s>{_NUM})\*)?t\^(?P<p>{_NUM})$"), "power"),
    (re.compile(rf"^(?:(?P<s>{_NUM})\*)?t$"), "linear"),
    (re.compile(rf"^(?P<s>{_NUM})$"), "constant"),
]


def parse_profile(text: str) -> DecayProfile:
    """Parse the catalog mini-language.

    Accepted forms (``s*`` prefix optional): ``t/log(e+t)``, ``t/log(e+t)^B``,
    ``t^A``, ``t``, and a bare number for a constant profile.
    """
    compact = re.sub(r"\s+", "", text)
    for pattern, family in _GRAMMAR:
        m = pattern.match(compact)
        if not m:
            continue
        s = float(m.group("s")) if m.group("s") else 1.0
        if family == "log":
            return log_profile(s)
        if family == "log_power":
            return log_power_profile(float(m.group("p")), s)
        if family == "power":
            return power_profile(float(m.group("p")), s)
        if family == "linear":
            return linear_profile(s)
        return zero_profile() if s == 0 else constant_profile(s)
    raise InputError(f"cannot parse profile {text!r}")


def profile_from_dict(spec: dict) -> DecayProfile:
    """Inverse of :meth:`DecayProfile.to_dict`."""
    family = spec.get("family")
    params = spec.get("params", {})
    scale = float(spec.get("scale", 1.0))
    if family == "tabulated":
        table = spec.get("table") or {}
        p = tabulated_profile(table.get("t", []), table.get("psi", []),
                              spec.get("monotonicity"), spec.get("name", "table"))
        return p if scale == 1.0 else p.scaled(scale)
    builders = {
        "log": lambda: log_profile(scale),
        "log_power": lambda: log_power_profile(params["beta"], scale),
        "power": lambda: power_profile(params["alpha"], scale),
        "linear": lambda: linear_profile(scale),
        "constant": lambda: constant_profile(scale),
        "zero": zero_profile,
    }
    if family not in builders:
        raise InputError(f"unknown or unserializable profile family {family!r}")
    try:
        return builders[family]()
    except KeyError as exc:
        raise InputError(f"profile family {family!r} needs parameter {exc}") from exc


def load_profile(path) -> DecayProfile:
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"profile file {path} is not valid JSON: {exc}") from exc
    return profile_from_dict(spec)
