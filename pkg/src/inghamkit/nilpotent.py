"""Nilpotent Lie algebras given by structure constants.

Indices are 1-based in files, reports and jump sets (matching the usual
``X_1, ..., X_d`` labelling) and 0-based in arrays.  The basis is expected to
be adapted to a flag of ideals ``g_j = span{X_1..X_j}`` with
``[g, g_j] ⊆ g_{j-1}``, i.e. ``c[i, j, k] = 0`` unless ``k < min(i, j)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.linalg import null_space

from .errors import DomainError, InputError, NumericError, UnsupportedStepError, ValidationError

__all__ = [
    "DEFAULT_SEED",
    "RANK_TOL",
    "LieAlgebraSpec",
    "ValidationReport",
    "OrbitData",
    "GenericStratum",
    "abelian",
    "heisenberg_algebra",
    "filiform4",
    "load_algebra",
    "algebra_from_dict",
    "save_algebra",
    "builtin_algebra",
    "BUILTIN_ALGEBRAS",
    "bracket",
    "validate_algebra",
    "lower_central_series",
    "bch_multiply",
    "bch_inverse",
    "coadjoint_form",
    "jump_indices",
    "generic_stratum",
    "pfaffian_abs",
    "skew_tridiagonalize",
    "numerical_rank",
]

DEFAULT_SEED = 0x16A3
DEFAULT_SAMPLES = 64
RANK_TOL = 1e-10
IDENTITY_TOL = 1e-12
MAX_BCH_STEP = 4


@dataclass(frozen=True, eq=False)
class LieAlgebraSpec:
    """Structure constants ``[X_i, X_j] = sum_k c[i, j, k] X_k`` (0-based arrays)."""

    c: np.ndarray
    labels: tuple = ()
    name: str = ""

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1 or c.shape[0] < 1:
            raise InputError(f"structure constants must be a d x d x d array, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InputError("structure constants must be finite")
        d = c.shape[0]
        labels = tuple(self.labels) or tuple(f"X{i + 1}" for i in range(d))
        if len(labels) != d:
            raise InputError(f"need {d} labels, got {len(labels)}")
        c.flags.writeable = False
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @classmethod
    def from_brackets(cls, dim: int, brackets, labels=(), name: str = "") -> "LieAlgebraSpec":
        """Build from 1-based triples ``(i, j, k, value)`` with antisymmetric completion."""
        if dim < 1:
            raise InputError("dimension must be positive")
        c = np.zeros((dim, dim, dim))
        for entry in brackets:
            try:
                i, j, k, v = entry
                i, j, k = int(i), int(j), int(k)
                v = float(v)
            except (TypeError, ValueError) as exc:
                raise InputError(f"bad bracket entry {entry!r}") from exc
            if not all(1 <= a <= dim for a in (i, j, k)):
                raise InputError(f"bracket index out of range in {entry!r}")
            if i == j:
                raise ValidationError("[X_i, X_i] must vanish", [("antisymmetry", (i, j, k))])
            if i > j:
                i, j, v = j, i, -v
            c[i - 1, j - 1, k - 1] += v
            c[j - 1, i - 1, k - 1] -= v
        return cls(c, labels, name)

    def brackets(self) -> list:
        """Nonzero constants as 1-based ``[i, j, k, value]`` with ``i < j``."""
        d = self.dim
        return [
            [i + 1, j + 1, k + 1, float(self.c[i, j, k])]
            for i in range(d) for j in range(i + 1, d) for k in range(d)
            if self.c[i, j, k] != 0
        ]

    def to_dict(self) -> dict:
        return {"name": self.name, "dim": self.dim, "labels": list(self.labels),
                "brackets": self.brackets()}

    @cached_property
    def step(self) -> int:
        series = lower_central_series(self)
        if series[-1].shape[0]:
            raise ValidationError(f"algebra {self.name!r} is not nilpotent", [("nilpotency", ())])
        return len(series) - 1


def abelian(d: int = 3) -> LieAlgebraSpec:
    return LieAlgebraSpec(np.zeros((d, d, d)), name=f"abelian R^{d}")


def heisenberg_algebra(n: int = 1) -> LieAlgebraSpec:
    """``X_1 = Z``, ``X_{1+i} = X_i``, ``X_{1+n+i} = Y_i`` with ``[X_i, Y_i] = Z``."""
    if n < 1:
        raise InputError("n must be positive")
    labels = ["Z"] + [f"X{i}" for i in range(1, n + 1)] + [f"Y{i}" for i in range(1, n + 1)]
    brackets = [(1 + i, 1 + n + i, 1, 1.0) for i in range(1, n + 1)]
    return LieAlgebraSpec.from_brackets(2 * n + 1, brackets, labels, f"heisenberg H{n}")


def filiform4() -> LieAlgebraSpec:
    """Step-3 filiform algebra: ``[X4, X3] = X2``, ``[X4, X2] = X1``."""
    return LieAlgebraSpec.from_brackets(4, [(4, 3, 2, 1.0), (4, 2, 1, 1.0)], (), "filiform 4")


BUILTIN_ALGEBRAS = ("abelian3", "heisenberg1", "heisenberg2", "filiform4")


def _from_document(doc: dict, source: str) -> LieAlgebraSpec:
    for key in ("dim", "brackets"):
        if key not in doc:
            raise InputError(f"{source}: missing field '{key}'")
    return LieAlgebraSpec.from_brackets(
        int(doc["dim"]), doc["brackets"], tuple(doc.get("labels", ())), doc.get("name", source)
    )


def algebra_from_dict(doc: dict) -> LieAlgebraSpec:
    """Inverse of :meth:`LieAlgebraSpec.to_dict`."""
    return _from_document(doc, doc.get("name", "algebra"))


def load_algebra(path) -> LieAlgebraSpec:
    """Read a JSON algebra document ``{dim, labels, brackets}``; names of shipped algebras also work."""
    p = Path(path)
    if not p.exists():
        # shipped algebras by name, with or without the .alg suffix
        name = p.stem if p.suffix == ".alg" and p.parent == Path(".") else str(path)
        if name in BUILTIN_ALGEBRAS:
            return builtin_algebra(name)
    if not p.exists():
        raise InputError(f"no such algebra file: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    return _from_document(doc, p.stem)


def builtin_algebra(name: str) -> LieAlgebraSpec:
    if name not in BUILTIN_ALGEBRAS:
        raise InputError(f"unknown algebra {name!r}; shipped: {', '.join(BUILTIN_ALGEBRAS)}")
    text = resources.files("inghamkit").joinpath("data").joinpath("algebras").joinpath(f"{name}.alg").read_text()
    return _from_document(json.loads(text), name)


def save_algebra(spec: LieAlgebraSpec, path) -> Path:
    p = Path(path)
    p.write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    return p


def bracket(spec: LieAlgebraSpec, x, y) -> np.ndarray:
    """``[x, y]`` for coordinate vectors (broadcast over leading axes)."""
    return np.einsum("...i,...j,ijk->...k", x, y, spec.c)


def numerical_rank(a, tol: float = RANK_TOL) -> int:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def _span(rows) -> np.ndarray:
    """Orthonormal rows spanning the given vectors (empty array for zero span)."""
    rows = np.atleast_2d(rows)
    if rows.size == 0 or not np.any(rows):
        return np.zeros((0, rows.shape[-1]))
    u, s, vt = np.linalg.svd(rows, full_matrices=False)
    r = int(np.count_nonzero(s > RANK_TOL * s[0]))
    return vt[:r]


def lower_central_series(spec: LieAlgebraSpec) -> list:
    """Orthonormal bases of ``g^1 = g, g^{k+1} = [g, g^k]`` down to ``{0}`` (or ``d+1`` terms)."""
    d = spec.dim
    series = [np.eye(d)]
    while series[-1].shape[0] > 0 and len(series) <= d + 1:
        cur = series[-1]
        nxt = _span(np.einsum("ijk,aj->iak", spec.c, cur).reshape(-1, d))
        if nxt.shape[0] == cur.shape[0]:
            # stationary nonzero term: not nilpotent
            series.append(nxt)
            break
        series.append(nxt)
    return series


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    step: int | None
    nilpotent: bool
    violations: tuple = ()

    @property
    def first_violation(self):
        return self.violations[0] if self.violations else None

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "step": self.step,
            "nilpotent": self.nilpotent,
            "violations": [{"identity": n, "indices": list(t)} for n, t in self.violations],
        }


def _triples(mask) -> list:
    return [tuple(int(v) + 1 for v in idx) for idx in np.argwhere(mask)]


def validate_algebra(spec: LieAlgebraSpec, raise_on_error: bool = True) -> ValidationReport:
    """Check antisymmetry, Jacobi, nilpotency, the flag property and centrality of ``X_1``.

    Raises
    ------
    ValidationError
        Listing every violated identity with its 1-based index tuple, unless
        ``raise_on_error`` is false.
    """
    c = spec.c
    scale = max(1.0, float(np.abs(c).max()))
    tol = IDENTITY_TOL * scale
    violations = []
    anti = np.abs(c + c.transpose(1, 0, 2)) > tol
    violations += [("antisymmetry", t) for t in _triples(anti)]
    jac = (
        np.einsum("jlk,ikm->ijlm", c, c)
        + np.einsum("lik,jkm->ijlm", c, c)
        + np.einsum("ijk,lkm->ijlm", c, c)
    )
    bad = np.abs(jac) > tol * scale
    violations += [("jacobi", t) for t in _triples(bad) if t[0] < t[1] < t[2]]
    i, j, k = np.indices(c.shape)
    flag = (np.abs(c) > tol) & (k >= np.minimum(i, j))
    violations += [("flag", t) for t in _triples(flag)]
    central = np.abs(c[:, 0, :]) > tol
    violations += [("center", (int(a) + 1, 1, int(b) + 1)) for a, b in np.argwhere(central)]
    series = lower_central_series(spec)
    nilpotent = series[-1].shape[0] == 0
    step = len(series) - 1 if nilpotent else None
    if not nilpotent:
        violations.append(("nilpotency", ()))
    report = ValidationReport(not violations, step, nilpotent, tuple(violations))
    if violations and raise_on_error:
        shown = ", ".join(f"{n}{list(t)}" for n, t in violations[:8])
        more = "" if len(violations) <= 8 else f" (+{len(violations) - 8} more)"
        raise ValidationError(f"algebra {spec.name!r} fails: {shown}{more}", violations)
    return report


def bch_multiply(spec: LieAlgebraSpec, x, y) -> np.ndarray:
    """Group product in exponential coordinates via the BCH series through degree 4.

    Exact for nilpotency step at most 4; higher steps raise.
    """
    step = spec.step
    if step > MAX_BCH_STEP:
        raise UnsupportedStepError(f"BCH series is implemented through step {MAX_BCH_STEP}, algebra has step {step}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != spec.dim or y.shape[-1] != spec.dim:
        raise InputError(f"coordinates must have {spec.dim} components")

    def br(a, b):
        return bracket(spec, a, b)

    xy = br(x, y)
    z = x + y + 0.5 * xy
    if step >= 3:
        z = z + (br(x, xy) - br(y, xy)) / 12.0
    if step >= 4:
        z = z - (br(y, br(x, xy)) + br(x, br(y, xy))) / 48.0
    return z


def bch_inverse(spec: LieAlgebraSpec, x) -> np.ndarray:
    """Inverse in exponential coordinates, ``-x``."""
    return -np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class OrbitData:
    """Coadjoint data of one functional; index sets are 1-based tuples."""

    nu: np.ndarray
    B: np.ndarray = field(repr=False)
    radical_basis: np.ndarray = field(repr=False)
    rank: int
    jump_set: tuple
    P: tuple
    Q: tuple
    pf_abs: float

    @property
    def orbit_dim(self) -> int:
        return len(self.jump_set)

    def to_dict(self) -> dict:
        return {
            "nu": self.nu.tolist(),
            "B": self.B.tolist(),
            "radical_dim": int(self.radical_basis.shape[1]),
            "rank": self.rank,
            "jump_set": list(self.jump_set),
            "P": list(self.P),
            "Q": list(self.Q),
            "pf_abs": self.pf_abs,
        }


def _functional(spec, nu) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (spec.dim,):
        raise InputError(f"functional needs {spec.dim} coordinates, got shape {nu.shape}")
    if not np.all(np.isfinite(nu)):
        raise InputError("functional coordinates must be finite")
    return nu


def _form(spec, nu) -> np.ndarray:
    return np.einsum("ijk,k->ij", spec.c, nu)


def _radical(B) -> np.ndarray:
    d = B.shape[0]
    if not np.any(B):
        return np.eye(d)
    return null_space(B, rcond=RANK_TOL)


def _jumps_from_radical(R: np.ndarray) -> tuple:
    """Indices ``j`` with ``dim(r + g_j) > dim(r + g_{j-1})``, by incremental projection."""
    d = R.shape[0]
    basis = _span(R.T) if R.size else np.zeros((0, d))
    jumps = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        resid = e - basis.T @ (basis @ e)
        resid = resid - basis.T @ (basis @ resid)
        nr = np.linalg.norm(resid)
        if nr > math.sqrt(RANK_TOL):
            jumps.append(j + 1)
            basis = np.vstack([basis, resid / nr])
    return tuple(jumps)


def jump_indices(spec: LieAlgebraSpec, nu) -> tuple:
    """Sorted 1-based jump set ``e(nu)``."""
    nu = _functional(spec, nu)
    return _jumps_from_radical(_radical(_form(spec, nu)))


def coadjoint_form(spec: LieAlgebraSpec, nu) -> OrbitData:
    """Skew form ``B[i, j] = nu([X_i, X_j])``, its radical and jump set."""
    nu = _functional(spec, nu)
    B = _form(spec, nu)
    R = _radical(B)
    rank = spec.dim - R.shape[1]
    jumps = _jumps_from_radical(R)
    Q = tuple(j for j in range(1, spec.dim + 1) if j not in jumps)
    pf = _pf_abs_matrix(B[np.ix_([j - 1 for j in jumps], [j - 1 for j in jumps])]) if jumps else 1.0
    return OrbitData(nu, B, R, rank, jumps, jumps, Q, pf)


def skew_tridiagonalize(A) -> tuple:
    """Orthogonal ``Q`` and tridiagonal ``T = Q^T A Q`` for skew ``A`` (Householder)."""
    T = np.array(A, dtype=float)
    n = T.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = T[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0 or np.all(x[1:] == 0):
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0] if x[0] != 0 else 1.0)
        v /= np.linalg.norm(v)
        Hk = np.eye(n)
        Hk[k + 1:, k + 1:] -= 2.0 * np.outer(v, v)
        T = Hk @ T @ Hk
        Q = Q @ Hk
    return Q, T


def _pf_abs_matrix(A) -> float:
    n = A.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        raise DomainError(f"Pfaffian of an odd-sized ({n}) block vanishes")
    scale = float(np.abs(A).max())
    if scale == 0:
        raise DomainError("restricted form is zero; functional is not generic")
    _, T = skew_tridiagonalize(A)
    pivots = np.abs(T[np.arange(0, n, 2), np.arange(1, n, 2)])
    if pivots.min() <= RANK_TOL * scale:
        raise DomainError("restricted form is singular; functional is not in the generic stratum")
    return float(np.prod(pivots))


def pfaffian_abs(spec: LieAlgebraSpec, nu, P) -> float:
    """``|Pf(nu)| = sqrt(det B_{nu,P})`` via skew tridiagonalization.

    Raises
    ------
    DomainError
        If ``B`` restricted to ``P x P`` is singular (``nu`` not generic) or ``#P`` is odd.
    """
    nu = _functional(spec, nu)
    P = [int(j) for j in P]
    if any(not 1 <= j <= spec.dim for j in P) or len(set(P)) != len(P):
        raise InputError(f"P must be distinct indices in 1..{spec.dim}")
    B = _form(spec, nu)
    idx = [j - 1 for j in P]
    return _pf_abs_matrix(B[np.ix_(idx, idx)])


@dataclass(frozen=True)
class GenericStratum:
    P: tuple
    Q: tuple
    fraction: float
    samples: int
    seed: int
    rank_counts: dict

    def to_dict(self) -> dict:
        return {
            "P": list(self.P),
            "Q": list(self.Q),
            "certificate": {
                "fraction": self.fraction,
                "samples": self.samples,
                "seed": self.seed,
                "rank_counts": {str(k): v for k, v in sorted(self.rank_counts.items())},
            },
        }


def generic_stratum(spec: LieAlgebraSpec, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED) -> GenericStratum:
    """Jump set of maximal orbit dimension among random functionals.

    The certificate ``fraction`` is the share of samples whose jump set equals
    ``P``; generic behaviour is a polynomial non-vanishing condition, so it is
    expected to be 1.
    """
    if samples < 1:
        raise InputError("need at least one sample")
    rng = np.random.default_rng(seed)
    nus = rng.standard_normal((samples, spec.dim))
    sets, ranks = [], {}
    for nu in nus:
        e = jump_indices(spec, nu)
        sets.append(e)
        ranks[len(e)] = ranks.get(len(e), 0) + 1
    top = max(len(e) for e in sets)
    if top == 0 and np.any(spec.c):
        raise NumericError("every sampled functional has a zero form; reseed")
    candidates = sorted({e for e in sets if len(e) == top}, key=lambda e: (-sets.count(e), e))
    P = candidates[0]
    Q = tuple(j for j in range(1, spec.dim + 1) if j not in P)
    return GenericStratum(P, Q, sets.count(P) / samples, samples, seed, ranks)
