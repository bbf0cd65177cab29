"""Uniform grids on R^d and the Fourier transform with kernel exp(-2 pi i x.xi).

A :class:`SampledFunction` is a complex array together with the origin and the
per-axis spacing of the grid it lives on.  Its transform is the Riemann sum

    F(xi) = sum_n f(x_n) exp(-2 pi i x_n . xi) * cell_volume

evaluated on the DFT-dual grid ``xi_k = k / (N h)``, ``k = -N//2, ..., (N-1)//2``.
With this choice the forward and inverse transforms are exact inverses of each
other and Parseval holds exactly (up to rounding) on every grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from scipy.signal import fftconvolve

from .errors import CapacityError, InputError

__all__ = [
    "CONVENTION",
    "MAX_SAMPLES",
    "SUPPORT_THRESHOLD",
    "SampledFunction",
    "Spectrum",
    "SliceFamily",
    "dual_frequencies",
    "forward_transform",
    "inverse_transform",
    "transform_at",
    "l2_norm",
    "l2_norm_spectrum",
    "convolve",
    "slice_transform",
    "support_mask",
    "vanishing_radius",
    "max_outside_ball",
]

CONVENTION = "exp(-2*pi*i*x.xi)"

# complex128 samples; 2**26 of them is 1 GiB
MAX_SAMPLES = 1 << 26

# support decisions are relative to the peak magnitude
SUPPORT_THRESHOLD = 1e-12


def _vector(value, d: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(d, float(arr))
    if arr.shape != (d,):
        raise InputError(f"{name} must have {d} components, got shape {arr.shape}")
    return arr.copy()


def _check_budget(count: int) -> None:
    if count > MAX_SAMPLES:
        raise CapacityError(
            f"{count} samples exceed the memory budget of {MAX_SAMPLES}"
        )


def dual_frequencies(n: int, spacing: float) -> np.ndarray:
    """Frequencies ``k / (n h)`` for ``k = -n//2, ..., (n-1)//2``, ascending."""
    return np.fft.fftshift(np.fft.fftfreq(n, d=spacing))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Samples ``values[i_1, ..., i_d] = f(origin + i * spacing)``.

    The array is copied to complex128 and frozen on construction.
    """

    origin: np.ndarray
    spacing: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.ndim == 0 or 0 in values.shape:
            raise InputError("values must be a non-empty array with at least one axis")
        _check_budget(values.size)
        d = values.ndim
        origin = _vector(self.origin, d, "origin")
        spacing = _vector(self.spacing, d, "spacing")
        if not np.all(np.isfinite(spacing)) or np.any(spacing <= 0):
            raise InputError(f"spacing must be strictly positive, got {spacing}")
        if not np.all(np.isfinite(origin)):
            raise InputError("origin must be finite")
        values.flags.writeable = False
        origin.flags.writeable = False
        spacing.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)

    @classmethod
    def from_callable(
        cls,
        fn: Callable[..., np.ndarray],
        lo,
        hi,
        n,
        label: str = "",
    ) -> "SampledFunction":
        """Sample ``fn`` on ``[lo, hi)`` per axis with ``n`` points per axis.

        ``fn`` receives one ``indexing='ij'`` mesh array per axis.
        """
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        d = lo.size
        hi = _vector(hi, d, "hi")
        n = np.broadcast_to(np.asarray(n, dtype=int), (d,))
        if np.any(n < 1) or np.any(hi <= lo):
            raise InputError("need hi > lo and n >= 1 on every axis")
        _check_budget(int(np.prod(n)))
        spacing = (hi - lo) / n
        axes = [lo[a] + spacing[a] * np.arange(n[a]) for a in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        values = np.broadcast_to(fn(*mesh), tuple(n))
        return cls(lo, spacing, values, label)

    @property
    def dims(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def upper(self) -> np.ndarray:
        """Upper corner ``origin + extent * spacing`` of the physical box."""
        return self.origin + np.asarray(self.shape) * self.spacing

    def axis(self, a: int) -> np.ndarray:
        return self.origin[a] + self.spacing[a] * np.arange(self.shape[a])

    def axes(self) -> list:
        return [self.axis(a) for a in range(self.dims)]

    def mesh(self) -> list:
        return np.meshgrid(*self.axes(), indexing="ij")

    def radius(self) -> np.ndarray:
        """Euclidean norm of every grid point."""
        r2 = np.zeros(self.shape)
        for a, x in enumerate(self.axes()):
            shape = [1] * self.dims
            shape[a] = -1
            r2 = r2 + x.reshape(shape) ** 2
        return np.sqrt(r2)

    def peak(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values, label: str | None = None) -> "SampledFunction":
        return SampledFunction(
            self.origin, self.spacing, values, self.label if label is None else label
        )

    def __add__(self, other):
        _require_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        _require_same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__


def _require_same_grid(f: SampledFunction, g: SampledFunction) -> None:
    if (
        f.shape != g.shape
        or not np.allclose(f.origin, g.origin, rtol=0, atol=1e-12 * np.max(f.spacing))
        or not np.allclose(f.spacing, g.spacing, rtol=1e-12, atol=0)
    ):
        raise InputError("functions live on different grids")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Samples of a Fourier transform on the DFT-dual grid of a spatial grid.

    ``spatial_origin`` and ``spatial_spacing`` identify the originating grid;
    the frequency axes are derived from them and checked against
    ``frequencies`` when those are supplied explicitly.
    """

    values: np.ndarray
    spatial_origin: np.ndarray
    spatial_spacing: np.ndarray
    frequencies: tuple = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.ndim == 0 or min(values.shape) < 1:
            raise InputError("spectrum values must be a non-empty array")
        d = values.ndim
        origin = _vector(self.spatial_origin, d, "spatial_origin")
        spacing = _vector(self.spatial_spacing, d, "spatial_spacing")
        if np.any(spacing <= 0):
            raise InputError("spatial spacing must be positive")
        dual = tuple(dual_frequencies(n, h) for n, h in zip(values.shape, spacing))
        if self.frequencies is not None:
            given = tuple(np.asarray(f, dtype=float) for f in self.frequencies)
            if len(given) != d:
                raise InputError("one frequency axis per dimension required")
            for a, (g, ref) in enumerate(zip(given, dual)):
                scale = np.max(np.abs(ref)) if ref.size > 1 else 1.0
                if g.shape != ref.shape or not np.allclose(g, ref, rtol=0, atol=1e-9 * scale):
                    raise InputError(f"axis {a}: frequencies are not the DFT-dual grid")
        for arr in (values, origin, spacing, *dual):
            arr.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "spatial_origin", origin)
        object.__setattr__(self, "spatial_spacing", spacing)
        object.__setattr__(self, "frequencies", dual)

    @property
    def convention(self) -> str:
        return CONVENTION

    @property
    def dims(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def frequency_spacing(self) -> np.ndarray:
        return 1.0 / (np.asarray(self.shape) * self.spatial_spacing)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.frequency_spacing))

    @property
    def nyquist(self) -> np.ndarray:
        return 0.5 / self.spatial_spacing

    def mesh(self) -> list:
        return np.meshgrid(*self.frequencies, indexing="ij")

    def radius(self) -> np.ndarray:
        r2 = np.zeros(self.shape)
        for a, xi in enumerate(self.frequencies):
            shape = [1] * self.dims
            shape[a] = -1
            r2 = r2 + xi.reshape(shape) ** 2
        return np.sqrt(r2)

    def with_values(self, values) -> "Spectrum":
        return Spectrum(values, self.spatial_origin, self.spatial_spacing)


def _phase(origin, freqs, sign: float) -> np.ndarray:
    out = np.ones([len(f) for f in freqs], dtype=np.complex128)
    for a, (x0, xi) in enumerate(zip(origin, freqs)):
        shape = [1] * len(freqs)
        shape[a] = -1
        out = out * np.exp(sign * 2j * np.pi * x0 * xi).reshape(shape)
    return out


def forward_transform(f: SampledFunction) -> Spectrum:
    """Riemann-sum Fourier transform of ``f`` on its dual grid."""
    _check_budget(f.values.size)
    if not np.all(np.isfinite(f.values)):
        raise InputError("samples must be finite")
    freqs = [dual_frequencies(n, h) for n, h in zip(f.shape, f.spacing)]
    raw = np.fft.fftshift(np.fft.fftn(f.values))
    values = raw * _phase(f.origin, freqs, -1.0) * f.cell_volume
    return Spectrum(values, f.origin, f.spacing)


def inverse_transform(F: Spectrum, label: str = "") -> SampledFunction:
    """Exact inverse of :func:`forward_transform`."""
    if not np.all(np.isfinite(F.values)):
        raise InputError("spectrum samples must be finite")
    scaled = F.values * _phase(F.spatial_origin, F.frequencies, 1.0)
    values = np.fft.ifftn(np.fft.ifftshift(scaled)) / np.prod(F.spatial_spacing)
    return SampledFunction(F.spatial_origin, F.spatial_spacing, values, label)


def transform_at(f: SampledFunction, *frequencies) -> np.ndarray:
    """Riemann-sum transform at arbitrary frequencies, one array per axis.

    Returns the transform on the outer product of the given axes, so a 1-D
    function evaluated at ``xi`` yields an array shaped like ``xi``.
    """
    if len(frequencies) != f.dims:
        raise InputError(f"need {f.dims} frequency arrays, got {len(frequencies)}")
    out = f.values
    shapes = []
    for a, xi in enumerate(frequencies):
        xi = np.asarray(xi, dtype=float)
        shapes.append(xi.shape)
        kernel = np.exp(-2j * np.pi * np.outer(xi.ravel(), f.axis(a))) * f.spacing[a]
        # contract the current leading spatial axis, append the frequency axis
        out = np.tensordot(out, kernel, axes=([0], [1]))
    return out.reshape(sum((s for s in shapes), ()))


def l2_norm(f: SampledFunction) -> float:
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.cell_volume))


def l2_norm_spectrum(F: Spectrum) -> float:
    return float(np.sqrt(np.sum(np.abs(F.values) ** 2) * F.cell_volume))


def convolve(f: SampledFunction, g: SampledFunction, label: str = "") -> SampledFunction:
    """Linear convolution ``(f*g)(x) = int f(x-y) g(y) dy`` on the Minkowski-sum grid.

    The result has ``n_f + n_g - 1`` samples per axis and origin
    ``origin_f + origin_g``; it is computed spectrally with full zero padding,
    so no wrap-around occurs.
    """
    if f.dims != g.dims:
        raise InputError("convolution needs equal dimensions")
    if not np.allclose(f.spacing, g.spacing, rtol=1e-12, atol=0):
        raise InputError(f"spacing mismatch: {f.spacing} vs {g.spacing}")
    _check_budget(int(np.prod(np.asarray(f.shape) + np.asarray(g.shape) - 1)))
    values = fftconvolve(f.values, g.values) * f.cell_volume
    return SampledFunction(f.origin + g.origin, f.spacing, values, label)


@dataclass(frozen=True, eq=False)
class SliceFamily:
    """Partial transforms ``g_eta(x) = F_{d-1} f(x, eta)`` in all axes but the first.

    ``values[i, k_2, ..., k_d]`` is ``g_eta(x_i)`` at the dual point
    ``eta = (frequencies[0][k_2], ...)``.
    """

    origin: float
    spacing: float
    frequencies: tuple
    values: np.ndarray
    dual_spacing: tuple

    @property
    def dual_cell(self) -> float:
        return float(np.prod(self.dual_spacing))

    def __len__(self) -> int:
        return int(np.prod(self.values.shape[1:]))

    def __getitem__(self, index) -> SampledFunction:
        if isinstance(index, (int, np.integer)):
            index = np.unravel_index(index, self.values.shape[1:])
        eta = tuple(float(f[k]) for f, k in zip(self.frequencies, index))
        return SampledFunction(
            self.origin, self.spacing, self.values[(slice(None),) + tuple(index)],
            label=f"slice eta={eta}",
        )

    def __iter__(self) -> Iterator[SampledFunction]:
        for k in range(len(self)):
            yield self[k]

    def eta(self, index) -> np.ndarray:
        if isinstance(index, (int, np.integer)):
            index = np.unravel_index(index, self.values.shape[1:])
        return np.array([f[k] for f, k in zip(self.frequencies, index)])

    def slice_norms(self) -> np.ndarray:
        """``||g_eta||_2`` for every dual point, shaped like the dual grid."""
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=0) * self.spacing)

    def energy(self) -> float:
        """``sum_eta ||g_eta||^2 * dual_cell``, equal to ``||f||^2`` by Parseval."""
        return float(np.sum(self.slice_norms() ** 2) * self.dual_cell)


def slice_transform(f: SampledFunction) -> SliceFamily:
    """Transform ``f`` in its last ``d-1`` variables, keeping the first one spatial."""
    if f.dims < 2:
        raise InputError("slice_transform needs d >= 2")
    if not np.all(np.isfinite(f.values)):
        raise InputError("samples must be finite")
    axes = tuple(range(1, f.dims))
    freqs = [dual_frequencies(f.shape[a], f.spacing[a]) for a in axes]
    raw = np.fft.fftshift(np.fft.fftn(f.values, axes=axes), axes=axes)
    phase = _phase(f.origin[1:], freqs, -1.0)
    values = raw * phase[np.newaxis] * float(np.prod(f.spacing[1:]))
    dual = tuple(1.0 / (f.shape[a] * f.spacing[a]) for a in axes)
    return SliceFamily(float(f.origin[0]), float(f.spacing[0]), tuple(freqs), values, dual)


def support_mask(f: SampledFunction, threshold: float = SUPPORT_THRESHOLD) -> np.ndarray:
    """Samples whose magnitude reaches ``threshold * peak``; empty for f = 0."""
    mag = np.abs(f.values)
    peak = mag.max()
    if peak == 0:
        return np.zeros(f.shape, dtype=bool)
    return mag >= threshold * peak


def vanishing_radius(f: SampledFunction, threshold: float = SUPPORT_THRESHOLD) -> float:
    """Distance from the origin to the nearest sample above threshold.

    ``f`` vanishes (at sample level) on the open ball of this radius; for the
    zero function the result is ``inf``.
    """
    mask = support_mask(f, threshold)
    if not mask.any():
        return float("inf")
    return float(f.radius()[mask].min())


def max_outside_ball(f: SampledFunction, radius: float, slack: float = 1e-12) -> float:
    """Largest ``|f|/peak`` over samples with norm greater than ``radius``."""
    peak = f.peak()
    if peak == 0:
        return 0.0
    outside = f.radius() > radius * (1 + slack)
    if not outside.any():
        return 0.0
    return float(np.abs(f.values[outside]).max() / peak)
