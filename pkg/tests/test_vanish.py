import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from inghamkit.errors import ContractError, InputError
from inghamkit.grid import SampledFunction, Spectrum, dual_frequencies, l2_norm
from inghamkit.synthesis import gaps_from_profile, ingham_function, mollify
from inghamkit.vanish import (
    HalfSpace,
    halfspace_support,
    householder,
    log_integral,
    log_integrand_csv,
    normalize_halfspace,
    theorem23_pipeline,
)
from inghamkit.weights import linear_profile, log_profile, power_profile, zero_profile


def e(*v):
    return np.array(v, dtype=float)


def box(lo, hi, n=200, a=-2.0, b=2.0):
    return SampledFunction.from_callable(lambda x: ((x >= lo) & (x <= hi)) * 1.0, a, b, n)


def smooth_blob(cx, cy, n, half=4.0):
    def b(x, y):
        r2 = (x - cx) ** 2 + (y - cy) ** 2
        out = np.zeros_like(x)
        m = r2 < 1
        out[m] = np.exp(-1 / (1 - r2[m]))
        return out
    return SampledFunction.from_callable(b, [-half, -half], [half, half], [n, n])


def spectrum_on_dual_grid(values_fn, n, h):
    xi = dual_frequencies(n, h)
    return Spectrum(values_fn(xi), [-n * h / 2], [h])


# half-space support

def test_halfspace_validation():
    with pytest.raises(InputError):
        HalfSpace(e(1, 1), 0.0)
    with pytest.raises(InputError):
        HalfSpace(e(np.nan), 0.0)
    h = HalfSpace.from_direction([3, 4], 2.0)
    assert np.allclose(h.eta, [0.6, 0.8]) and h.dims == 2


def test_support_on_negative_half_line():
    f = box(-1, 0)
    assert halfspace_support(f, HalfSpace(e(1), 0.0)).holds
    rep = halfspace_support(f, HalfSpace(e(1), -0.5))
    assert not rep.holds
    assert rep.margin == pytest.approx(0.5)


def test_zero_function_is_supported_anywhere():
    f = box(5, 6)
    rep = halfspace_support(f, HalfSpace(e(-1), -100.0))
    assert rep.holds and rep.margin == -math.inf


@given(st.floats(0, 2 * math.pi), st.floats(-1.0, 1.0), st.floats(0, 2 * math.pi))
def test_rotated_square_against_pointwise_scan(angle, s, dir_angle):
    c, sn = math.cos(angle), math.sin(angle)

    def square(x, y):
        u = c * x + sn * y
        v = -sn * x + c * y
        return ((np.abs(u) <= 0.7) & (np.abs(v) <= 0.4)) * 1.0

    f = SampledFunction.from_callable(square, [-1.5, -1.5], [1.5, 1.5], [48, 48])
    eta = e(math.cos(dir_angle), math.sin(dir_angle))
    h = HalfSpace(eta, s)
    rep = halfspace_support(f, h)
    X, Y = f.mesh()
    worst = -math.inf
    for x, y, v in zip(X.ravel(), Y.ravel(), f.values.real.ravel()):
        if v != 0:
            worst = max(worst, x * eta[0] + y * eta[1] - s)
    assert rep.margin == pytest.approx(worst, abs=1e-12)
    assert rep.holds == (worst <= 1e-12 * 1.5)


def test_diagonal_halfspace():
    f = smooth_blob(-1.5, -1.5, 64)
    assert halfspace_support(f, HalfSpace.from_direction([1, 1], -1.5 * math.sqrt(2) + 1.0)).holds
    assert not halfspace_support(f, HalfSpace.from_direction([1, 1], -1.5 * math.sqrt(2))).holds


# normalization

@given(st.integers(1, 5), st.integers(0, 2 ** 31 - 1))
def test_householder_is_orthogonal_reflection(d, seed):
    v = np.random.default_rng(seed).standard_normal(d)
    eta = v / np.linalg.norm(v)
    H = householder(eta)
    assert np.allclose(H @ H.T, np.eye(d), atol=1e-14)
    assert np.allclose(H @ eta, np.eye(d)[0], atol=1e-14)


def test_normalize_identity():
    f = box(-1, 0)
    g, rep = normalize_halfspace(f, HalfSpace(e(1), 0.0), with_report=True)
    assert np.array_equal(g.values, f.values) and rep.exact


def test_normalize_reflection():
    f = box(0.2, 1.0, n=400)
    g, rep = normalize_halfspace(f, HalfSpace(e(-1), 0.0), with_report=True)
    assert rep.exact and rep.relative_l2_error < 1e-15
    assert halfspace_support(g, HalfSpace(e(1), 0.0)).holds
    assert halfspace_support(g, HalfSpace(e(1), -0.2 + 1e-9)).holds
    assert not halfspace_support(g, HalfSpace(e(1), -0.3)).holds


def test_normalize_rotate_and_translate_2d():
    f = SampledFunction.from_callable(
        lambda x, y: np.exp(-x ** 2) * ((y <= 1) & (y >= -1)) * 1.0, [-3, -3], [3, 3], [60, 60])
    h = HalfSpace(e(0, 1), 1.0)
    g, rep = normalize_halfspace(f, h, with_report=True)
    assert rep.exact
    assert abs(l2_norm(g) - l2_norm(f)) <= 1e-12 * l2_norm(f)
    assert halfspace_support(g, HalfSpace(e(1, 0), 0.0)).holds
    # the supporting line y = 1 lands on z_1 = 0
    assert halfspace_support(g, HalfSpace(e(-1, 0), 2.0 + 1e-9)).holds


def test_normalize_off_axis_rotation_converges():
    errs = []
    for n in (64, 128, 256, 1024):
        f = smooth_blob(-1.5, -1.5, n)
        g, rep = normalize_halfspace(f, HalfSpace.from_direction([1, 1], 0.0), with_report=True)
        assert not rep.exact
        assert halfspace_support(g, HalfSpace(e(1, 0), 0.0)).holds
        errs.append(rep.relative_l2_error)
    orders = [math.log2(a / b) for a, b in zip(errs[:2], errs[1:3])]
    assert min(orders) > 3.5
    assert errs[-1] < 1e-8


def test_normalize_rejects_violation():
    with pytest.raises(ContractError):
        normalize_halfspace(box(-1, 0.5), HalfSpace(e(1), 0.0))


# log integral

def test_gaussian_minus_part_matches_closed_form():
    n, h = 512, 1 / 20
    F = spectrum_on_dual_grid(lambda xi: np.exp(-np.pi * xi ** 2), n, h)
    rep = log_integral(F, zero_profile())
    assert rep.floored_fraction == 0
    assert rep.plus_part == 0.0
    dxi = 1 / (n * h)
    for T, minus, minus_w in rep.minus_table:
        # 2 pi (T - arctan T) = int_{|t|<=T} pi t^2/(1+t^2) dt
        exact = 2 * math.pi * (T - math.atan(T))
        assert minus == pytest.approx(exact, rel=2 * dxi / max(T, 1) + 1e-3, abs=1e-2)
        assert minus_w == minus
    assert rep.classification == "divergent-trend"
    assert rep.decomposition_ok and rep.comparison_ok


def test_delta_like_spectrum():
    F = spectrum_on_dual_grid(np.ones_like, 256, 0.05)
    rep = log_integral(F, zero_profile())
    assert rep.plus_part == 0.0
    assert all(row[1] == 0.0 for row in rep.minus_table)
    assert rep.classification == "convergent"


def test_zero_spectrum_is_degenerate():
    F = spectrum_on_dual_grid(np.zeros_like, 64, 0.1)
    rep = log_integral(F, power_profile(0.5))
    assert rep.degenerate and rep.classification == "degenerate"


@pytest.mark.parametrize("alpha", [0.5, 0.75])
def test_plus_part_bound_on_synthesis_output(alpha):
    p = power_profile(alpha)
    _, F = ingham_function(gaps_from_profile(p, 1.0, K=8))
    rep = log_integral(F, p)
    assert math.isfinite(rep.plus_part)
    assert rep.bound_holds and rep.plus_part <= rep.weighted_bound * (1 + 1e-8)
    assert rep.decomposition_ok and rep.comparison_ok


def test_log_integral_against_direct_sums():
    rng = np.random.default_rng(0)
    n, h = 128, 0.1
    vals = rng.standard_normal(n) * np.exp(-np.linspace(-3, 3, n) ** 2) * 30
    F = spectrum_on_dual_grid(lambda xi: vals, n, h)
    p = power_profile(0.5)
    rep = log_integral(F, p)
    t = F.frequencies[0]
    dt = 1 / (n * h)
    lw = np.log(np.abs(vals)) + np.sqrt(np.abs(t))
    assert rep.plus_part == pytest.approx(np.sum(np.maximum(lw, 0) / (1 + t ** 2)) * dt, rel=1e-12)
    assert rep.weighted_bound == pytest.approx(np.sum(np.exp(lw) / (1 + t ** 2)) * dt, rel=1e-12)
    T, minus, _ = rep.minus_table[-1]
    assert minus == pytest.approx(np.sum(np.maximum(-np.log(np.abs(vals)), 0) / (1 + t ** 2)) * dt, rel=1e-12)


@given(st.integers(0, 2 ** 31 - 1), st.floats(0, 1))
def test_decomposition_and_comparison_identities(seed, alpha):
    rng = np.random.default_rng(seed)
    n = 64
    logs = rng.uniform(-40, 10, n)
    F = spectrum_on_dual_grid(lambda xi: np.exp(logs) * rng.choice([-1, 1], n), n, 0.2)
    rep = log_integral(F, power_profile(alpha))
    assert rep.decomposition_ok and rep.comparison_ok
    assert rep.bound_holds


def test_many_floored_samples_are_inconclusive():
    F = spectrum_on_dual_grid(lambda xi: np.where(np.abs(xi) < 1, 1.0, 1e-320), 256, 0.05)
    rep = log_integral(F, zero_profile())
    assert rep.floored_fraction > 0.1
    assert rep.classification == "inconclusive"


def test_log_integral_needs_1d():
    F = Spectrum(np.ones((4, 4)), [0, 0], [1, 1])
    with pytest.raises(InputError):
        log_integral(F, zero_profile())


def test_log_integrand_csv(tmp_path):
    F = spectrum_on_dual_grid(lambda xi: np.exp(-np.pi * xi ** 2), 16, 0.25)
    text = log_integrand_csv(F, power_profile(0.5), path=tmp_path / "a.csv")
    rows = text.strip().split("\n")
    assert rows[0] == "t,log_abs_F,psi,log_plus_weighted,log_minus,floored"
    assert len(rows) == 17
    t, logF = (float(v) for v in rows[1].split(",")[:2])
    assert logF == pytest.approx(-math.pi * t * t)
    assert (tmp_path / "a.csv").read_text() == text


# pipeline

def test_pipeline_zero_function():
    f = SampledFunction([-2.0, -2.0], [0.1, 0.1], np.zeros((40, 40)))
    rep = theorem23_pipeline(f, HalfSpace(e(1, 0), 0.0), log_profile())
    assert rep.verdict == "must-vanish" and rep.consistency == "consistent"
    assert rep.norm == 0.0 and rep.at_noise_floor
    assert rep.slices_tested == 0


def test_pipeline_mollified_ingham_is_silent():
    p = power_profile(0.5)
    f0, _ = ingham_function(gaps_from_profile(p, 0.5, K=6))
    f = mollify(f0, 1.0)
    # supported in [-1, 1], hence in {x <= 1}
    rep = theorem23_pipeline(f, HalfSpace(e(1), 1.0), p, q=2, N=0)
    assert rep.criterion == "convergent"
    assert rep.verdict == "theorem-silent" and rep.consistency == "consistent"
    assert rep.norm > 0
    assert rep.diagnostics["weighted_mass_finite_on_grid"]


def test_pipeline_flags_contradiction():
    # half-line supported, nonzero, tested against a divergent weight
    f = SampledFunction.from_callable(
        lambda x, y: np.where(x <= 0, np.exp(-(x + 1) ** 2 * 4 - y ** 2 * 4), 0.0) * (x > -2.5),
        [-3, -2], [1, 2], [128, 64])
    rep = theorem23_pipeline(f, HalfSpace(e(1, 0), 0.0), linear_profile(), q=2, N=0)
    assert rep.verdict == "must-vanish"
    assert rep.consistency == "contradiction"
    assert "explanation" in rep.diagnostics
    assert rep.slices_tested >= 1 and rep.slices_total == 64
    d = rep.to_dict()
    assert d["slices"][0]["classification"] in {"divergent-trend", "convergent", "inconclusive"}


def test_pipeline_rejects_bad_q():
    f = box(-1, 0)
    with pytest.raises(InputError):
        theorem23_pipeline(f, HalfSpace(e(1), 0.0), log_profile(), q=0.5)
