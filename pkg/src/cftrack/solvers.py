"""Training and detection on circulant kernel structure.

Three solver families share the response-map machinery:

* ``kcf_train`` — single-kernel ridge regression over all cyclic shifts,
  solved by one spectral division.
* ``mkcf_alternate`` — a convex combination of kernels with simplex-
  constrained weights, optimized by alternating an exact spectral solve for
  the dual coefficients with a closed-form weight step (two kernels).
* ``mkcfup_init`` / ``mkcfup_update`` — the decoupled upper-bound objective,
  whose per-kernel quadratic terms admit frame-recursive numerator and
  denominator accumulators with per-kernel forgetting rates. Within a frame
  the historical accumulators stay frozen; only the current frame's
  contribution is recomputed as the weights iterate, and the accumulators are
  committed once with the final weights.

``mkcfup_batch_step`` evaluates the same upper-bound optimality conditions in
their explicit historically-weighted form with a single *current* weight
vector across all frames. It coincides with the recursion at the initial
frame and serves as the reference path for the weight-positivity/bracketing
diagnostics and for oracle tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConditioningError,
    DegenerateKernelError,
    NumericalError,
    UnsupportedConfigError,
)
from .kernels import KernelCorrelation
from .spectral import dft2, idft2, spectrum_of_operator

__all__ = [
    "SolverConfig",
    "Labels",
    "ResponseMap",
    "SolverState",
    "gaussian_labels",
    "kcf_train",
    "detect",
    "mkcf_d_step",
    "mkcf_alternate",
    "mkcfup_init",
    "mkcfup_update",
    "mkcfup_batch_step",
    "mkcfup_batch_alternate",
    "history_weights",
    "objective_multi_kernel",
    "objective_upper_bound",
    "objective_weighted_history",
]

# Spectral denominators with magnitude below this raise ConditioningError.
SPECTRAL_DEN_FLOOR = 1e-12

# Objective increase tolerated per alternation before the descent assertion
# trips (relative to the objective magnitude).
DESCENT_TOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Shared solver parameters.

    ``lambda_o`` regularizes the joint multi-kernel objective; the decoupled
    upper-bound objective uses ``lam = lambda_o / mu`` with ``mu = 2M + 1``,
    which is exactly the constant produced when the sum-of-kernels residual
    is split into per-kernel residuals.
    """

    kernel_count: int = 2
    lambda_o: float = 1e-4
    gamma: tuple[float, ...] = (0.0174, 0.0173)
    iters_per_frame: int = 3
    d_floor: float = 1e-12

    def __post_init__(self) -> None:
        if self.kernel_count < 1:
            raise UnsupportedConfigError("kernel_count must be >= 1")
        if self.lambda_o <= 0:
            raise ValueError("lambda_o must be positive")
        if len(self.gamma) != self.kernel_count:
            raise UnsupportedConfigError(
                f"need {self.kernel_count} forgetting rates, got {len(self.gamma)}"
            )
        if any(not (0.0 < g <= 1.0) for g in self.gamma):
            raise ValueError("forgetting rates must lie in (0, 1]")
        if self.iters_per_frame < 1:
            raise ValueError("iters_per_frame must be >= 1")

    @property
    def mu(self) -> float:
        return 2.0 * self.kernel_count + 1.0

    @property
    def lam(self) -> float:
        return self.lambda_o / self.mu


@dataclass(frozen=True)
class Labels:
    """Regression target plane, peak value 1 at cell (0, 0), all values > 0.

    ``per_kernel`` is the share of the target assigned to each kernel in the
    decoupled objective (the plane divided by the kernel count).
    """

    plane: np.ndarray
    kernel_count: int

    @property
    def per_kernel(self) -> np.ndarray:
        return self.plane / self.kernel_count


@dataclass(frozen=True)
class ResponseMap:
    """Detection scores over all cyclic shifts of the probe.

    ``displacement`` is the peak index wrap-corrected into
    ``(-size/2, size/2]`` per axis; ties at the peak resolve to the first
    occurrence in row-major order.
    """

    plane: np.ndarray
    peak: tuple[int, int]
    displacement: tuple[int, int]

    @property
    def peak_value(self) -> float:
        return float(self.plane[self.peak])


@dataclass
class SolverState:
    """Fourier-domain accumulators of the upper-bound recursion.

    ``alpha_num``/``alpha_den`` hold the per-kernel numerator/denominator
    spectra of the dual coefficients, ``weight_num``/``weight_den`` the scalar
    accumulators of the kernel weights. ``alpha_spectrum`` is always the
    element-wise ratio of the summed committed accumulators.
    """

    alpha_num: np.ndarray  # (M, H, W) complex
    alpha_den: np.ndarray  # (M, H, W) complex
    weight_num: np.ndarray  # (M,)
    weight_den: np.ndarray  # (M,)
    weights: np.ndarray  # (M,)
    alpha_spectrum: np.ndarray  # (H, W) complex
    frame_index: int = 1


def gaussian_labels(
    width: int, height: int, bandwidth_factor: float, kernel_count: int = 2
) -> Labels:
    """Gaussian regression target of std ``bandwidth_factor * sqrt(width*height)``.

    The Gaussian is built centered and cyclically shifted so the peak sits at
    cell (0, 0), matching the zero-shift convention of the kernel rows.
    """
    if width < 3 or height < 3:
        raise ValueError("label planes need at least 3 cells per axis")
    std = bandwidth_factor * np.sqrt(width * height)
    rows = np.arange(height) - height // 2
    cols = np.arange(width) - width // 2
    plane = np.exp(-(rows[:, None] ** 2 + cols[None, :] ** 2) / (2.0 * std * std))
    plane = np.roll(np.roll(plane, -(height // 2), axis=0), -(width // 2), axis=1)
    return Labels(plane=plane, kernel_count=kernel_count)


def _kernel_spectra(kernels: list[KernelCorrelation]) -> np.ndarray:
    """Stack of circulant-operator eigenvalue arrays, one per kernel."""
    return np.stack([spectrum_of_operator(k.plane) for k in kernels])


def _guard_denominator(den: np.ndarray, what: str) -> None:
    mag = np.abs(den)
    if mag.min() < SPECTRAL_DEN_FLOOR:
        raise ConditioningError(
            f"{what} has magnitude {mag.min():.3e} below {SPECTRAL_DEN_FLOOR}"
        )


def kcf_train(
    kernel: KernelCorrelation, labels: Labels, lambda_o: float
) -> np.ndarray:
    """Single-kernel ridge solve: spectrum of the dual coefficients.

    Equals the dense solve ``(K + lambda_o I)^-1 y`` on the materialized
    circulant Gram matrix.
    """
    if lambda_o <= 0:
        raise ValueError("lambda_o must be positive")
    den = spectrum_of_operator(kernel.plane) + lambda_o
    _guard_denominator(den, "regularized kernel spectrum")
    return dft2(labels.plane) / den


def _wrap_displacement(index: int, size: int) -> int:
    return index if index <= size // 2 else index - size


def detect(
    kernels: list[KernelCorrelation],
    alpha_spectrum: np.ndarray,
    weights: np.ndarray,
) -> ResponseMap:
    """Weighted response map over all cyclic shifts of the probe.

    ``kernels`` are the cross-correlation rows between the probe and each
    template; the response is the weighted sum of circulant matvecs against
    the dual coefficients, evaluated spectrally.
    """
    weights = np.asarray(weights, dtype=float)
    if len(kernels) != weights.size:
        raise UnsupportedConfigError("one weight per kernel required")
    if not np.all(np.isfinite(weights)):
        raise NumericalError("non-finite kernel weights")
    spec = np.zeros_like(alpha_spectrum)
    for w, k in zip(weights, kernels):
        if k.plane.shape != alpha_spectrum.shape:
            raise UnsupportedConfigError(
                f"kernel plane {k.plane.shape} incompatible with alpha spectrum "
                f"{alpha_spectrum.shape}"
            )
        spec += w * spectrum_of_operator(k.plane) * alpha_spectrum
    plane = idft2(spec)
    flat_peak = int(np.argmax(plane))
    peak = (flat_peak // plane.shape[1], flat_peak % plane.shape[1])
    displacement = (
        _wrap_displacement(peak[0], plane.shape[0]),
        _wrap_displacement(peak[1], plane.shape[1]),
    )
    return ResponseMap(plane=plane, peak=peak, displacement=displacement)


def _kernel_matvecs(spectra: np.ndarray, alpha_spectrum: np.ndarray) -> np.ndarray:
    """Real planes ``K_m @ alpha`` for all kernels, via spectral products."""
    return np.stack([idft2(s * alpha_spectrum) for s in spectra])


def mkcf_d_step(
    kernels: list[KernelCorrelation],
    alpha_spectrum: np.ndarray,
    labels: Labels,
    lambda_o: float,
) -> np.ndarray:
    """Exact simplex-constrained weight step for two kernels.

    With the dual coefficients fixed, the objective restricted to the weight
    simplex is a 1-D quadratic in ``t`` along ``d = (t, 1 - t)``; the
    unconstrained minimizer is clamped to ``[0, 1]``. A symmetric (flat)
    objective returns equal weights.
    """
    if len(kernels) != 2:
        raise UnsupportedConfigError(
            "the closed-form weight step supports exactly 2 kernels"
        )
    spectra = _kernel_spectra(kernels)
    responses = _kernel_matvecs(spectra, alpha_spectrum)
    alpha = idft2(alpha_spectrum)
    quad = np.array(
        [[np.sum(responses[i] * responses[j]) for j in range(2)] for i in range(2)]
    )
    lin_base = lambda_o * alpha - 2.0 * labels.plane
    lin = np.array([np.sum(lin_base * responses[m]) for m in range(2)])
    if not (np.all(np.isfinite(quad)) and np.all(np.isfinite(lin))):
        raise NumericalError("non-finite weight-step coefficients")
    curvature = quad[0, 0] - 2.0 * quad[0, 1] + quad[1, 1]
    slope_at_zero = quad[0, 1] - quad[1, 1] + 0.5 * (lin[0] - lin[1])
    scale = max(np.max(np.abs(quad)), np.max(np.abs(lin)), 1.0)
    if curvature <= 1e-14 * scale:
        if abs(slope_at_zero) <= 1e-14 * scale:
            t = 0.5
        else:
            t = 0.0 if slope_at_zero > 0 else 1.0
    else:
        t = float(np.clip(-slope_at_zero / curvature, 0.0, 1.0))
    return np.array([t, 1.0 - t])


def mkcf_alternate(
    kernels: list[KernelCorrelation],
    labels: Labels,
    lambda_o: float,
    iters: int = 3,
) -> tuple[np.ndarray, np.ndarray]:
    """Alternating optimization of the joint multi-kernel objective.

    Starts from equal weights; each alternation solves the dual coefficients
    exactly for the current weights, then takes the exact weight step. Both
    half-steps are exact coordinate minimizations, so the objective sequence
    is asserted non-increasing.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    m = len(kernels)
    if m not in (1, 2):
        raise UnsupportedConfigError("supported kernel counts: 1 and 2")
    spectra = _kernel_spectra(kernels)
    y_spec = dft2(labels.plane)
    weights = np.full(m, 1.0 / m)
    alpha_spectrum = None
    prev_obj = None
    for _ in range(iters):
        den = np.tensordot(weights, spectra, axes=1) + lambda_o
        _guard_denominator(den, "combined kernel spectrum")
        alpha_spectrum = y_spec / den
        if m == 2:
            weights = mkcf_d_step(kernels, alpha_spectrum, labels, lambda_o)
        obj = objective_multi_kernel(alpha_spectrum, weights, kernels, labels, lambda_o)
        if prev_obj is not None and obj > prev_obj + DESCENT_TOL * max(1.0, abs(prev_obj)):
            raise NumericalError(
                f"alternation increased the objective: {prev_obj!r} -> {obj!r}"
            )
        prev_obj = obj
    return alpha_spectrum, weights


def _commit_alpha_accumulators(
    spectra: np.ndarray,
    weights: np.ndarray,
    yc_spec: np.ndarray,
    lam: float,
    carry_num: np.ndarray | None,
    carry_den: np.ndarray | None,
    gains: np.ndarray,
    keeps: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-kernel accumulator spectra with the given current-frame weights.

    ``carry_*`` are the previous frame's committed accumulators (None at the
    initial frame, where the gain is 1 and there is nothing to keep).
    """
    weighted = weights[:, None, None] * spectra
    cur_num = weighted * yc_spec
    cur_den = weighted * (weighted + lam)
    if carry_num is None:
        return cur_num, cur_den
    g = gains[:, None, None]
    k = keeps[:, None, None]
    return k * carry_num + g * cur_num, k * carry_den + g * cur_den


def _weight_step(
    responses: np.ndarray,
    alpha: np.ndarray,
    y_c: np.ndarray,
    lam: float,
    d_floor: float,
    carry_num: np.ndarray | None,
    carry_den: np.ndarray | None,
    gains: np.ndarray,
    keeps: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Weight numerator/denominator accumulators and the resulting weights."""
    cur_num = np.einsum("mij,ij->m", responses, 2.0 * y_c - lam * alpha)
    cur_den = 2.0 * np.einsum("mij,mij->m", responses, responses)
    if carry_num is None:
        num, den = cur_num, cur_den
    else:
        num = keeps * carry_num + gains * cur_num
        den = keeps * carry_den + gains * cur_den
    if np.any(den <= d_floor):
        raise DegenerateKernelError(
            f"weight denominator fell to {den.min():.3e} (floor {d_floor})"
        )
    return num, den, num / den


def _iterate_frame(
    spectra: np.ndarray,
    labels: Labels,
    config: SolverConfig,
    start_weights: np.ndarray,
    carry: SolverState | None,
) -> SolverState:
    """Common within-frame iteration of the upper-bound recursion.

    Historical accumulators (``carry``) are frozen; each iteration recomputes
    the current frame's contribution with the live weights, solves the dual
    spectrum, then steps the weights. The accumulators are committed once,
    with the final weights, and the stored dual spectrum is the ratio of the
    committed accumulators.
    """
    m = config.kernel_count
    y_c = labels.per_kernel
    yc_spec = dft2(y_c)
    lam = config.lam
    if carry is None:
        gains = np.ones(m)
        keeps = np.zeros(m)
        carry_an = carry_ad = None
        carry_wn = carry_wd = None
        frame_index = 1
    else:
        gains = np.asarray(config.gamma, dtype=float)
        keeps = 1.0 - gains
        carry_an, carry_ad = carry.alpha_num, carry.alpha_den
        carry_wn, carry_wd = carry.weight_num, carry.weight_den
        frame_index = carry.frame_index + 1

    weights = np.asarray(start_weights, dtype=float).copy()
    weight_num = weight_den = None
    for _ in range(config.iters_per_frame):
        num, den = _commit_alpha_accumulators(
            spectra, weights, yc_spec, lam, carry_an, carry_ad, gains, keeps
        )
        total_den = den.sum(axis=0)
        _guard_denominator(total_den, "dual-coefficient denominator spectrum")
        alpha_spectrum = num.sum(axis=0) / total_den
        alpha = idft2(alpha_spectrum)
        responses = _kernel_matvecs(spectra, alpha_spectrum)
        weight_num, weight_den, weights = _weight_step(
            responses, alpha, y_c, lam, config.d_floor,
            carry_wn, carry_wd, gains, keeps,
        )

    num, den = _commit_alpha_accumulators(
        spectra, weights, yc_spec, lam, carry_an, carry_ad, gains, keeps
    )
    total_den = den.sum(axis=0)
    _guard_denominator(total_den, "dual-coefficient denominator spectrum")
    return SolverState(
        alpha_num=num,
        alpha_den=den,
        weight_num=weight_num,
        weight_den=weight_den,
        weights=weights,
        alpha_spectrum=num.sum(axis=0) / total_den,
        frame_index=frame_index,
    )


def mkcfup_init(
    kernels: list[KernelCorrelation], labels: Labels, config: SolverConfig
) -> SolverState:
    """Initial-frame solve of the upper-bound recursion.

    Weights start equal; the within-frame iteration alternates the dual
    solve and the weight step on the initial-frame accumulator formulas
    (gain 1, nothing kept).
    """
    if len(kernels) != config.kernel_count:
        raise UnsupportedConfigError(
            f"expected {config.kernel_count} kernels, got {len(kernels)}"
        )
    spectra = _kernel_spectra(kernels)
    start = np.full(config.kernel_count, 1.0 / config.kernel_count)
    return _iterate_frame(spectra, labels, config, start, carry=None)


def mkcfup_update(
    state: SolverState,
    kernels: list[KernelCorrelation],
    labels: Labels,
    config: SolverConfig,
) -> SolverState:
    """Advance the upper-bound recursion by one frame.

    With forgetting rates of 1 the carried history contributes nothing and
    the update reduces exactly to ``mkcfup_init`` on the new frame's kernels.
    """
    if len(kernels) != config.kernel_count:
        raise UnsupportedConfigError(
            f"expected {config.kernel_count} kernels, got {len(kernels)}"
        )
    spectra = _kernel_spectra(kernels)
    return _iterate_frame(spectra, labels, config, state.weights, carry=state)


def history_weights(gamma: float, frames: int) -> np.ndarray:
    """Per-frame weights induced by one kernel's forgetting rate.

    Frame 1 carries ``(1-gamma)^(frames-1)``; frame j>1 carries
    ``gamma * (1-gamma)^(frames-j)``. This is exactly the weight the
    recursion assigns to each frame's contribution after ``frames`` updates.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    js = np.arange(1, frames + 1)
    betas = gamma * (1.0 - gamma) ** (frames - js)
    betas[0] = (1.0 - gamma) ** (frames - 1)
    return betas


def mkcfup_batch_step(
    kernel_history: list[list[KernelCorrelation]],
    labels: Labels,
    config: SolverConfig,
    weights: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """One alternation of the historically-weighted upper-bound objective.

    All history terms use the single *current* weight vector: the dual
    spectrum is solved from the explicit weighted sums, then the weights are
    re-evaluated from the same sums at the new dual coefficients. This is the
    form the weight-positivity and bracketing guarantees are stated for; it
    coincides with the recursion at the initial frame.
    """
    p = len(kernel_history)
    m = config.kernel_count
    weights = np.asarray(weights, dtype=float)
    y_c = labels.per_kernel
    yc_spec = dft2(y_c)
    lam = config.lam
    betas = np.stack([history_weights(g, p) for g in config.gamma])  # (M, p)
    spectra = np.stack(
        [_kernel_spectra(frame_kernels) for frame_kernels in kernel_history]
    )  # (p, M, H, W)

    weighted = weights[None, :, None, None] * spectra
    coef = betas.T[:, :, None, None]
    num_spec = (coef * weighted).sum(axis=(0, 1)) * yc_spec
    den_spec = (coef * weighted * (weighted + lam)).sum(axis=(0, 1))
    _guard_denominator(den_spec, "dual-coefficient denominator spectrum")
    alpha_spectrum = num_spec / den_spec
    alpha = idft2(alpha_spectrum)

    num = np.zeros(m)
    den = np.zeros(m)
    probe = 2.0 * y_c - lam * alpha
    for j in range(p):
        responses = _kernel_matvecs(spectra[j], alpha_spectrum)
        num += betas[:, j] * np.einsum("mij,ij->m", responses, probe)
        den += 2.0 * betas[:, j] * np.einsum("mij,mij->m", responses, responses)
    if np.any(den <= config.d_floor):
        raise DegenerateKernelError(
            f"weight denominator fell to {den.min():.3e} (floor {config.d_floor})"
        )
    return alpha_spectrum, num / den


def mkcfup_batch_alternate(
    kernel_history: list[list[KernelCorrelation]],
    labels: Labels,
    config: SolverConfig,
    start_weights: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Iterate ``mkcfup_batch_step`` and commit like the recursion does.

    Returns the dual spectrum re-solved at the final weights together with
    those weights, mirroring the recursion's commit protocol.
    """
    m = config.kernel_count
    weights = (
        np.full(m, 1.0 / m) if start_weights is None else np.asarray(start_weights)
    )
    for _ in range(config.iters_per_frame):
        _, weights = mkcfup_batch_step(kernel_history, labels, config, weights)
    alpha_spectrum, _ = mkcfup_batch_step(kernel_history, labels, config, weights)
    return alpha_spectrum, weights


def objective_multi_kernel(
    alpha_spectrum: np.ndarray,
    weights: np.ndarray,
    kernels: list[KernelCorrelation],
    labels: Labels,
    lambda_o: float,
) -> float:
    """Joint multi-kernel objective value (regularized residual form)."""
    spectra = _kernel_spectra(kernels)
    responses = _kernel_matvecs(spectra, alpha_spectrum)
    combined = np.tensordot(np.asarray(weights, dtype=float), responses, axes=1)
    alpha = idft2(alpha_spectrum)
    residual = labels.plane - combined
    return float(0.5 * np.sum(residual * residual) + 0.5 * lambda_o * np.sum(alpha * combined))


def objective_upper_bound(
    alpha_spectrum: np.ndarray,
    weights: np.ndarray,
    kernels: list[KernelCorrelation],
    labels: Labels,
    lambda_o: float,
) -> float:
    """Decoupled upper bound of the joint objective.

    Never falls below ``objective_multi_kernel`` at the same point; the two
    meet exactly when all weighted kernel responses coincide.
    """
    m = len(kernels)
    mu = 2.0 * m + 1.0
    lam = lambda_o / mu
    spectra = _kernel_spectra(kernels)
    responses = _kernel_matvecs(spectra, alpha_spectrum)
    alpha = idft2(alpha_spectrum)
    y_c = labels.plane / m
    total = 0.0
    for w, response in zip(np.asarray(weights, dtype=float), responses):
        residual = y_c - w * response
        total += np.sum(residual * residual) + lam * w * np.sum(alpha * response)
    return float(0.5 * mu * total)


def objective_weighted_history(
    alpha_spectrum: np.ndarray,
    weights: np.ndarray,
    kernel_history: list[list[KernelCorrelation]],
    labels: Labels,
    config: SolverConfig,
) -> float:
    """Historically-weighted upper-bound objective at a common weight vector."""
    p = len(kernel_history)
    betas = np.stack([history_weights(g, p) for g in config.gamma])
    alpha = idft2(alpha_spectrum)
    y_c = labels.per_kernel
    lam = config.lam
    weights = np.asarray(weights, dtype=float)
    total = 0.0
    for j, frame_kernels in enumerate(kernel_history):
        spectra = _kernel_spectra(frame_kernels)
        responses = _kernel_matvecs(spectra, alpha_spectrum)
        for m_idx in range(config.kernel_count):
            residual = y_c - weights[m_idx] * responses[m_idx]
            term = np.sum(residual * residual) + lam * weights[m_idx] * np.sum(
                alpha * responses[m_idx]
            )
            total += betas[m_idx, j] * term
    return float(0.5 * total)
