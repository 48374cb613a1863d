"""Monte Carlo simulation of irregularly sampled multidimensional fields.

A bandlimited field over the d-dimensional torus keeps N = (2M+1)^d Fourier
coefficients, one per frequency vector ell in [-M..M]^d, flattened by the
mixed-radix index nu(ell) = sum_m (2M+1)^(m-1) ell_m. Sampling it at r
uniform points gives the N x r synthesis matrix G with entries
N^(-1/2) exp(-2 pi j x_q . ell), and the scaled Gram matrix T = beta G G*
(beta = N/r) whose eigenvalue distribution the analytic moments describe.

Everything here is exactly reproducible: randomness comes from a Philox
counter-based generator keyed by a seed sequence, and independent streams
are derived by extending the key, e.g. (seed, trial) for the trial's sample
points and (seed, draw) for a noise realization. Reported statistics depend
only on those keys, never on scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CapacityError, IntegrityError

#: Default cap on the working set of a single simulation, overridable per
#: call or through the environment variable SAMPSPECTRA_MAX_MEM (bytes).
DEFAULT_MEMORY_BUDGET = 2 * 1024**3
MEMORY_ENV_VAR = "SAMPSPECTRA_MAX_MEM"

_HERMITIAN_TOL = 1e-8
_RESIDUAL_TOL = 1e-8
_CLAMP_PER_N = 1e-10
_TRACE_RTOL = 1e-10


def rng_for(seed, *stream) -> np.random.Generator:
    """Counter-based generator for the given seed and stream tags.

    ``seed`` may be an int or a tuple of ints; extra tags extend the key so
    that distinct (seed, tag...) combinations give independent streams.
    """
    entropy = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    entropy.extend(int(s) for s in stream)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _resolve_budget(max_bytes):
    if max_bytes is not None:
        return int(max_bytes)
    env = os.environ.get(MEMORY_ENV_VAR)
    return int(env) if env else DEFAULT_MEMORY_BUDGET


# --- index bookkeeping -------------------------------------------------------


def nu_index(ell, M: int) -> int:
    """Flatten a frequency vector to its signed scalar index.

    nu(ell) = sum_m (2M+1)^(m-1) ell_m maps [-M..M]^d bijectively onto
    [-(N-1)/2, (N-1)/2]. Array storage offsets this by (N-1)/2; see
    :func:`nu_array_index`.
    """
    width = 2 * M + 1
    nu = 0
    scale = 1
    for component in ell:
        component = int(component)
        if abs(component) > M:
            raise ValueError(f"component {component} outside [-{M}, {M}]")
        nu += scale * component
        scale *= width
    return nu


def nu_array_index(ell, M: int) -> int:
    """Row index of ``ell`` in array storage: nu(ell) + (N-1)/2."""
    d = len(ell)
    return nu_index(ell, M) + ((2 * M + 1) ** d - 1) // 2


def nu_inverse(nu: int, M: int, d: int) -> tuple:
    """Frequency vector with the given signed index."""
    width = 2 * M + 1
    half = (width**d - 1) // 2
    if not -half <= nu <= half:
        raise ValueError(f"index {nu} outside [-{half}, {half}]")
    digits = []
    a = nu + half
    for _ in range(d):
        a, digit = divmod(a, width)
        digits.append(digit - M)
    return tuple(digits)


def frequency_grid(M: int, d: int) -> np.ndarray:
    """All N frequency vectors, row-ordered by array index."""
    width = 2 * M + 1
    n = width**d
    a = np.arange(n)
    cols = []
    for _ in range(d):
        a, digit = np.divmod(a, width)
        cols.append(digit - M)
    return np.stack(cols, axis=1).astype(np.int64)


# --- sampling instances -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SamplingInstance:
    """An irregular sampling configuration: r points in [0,1)^d at order M.

    ``beta`` is the exact ratio N/r of the instance. The simulation entry
    points (:func:`sample_points`, :func:`instance_for`) enforce beta < 1,
    i.e. oversampling; degenerate instances for targeted tests can still be
    constructed directly.
    """

    d: int
    M: int
    r: int
    beta: float
    X: np.ndarray
    seed: object


@dataclass(frozen=True, eq=False)
class SpectrumSample:
    """Eigenvalues of one realization of T, with the instance metadata."""

    eigenvalues: np.ndarray
    d: int
    M: int
    r: int
    beta: float
    seed: object


@dataclass(frozen=True, eq=False)
class FieldRealization:
    """One draw of coefficients ``a``, noise ``n``, and samples ``p = G* a + n``."""

    a: np.ndarray
    n: np.ndarray
    p: np.ndarray


def sample_points(r: int, d: int, seed, M: int) -> SamplingInstance:
    """Draw r uniform sample points in [0,1)^d for bandwidth order M."""
    if r < 1:
        raise ValueError(f"number of samples must be positive, got {r}")
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    if M < 0:
        raise ValueError(f"M must be non-negative, got {M}")
    n_coeff = (2 * M + 1) ** d
    beta = n_coeff / r
    if not 0 < beta < 1:
        raise ValueError(
            f"r={r} does not oversample N={n_coeff} coefficients (beta={beta})"
        )
    X = rng_for(seed).random((r, d))
    return SamplingInstance(d=d, M=M, r=r, beta=beta, X=X, seed=seed)


def instance_for(d: int, M: int, beta: float, seed) -> SamplingInstance:
    """Instance with r = round(N / beta); the exact beta is recomputed from r."""
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    n_coeff = (2 * M + 1) ** d
    r = max(round(n_coeff / beta), n_coeff + 1)
    return sample_points(r, d, seed, M)


def estimate_bytes(d: int, M: int, beta: float) -> int:
    """Rough working-set size of one trial at these parameters."""
    n_coeff = (2 * M + 1) ** d
    r = max(round(n_coeff / beta), n_coeff + 1)
    return 24 * n_coeff * r + 48 * n_coeff**2


def _check_budget(required, max_bytes, what):
    budget = _resolve_budget(max_bytes)
    if required > budget:
        raise CapacityError(
            f"{what} needs about {required} bytes, over the budget {budget} "
            f"(raise it via {MEMORY_ENV_VAR} or max_bytes)"
        )


# --- matrices and spectra -----------------------------------------------------


def build_G(instance: SamplingInstance, max_bytes=None) -> np.ndarray:
    """Synthesis matrix: G[nu(ell), q] = N^(-1/2) exp(-2 pi j x_q . ell)."""
    n_coeff = (2 * instance.M + 1) ** instance.d
    _check_budget(24 * n_coeff * instance.r, max_bytes, "build_G")
    grid = frequency_grid(instance.M, instance.d)
    phase = grid.astype(float) @ instance.X.T
    return np.exp(-2j * np.pi * phase) / np.sqrt(n_coeff)


def build_T(instance: SamplingInstance, G=None, max_bytes=None) -> np.ndarray:
    """Scaled Gram matrix T = beta G G*, with an exactly unit diagonal.

    The diagonal equals beta * r / N = 1 identically, so it is written as
    1.0 instead of trusting accumulated round-off.
    """
    n_coeff = (2 * instance.M + 1) ** instance.d
    _check_budget(
        24 * n_coeff * instance.r + 48 * n_coeff**2, max_bytes, "build_T"
    )
    if G is None:
        G = build_G(instance, max_bytes=max_bytes)
    T = instance.beta * (G @ G.conj().T)
    np.fill_diagonal(T, 1.0)
    return T


def hermitian_eigenvalues(T: np.ndarray, instance: SamplingInstance) -> SpectrumSample:
    """Ascending eigenvalues of T with integrity checks.

    Rejects visibly non-Hermitian input, verifies three eigenpair residuals
    and the trace identity sum(lambda) = N, and clamps round-off negatives
    (within 1e-10 N of zero) to exactly zero.
    """
    n = T.shape[0]
    if T.shape != (n, n):
        raise ValueError(f"T must be square, got {T.shape}")
    deviation = np.max(np.abs(T - T.conj().T))
    if deviation > _HERMITIAN_TOL:
        raise IntegrityError(f"input is non-Hermitian (max deviation {deviation})")
    eigenvalues, vectors = np.linalg.eigh(T)

    scale = max(np.max(np.abs(eigenvalues)), 1.0)
    picks = rng_for(_seed_entropy(instance.seed), 0x5E1D).integers(0, n, size=3)
    for idx in picks:
        residual = np.linalg.norm(T @ vectors[:, idx] - eigenvalues[idx] * vectors[:, idx])
        if residual > _RESIDUAL_TOL * scale:
            raise IntegrityError(
                f"eigenpair {idx} residual {residual} exceeds {_RESIDUAL_TOL * scale}"
            )

    trace = float(np.real(np.trace(T)))
    if abs(eigenvalues.sum() - trace) > _TRACE_RTOL * max(abs(trace), 1.0):
        raise IntegrityError(
            f"eigenvalue sum {eigenvalues.sum()} disagrees with trace {trace}"
        )

    clamp = _CLAMP_PER_N * n
    if eigenvalues[0] < -clamp:
        raise IntegrityError(
            f"eigenvalue {eigenvalues[0]} below the clamping floor -{clamp}"
        )
    eigenvalues = np.maximum(eigenvalues, 0.0)
    return SpectrumSample(
        eigenvalues=eigenvalues,
        d=instance.d,
        M=instance.M,
        r=instance.r,
        beta=instance.beta,
        seed=instance.seed,
    )


def _seed_entropy(seed):
    return seed if isinstance(seed, (tuple, list)) else (int(seed),)


def empirical_moment(sample: SpectrumSample, p: int) -> float:
    """Mean of the p-th power of the sampled eigenvalues."""
    if p < 1:
        raise ValueError(f"order must be at least 1, got {p}")
    return float(np.mean(sample.eigenvalues**p))


def empirical_lmmse(sample: SpectrumSample, alpha: float) -> float:
    """Spectral form of the mean reconstruction error for this realization.

    Equals (1/N) trace of alpha beta (T + alpha beta I)^(-1); exactly the
    (a, n)-averaged LMMSE error of the realization's sampling operator.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if alpha == 0:
        return 0.0
    shift = alpha * sample.beta
    return float(np.mean(shift / (sample.eigenvalues + shift)))


# --- field synthesis and reconstruction --------------------------------------


def draw_realization(instance: SamplingInstance, alpha: float, seed, G=None) -> FieldRealization:
    """Draw unit-variance coefficients and noise of variance alpha; p = G* a + n."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if G is None:
        G = build_G(instance)
    n_coeff = G.shape[0]
    rng = rng_for(_seed_entropy(seed))
    a = (rng.standard_normal(n_coeff) + 1j * rng.standard_normal(n_coeff)) / np.sqrt(2)
    noise = np.sqrt(alpha / 2) * (
        rng.standard_normal(instance.r) + 1j * rng.standard_normal(instance.r)
    )
    return FieldRealization(a=a, n=noise, p=G.conj().T @ a + noise)


def reconstruct_field(instance: SamplingInstance, realization: FieldRealization,
                      alpha: float, G=None):
    """LMMSE estimate of the coefficients from the noisy samples.

    Solves (G G* + alpha I) a_hat = G p and returns (a_hat, mse) with
    mse = ||a_hat - a||^2 / N for this single draw. Requires alpha > 0 so
    the normal matrix stays positive definite.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if G is None:
        G = build_G(instance)
    n_coeff = G.shape[0]
    A = G @ G.conj().T
    A[np.diag_indices_from(A)] += alpha
    b = G @ realization.p
    a_hat = scipy.linalg.solve(A, b, assume_a="pos")
    residual = np.linalg.norm(A @ a_hat - b)
    allowed = _RESIDUAL_TOL * (
        np.linalg.norm(A) * np.linalg.norm(a_hat) + np.linalg.norm(b)
    )
    if residual > allowed:
        raise IntegrityError(f"solver residual {residual} exceeds {allowed}")
    mse = float(np.linalg.norm(a_hat - realization.a) ** 2 / n_coeff)
    return a_hat, mse


def synthesize_field_value(a: np.ndarray, x, M: int, d: int):
    """Field value s(x) = N^(-1/2) sum_ell a[nu(ell)] exp(+2 pi j x . ell).

    ``x`` may be a single point of shape (d,) or a batch of shape (n, d).
    Stacking over an instance's sample points reproduces G* a.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.shape[1] != d:
        raise ValueError(f"points have {pts.shape[1]} components, expected {d}")
    grid = frequency_grid(M, d)
    if len(a) != len(grid):
        raise ValueError(f"coefficient vector has {len(a)} entries, expected {len(grid)}")
    values = np.exp(2j * np.pi * (pts @ grid.T.astype(float))) @ a / np.sqrt(len(grid))
    return values[0] if single else values


# --- trial orchestration ------------------------------------------------------


def collect_spectra(d: int, M: int, beta: float, trials: int, seed,
                    threads: int = 1, max_bytes=None) -> list:
    """Eigenvalue samples for ``trials`` independent sampling instances.

    Trial t uses the stream key (seed, t), so the returned list is a pure
    function of the arguments; the thread count only affects wall time.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    _check_budget(estimate_bytes(d, M, beta), max_bytes, "collect_spectra")
    base = _seed_entropy(seed)

    def one(trial):
        instance = instance_for(d, M, beta, base + (trial,))
        return hermitian_eigenvalues(build_T(instance, max_bytes=max_bytes), instance)

    if threads <= 1:
        return [one(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(trials)))
