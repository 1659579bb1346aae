"""Sample generation for the stochastic corrector: moments, correlations,
and the two multivariate samplers (Gaussian and t-copula with uniform
marginals).

Everything here is a pure function of its inputs plus an explicit
:class:`~pintsol.rng.RandomStream`, so sampled runs are reproducible from a
seed alone regardless of how the propagation work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Array, FactorizationError, SamplingRule
from .rng import RandomStream

__all__ = [
    "pearson_correlation",
    "correlation_factor",
    "SamplingMoments",
    "moments_for_rule",
    "sample_gaussian",
    "sample_tcopula",
    "draw_samples",
    "SampleBatch",
]

#: Half-width multiplier of a uniform distribution with unit standard
#: deviation: Uniform[mu - sqrt(3) sigma, mu + sqrt(3) sigma] has sd sigma.
_SQRT3 = float(np.sqrt(3.0))

# Diagonal jitter applied per unit dimension as the last factorization
# rescue before giving up.
_JITTER = 1e-12


def pearson_correlation(propagations: Array) -> Array:
    """Pairwise Pearson correlation of an ``(m, d)`` batch of vectors.

    Components with zero variance across the batch carry no dependence
    information; their off-diagonal entries are set to 0 rather than the
    0/0 the raw formula would produce.  The diagonal is exactly 1 and the
    result is exactly symmetric.

    Parameters
    ----------
    propagations:
        ``(m, d)`` array with ``m >= 2`` finite rows, one per sample.
    """
    x = np.asarray(propagations, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need an (m, d) batch with at least two rows")
    dev = x - x.mean(axis=0)
    scale = np.sqrt(np.sum(dev * dev, axis=0))
    degenerate = scale == 0.0
    safe = np.where(degenerate, 1.0, scale)
    cov = dev.T @ dev
    corr = cov / np.outer(safe, safe)
    corr[degenerate, :] = 0.0
    corr[:, degenerate] = 0.0
    corr = np.clip(corr, -1.0, 1.0)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def _renormalize(matrix: Array) -> Array:
    # Rescale a PSD matrix back to unit diagonal.  The diagonal of the
    # eigenvalue-clipped matrix can only have shrunk, never become negative;
    # the floor guards the all-zero row that a rank-0 input would produce.
    diag = np.sqrt(np.maximum(np.diag(matrix), 1e-300))
    out = matrix / np.outer(diag, diag)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


def correlation_factor(correlation: Array) -> Array:
    """Lower-triangular ``L`` with ``L @ L.T`` equal to the correlation
    matrix, repairing indefinite or singular estimates along the way.

    Sample correlation matrices are PSD in exact arithmetic but routinely
    fail Cholesky in floats (and are exactly singular for perfectly
    dependent batches).  The repair ladder: plain Cholesky, then clip
    negative eigenvalues to zero and renormalize the diagonal, then add
    ``1e-12 * d`` of diagonal jitter.  If all three fail the matrix is
    genuinely malformed and a :class:`FactorizationError` carrying it is
    raised.
    """
    r = np.asarray(correlation, dtype=np.float64)
    if not np.all(np.isfinite(r)):
        raise FactorizationError(f"correlation matrix is not finite:\n{r!r}")
    try:
        return np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        pass
    eigenvalues, vectors = np.linalg.eigh(0.5 * (r + r.T))
    clipped = (vectors * np.maximum(eigenvalues, 0.0)) @ vectors.T
    repaired = _renormalize(clipped)
    try:
        return np.linalg.cholesky(repaired)
    except np.linalg.LinAlgError:
        pass
    jittered = repaired + _JITTER * r.shape[0] * np.eye(r.shape[0])
    try:
        return np.linalg.cholesky(jittered)
    except np.linalg.LinAlgError:
        raise FactorizationError(
            f"correlation matrix not factorizable after repair:\n{r!r}"
        ) from None


@dataclass(frozen=True)
class SamplingMoments:
    """Marginal moments plus correlation structure for one sub-interval.

    ``std_dev`` components are nonnegative; a zero component pins that
    coordinate of every sample exactly to the mean.
    """

    mean: Array
    std_dev: Array
    correlation: Array

    def __post_init__(self) -> None:
        d = self.mean.shape[0]
        if self.std_dev.shape != (d,) or self.correlation.shape != (d, d):
            raise ValueError("moment shapes disagree")
        if np.any(self.std_dev < 0.0):
            raise ValueError("negative standard deviation")

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]


def moments_for_rule(
    rule: SamplingRule,
    fine_arrival: Array,
    corrected: Array,
    coarse_new: Array,
    coarse_old: Array,
    correlation: Array | None = None,
) -> SamplingMoments:
    """Build :class:`SamplingMoments` from one sub-interval's iteration data.

    Parameters
    ----------
    rule:
        Which of the four sampling rules to apply.
    fine_arrival:
        Fine propagation of the previous iterate arriving at this boundary;
        the sample mean for the fine-mean rules (1 and 3).
    corrected:
        Current predictor-corrector value at this boundary; the sample mean
        for the corrected-mean rules (2 and 4).
    coarse_new, coarse_old:
        Coarse propagations of the current and previous iterates arriving
        at this boundary.  All rules spread samples by their component-wise
        absolute difference, which contracts to zero as the iteration
        converges.
    correlation:
        Estimated correlation matrix, or ``None`` for independent
        components.
    """
    mean = fine_arrival if rule.uses_fine_mean else corrected
    sigma = np.abs(coarse_new - coarse_old)
    if correlation is None:
        correlation = np.eye(mean.shape[0])
    return SamplingMoments(
        mean=np.array(mean, dtype=np.float64),
        std_dev=sigma.astype(np.float64),
        correlation=np.asarray(correlation, dtype=np.float64),
    )


def sample_gaussian(
    stream: RandomStream, moments: SamplingMoments, count: int
) -> Array:
    """Draw ``count`` correlated Gaussian vectors, shape ``(count, d)``.

    The covariance is ``diag(sigma) R diag(sigma)``; it is factored as
    ``diag(sigma) @ cholesky(R)`` so zero-sigma components come out exactly
    equal to the mean instead of tripping a singular factorization.
    """
    if count <= 0:
        d = moments.dimension
        return np.empty((0, d))
    factor = correlation_factor(moments.correlation)
    normals = stream.normal_rows(count, moments.dimension)
    return moments.mean + moments.std_dev * (normals @ factor.T)


def sample_tcopula(
    stream: RandomStream, moments: SamplingMoments, count: int
) -> Array:
    """Draw ``count`` vectors from a nu=1 t-copula with uniform marginals.

    Each draw consumes ``d + 1`` normals in one contiguous block: ``d`` for
    the correlated Gaussian kernel and one whose square is the chi-squared
    denominator.  Dividing gives a correlated multivariate Cauchy; its
    marginal CDF ``1/2 + arctan(t)/pi`` maps each component to (0, 1), and
    the affine rescale places component ``i`` uniformly on
    ``[mu_i - sqrt(3) sigma_i, mu_i + sqrt(3) sigma_i]`` so marginal means
    and standard deviations match :func:`sample_gaussian` exactly.
    """
    if count <= 0:
        d = moments.dimension
        return np.empty((0, d))
    d = moments.dimension
    factor = correlation_factor(moments.correlation)
    block = stream.normal_rows(count, d + 1)
    kernel = block[:, :d] @ factor.T
    chi_squared = block[:, d:] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        t = kernel / np.sqrt(chi_squared)
    uniform = 0.5 + np.arctan(t) / np.pi
    # Written as mu + sqrt(3) sigma (2 chi - 1): |2 chi - 1| <= 1 holds in
    # floats, so samples cannot overshoot the closed marginal bounds.
    return moments.mean + _SQRT3 * moments.std_dev * (2.0 * uniform - 1.0)


def draw_samples(
    stream: RandomStream, rule: SamplingRule, moments: SamplingMoments, count: int
) -> Array:
    """Dispatch to the sampler the rule calls for."""
    if rule.uses_copula:
        return sample_tcopula(stream, moments, count)
    return sample_gaussian(stream, moments, count)


@dataclass
class SampleBatch:
    """Candidate initial values at one mesh boundary during one iteration.

    ``samples[0]`` is always pinned to the current predictor-corrector
    value, which is what collapses the stochastic solver onto the
    deterministic one when only a single sample is used.  ``fine`` holds
    the fine propagation of each sample to the next boundary (filled after
    the parallel propagation step) and ``selected_index`` the winner of the
    sequential selection pass.
    """

    boundary_index: int
    samples: Array
    fine: Array | None = None
    selected_index: int | None = None

    def __post_init__(self) -> None:
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise ValueError("samples must be a nonempty (m, d) array")

    @property
    def count(self) -> int:
        return self.samples.shape[0]

    @property
    def selected_sample(self) -> Array:
        if self.selected_index is None:
            raise ValueError("selection has not run yet")
        return self.samples[self.selected_index]

    @property
    def selected_fine(self) -> Array:
        if self.selected_index is None or self.fine is None:
            raise ValueError("selection has not run yet")
        return self.fine[self.selected_index]
