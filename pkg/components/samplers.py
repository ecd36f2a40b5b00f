"""
Random generation for the simulation studies
Counter-based reproducible streams, Helmert pre-shapes, a complex Bingham
acceptance-rejection sampler, a Metropolis-Hastings frame Watson sampler and
the outlier generators used to contaminate samples.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

from components.proj_stiefel import ProjStiefelPoint
from components.spectral import herm_eig
from utils.errors import InvalidInput, SamplerStalled
from utils.validators import require_hermitian, require_unit

logger = logging.getLogger(__name__)

MIN_ACCEPTANCE = 1e-6
STALL_TRIALS = 2_000_000
BURN_IN = 1000
PILOT_STEPS = 500
MAX_THINNING = 200
ACF_TARGET = 0.1

# Landmark configurations of the three simulated shapes
SHAPE_CONFIGS = {
    1: np.array([0.29 - 0.29j, 0.29 + 0.57j, -0.01 + 0.01j, -0.57 - 0.29j]),
    2: np.array([0.32 + 0j, 0.13 + 0.06j, -0.06 + 0.57j, -0.44 + 0j, -0.06 - 0.57j, 0.13 - 0.06j]),
    3: np.array(
        [
            -0.17 + 0.36j, -0.03 + 0.41j, 0.10 + 0.33j, 0.13 + 0.17j, 0.05 + 0.09j,
            -0.03 + 0.02j, -0.11 - 0.01j, -0.03 - 0.01j, 0.05 - 0.09j, 0.13 - 0.17j,
            0.10 - 0.33j, -0.03 - 0.40j, -0.17 - 0.36j,
        ]
    ),
}


@dataclass(frozen=True)
class RngSeed:
    """64-bit seed plus a stream path; equal pairs give identical draws"""

    seed: int
    stream: Tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        return make_rng(self.seed, *self.stream)

    def child(self, *stream) -> "RngSeed":
        return RngSeed(self.seed, self.stream + tuple(int(s) for s in stream))


def make_rng(seed, *stream) -> np.random.Generator:
    """
    Philox generator keyed by (seed, stream)

    Args:
        seed (int): 64-bit experiment seed
        *stream: nonnegative integers naming the stream (cell, replicate, purpose)

    Returns:
        np.random.Generator: independent, platform-stable stream
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(sequence))


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RngSeed):
        return seed.generator()
    return make_rng(seed)


def helmert_submatrix(k) -> np.ndarray:
    """
    (k-1) x k Helmert submatrix with orthonormal rows orthogonal to 1_k

    Row j (1-based) has j entries 1/sqrt(j(j+1)), then -j/sqrt(j(j+1)), then zeros.
    """
    if k < 2:
        raise InvalidInput("Helmert submatrix needs k >= 2")
    H = np.zeros((k - 1, k))
    for j in range(1, k):
        scale = 1.0 / np.sqrt(j * (j + 1))
        H[j - 1, :j] = scale
        H[j - 1, j] = -j * scale
    return H


def preshape(config) -> np.ndarray:
    """
    Pre-shape Hc/|Hc| of a planar landmark configuration

    Args:
        config: complex k-vector of landmarks

    Returns:
        np.ndarray: complex unit (k-1)-vector, invariant to translation and scale
    """
    c = np.asarray(config, dtype=complex).reshape(-1)
    Hc = helmert_submatrix(c.size) @ c
    norm = np.linalg.norm(Hc)
    if norm <= 1e-12 * max(1.0, float(np.linalg.norm(c))):
        raise InvalidInput("configuration has all landmarks equal")
    return Hc / norm


def configuration_from_preshape(z) -> np.ndarray:
    """Centred landmark configuration H^T z for plotting estimated shapes"""
    z = np.asarray(z, dtype=complex).reshape(-1)
    return helmert_submatrix(z.size + 1).T @ z


@dataclass(frozen=True)
class ComplexBinghamParams:
    """Density proportional to exp(x^* Lambda x) on the unit sphere of C^p"""

    Lambda: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Lambda", require_hermitian(self.Lambda, name="Lambda"))

    @classmethod
    def from_mode(cls, z0, kappa):
        """Lambda = kappa z0 z0^*: mode z0, remaining eigenvalues 0"""
        z0 = require_unit(np.asarray(z0, dtype=complex), name="z0")
        return cls(kappa * np.outer(z0, z0.conj()))

    @property
    def dimension(self) -> int:
        return self.Lambda.shape[0]

    @property
    def eigen(self):
        return herm_eig(self.Lambda)

    @property
    def mode(self) -> np.ndarray:
        return self.eigen.eigenvectors[:, 0]


def _truncated_exponential(rng, rates, size):
    """Draws on [0, 1] with density proportional to exp(-a s); uniform where a == 0"""
    u = rng.random((size, rates.size))
    draws = u.copy()
    positive = rates > 0
    a = rates[positive]
    draws[:, positive] = -np.log1p(u[:, positive] * np.expm1(-a)) / a
    return draws


def sample_complex_bingham(params: ComplexBinghamParams, n, seed) -> np.ndarray:
    """
    Exact complex Bingham draws by acceptance-rejection

    The squared moduli of the eigen-coordinates are truncated exponentials
    conditioned on summing to at most 1; phases are uniform. Only eigenvalue
    gaps matter, so Lambda and Lambda + cI give the same law.

    Args:
        params (ComplexBinghamParams): concentration matrix
        n (int): number of draws
        seed: int, RngSeed or np.random.Generator

    Returns:
        np.ndarray: n x p complex unit vectors
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    rng = as_rng(seed)
    eigen = params.eigen
    p = params.dimension
    rates = eigen.eigenvalues[0] - eigen.eigenvalues[1:]

    if p == 1 or np.all(rates <= 0):
        g = rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    accepted = np.empty((0, p - 1))
    trials = 0
    batch = int(min(max(2 * n, 1024), 100_000))
    while accepted.shape[0] < n:
        draws = _truncated_exponential(rng, rates, batch)
        trials += batch
        accepted = np.vstack([accepted, draws[draws.sum(axis=1) <= 1.0]])
        if trials >= STALL_TRIALS and accepted.shape[0] / trials < MIN_ACCEPTANCE:
            raise SamplerStalled(f"complex Bingham acceptance {accepted.shape[0] / trials:.2e} after {trials} trials")
    logger.debug("complex Bingham acceptance rate %.4f", n / trials if trials else 1.0)

    moduli = accepted[:n]
    squared = np.column_stack([1.0 - moduli.sum(axis=1), moduli])
    phases = np.exp(2j * np.pi * rng.random((n, p)))
    coordinates = np.sqrt(np.clip(squared, 0.0, None)) * phases
    x = coordinates @ eigen.eigenvectors.T
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def shape_outliers(z0, n1, seed) -> np.ndarray:
    """
    Outliers at maximal distance from z0: complex normals projected by I - z0 z0^*

    Returns:
        np.ndarray: n1 x p complex unit vectors with z0^* x = 0
    """
    if n1 < 0:
        raise InvalidInput("n1 must be >= 0")
    z0 = require_unit(np.asarray(z0, dtype=complex), name="z0")
    rng = as_rng(seed)
    p = z0.size
    g = rng.standard_normal((n1, p)) + 1j * rng.standard_normal((n1, p))
    g = g - np.outer(g @ z0.conj(), z0)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class FrameWatsonParams:
    """Density proportional to exp(sum_j kappa_j (x_j^T m_j)^2) on axial frames"""

    kappas: Tuple[float, ...]
    mode: ProjStiefelPoint

    def __post_init__(self):
        kappas = tuple(float(k) for k in self.kappas)
        if not kappas or any(k <= 0 for k in kappas):
            raise InvalidInput("kappas must be positive")
        if len(kappas) != self.mode.r or self.mode.k != self.mode.r:
            raise InvalidInput("frame Watson needs a square mode with one kappa per axis")
        object.__setattr__(self, "kappas", kappas)


@dataclass
class FrameDraws:
    """Frame Watson output with chain diagnostics"""

    matrices: np.ndarray
    thinning: int
    acceptance_rate: float
    converged: bool

    def frames(self):
        return [ProjStiefelPoint.from_matrix(X, canonical=False) for X in self.matrices]


def _energy(X, M, kappas):
    # X: (c, k, k); column j dotted with m_j
    return np.einsum("cij,ij->cj", X, M) ** 2 @ kappas


def _givens_step(rng, X, step):
    c, k, _ = X.shape
    i = rng.integers(0, k, size=c)
    j = (i + rng.integers(1, k, size=c)) % k
    theta = step * rng.standard_normal(c)
    cos, sin = np.cos(theta), np.sin(theta)
    rows = np.arange(c)
    Y = X.copy()
    xi, xj = X[rows, i, :], X[rows, j, :]
    Y[rows, i, :] = cos[:, None] * xi - sin[:, None] * xj
    Y[rows, j, :] = sin[:, None] * xi + cos[:, None] * xj
    return Y


def _mh_sweep(rng, X, energy, M, kappas, step, steps, record=False):
    accepted = 0
    trace = []
    for _ in range(steps):
        proposal = _givens_step(rng, X, step)
        proposed = _energy(proposal, M, kappas)
        accept = np.log(rng.random(X.shape[0])) < proposed - energy
        X[accept] = proposal[accept]
        energy = np.where(accept, proposed, energy)
        accepted += int(accept.sum())
        if record:
            trace.append(energy.copy())
    return X, energy, accepted, np.array(trace)


def _thinning_from_trace(trace):
    """Smallest lag whose pooled energy autocorrelation drops below the target"""
    centred = trace - trace.mean()
    variance = float(np.mean(centred**2))
    if variance <= 0:
        return 1
    for lag in range(1, min(MAX_THINNING, trace.shape[0] - 1) + 1):
        acf = float(np.mean(centred[:-lag] * centred[lag:])) / variance
        if acf < ACF_TARGET:
            return lag
    return MAX_THINNING


def _rhat(trace):
    """Gelman-Rubin statistic of per-chain energy traces (steps x chains)"""
    m = trace.shape[1]
    if m < 2 or trace.shape[0] < 2:
        return 1.0
    means = trace.mean(axis=0)
    within = trace.var(axis=0, ddof=1).mean()
    between = trace.shape[0] * means.var(ddof=1)
    if within <= 0:
        return 1.0
    pooled = (trace.shape[0] - 1) / trace.shape[0] * within + between / trace.shape[0]
    return float(np.sqrt(pooled / within))


def sample_frame_watson(params: FrameWatsonParams, n, seed, n_chains=10, burn_in=BURN_IN) -> FrameDraws:
    """
    Frame Watson draws by Metropolis-Hastings with random Givens rotations

    Chains start at the mode, run burn_in steps, then keep every L-th state
    where L is the smallest lag with energy autocorrelation below 0.1.

    Args:
        params (FrameWatsonParams): concentrations and modal frame
        n (int): number of draws
        seed: int, RngSeed or np.random.Generator
        n_chains (int): parallel chains

    Returns:
        FrameDraws: n x k x k orthogonal matrices plus diagnostics
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    rng = as_rng(seed)
    M = params.mode.matrix
    kappas = np.array(params.kappas)
    k = M.shape[0]
    chains = max(1, min(n_chains, n))
    step = min(1.0, 1.0 / np.sqrt(kappas.max()))

    X = np.repeat(M[None, :, :], chains, axis=0)
    energy = _energy(X, M, kappas)
    X, energy, accepted, _ = _mh_sweep(rng, X, energy, M, kappas, step, burn_in)
    X, energy, pilot_accepted, trace = _mh_sweep(rng, X, energy, M, kappas, step, PILOT_STEPS, record=True)
    accepted += pilot_accepted
    thinning = _thinning_from_trace(trace)
    converged = _rhat(trace) < 1.1

    per_chain = -(-n // chains)
    kept = []
    total_steps = burn_in + PILOT_STEPS
    for _ in range(per_chain):
        X, energy, batch_accepted, _ = _mh_sweep(rng, X, energy, M, kappas, step, thinning)
        accepted += batch_accepted
        total_steps += thinning
        kept.append(X.copy())
    draws = np.concatenate(kept, axis=0)[:n]
    rate = accepted / (total_steps * chains)
    if rate < MIN_ACCEPTANCE:
        raise SamplerStalled(f"frame Watson acceptance rate {rate:.2e}")
    if not converged:
        logger.warning("frame Watson chains disagree (energy R-hat >= 1.1)")
    logger.debug("frame Watson acceptance %.3f, thinning %d, k=%d", rate, thinning, k)
    return FrameDraws(draws, thinning, rate, converged)


def frame_outlier() -> ProjStiefelPoint:
    """Fixed outlying frame obtained by rotating the canonical frame along a geodesic"""
    s3 = np.sqrt(3.0)
    m1 = np.array([1.0, 1.0, 1.0]) / s3
    m2 = np.array([-2 * s3, s3 + 3, s3 - 3]) / 6.0
    m3 = np.array([-2 * s3, s3 - 3, s3 + 3]) / 6.0
    return ProjStiefelPoint.from_matrix(np.column_stack([m1, m2, m3]), canonical=False)


OutlierSource = Union[np.ndarray, Callable[[int, np.random.Generator], np.ndarray]]


def contaminate(sample, outlier_source: OutlierSource, n1, seed):
    """
    Replace a uniformly chosen n1-subset of the sample with outliers

    Args:
        sample: array whose first axis indexes observations
        outlier_source: one outlier (broadcast), an n1-stack, or a callable (n1, rng) -> stack
        n1 (int): number of replacements
        seed: int, RngSeed or np.random.Generator

    Returns:
        tuple: (contaminated copy, sorted replaced indices)
    """
    sample = np.asarray(sample)
    n = sample.shape[0]
    if not 0 <= n1 <= n:
        raise InvalidInput(f"n1 = {n1} must lie in [0, {n}]")
    rng = as_rng(seed)
    indices = np.sort(rng.choice(n, size=n1, replace=False))
    out = sample.copy()
    if n1 == 0:
        return out, indices
    if callable(outlier_source):
        replacements = np.asarray(outlier_source(n1, rng))
    else:
        replacements = np.asarray(getattr(outlier_source, "matrix", outlier_source))
        if replacements.shape == sample.shape[1:]:
            replacements = np.broadcast_to(replacements, (n1,) + sample.shape[1:])
    out[indices] = replacements
    return out, indices
