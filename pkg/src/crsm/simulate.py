"""Exact LePage-series simulation of max-stable random sup-measures.

The target law is X = sup_i Gamma_i^{-1} Y_i where Gamma_1 < Gamma_2 < ..
are the arrivals of a unit Poisson process and the Y_i are iid spectral
draws.  Two samplers:

* simulate_crsm: Y = theta(E) * indicator(Xi) with Xi distributed as the
  normalized Mobius measure nu / theta(E) of a completely alternating
  capacity.  The resulting X is the Choquet random sup-measure of theta:
  P(X(K_i) <= a_i for all i) = exp(-sum_F nu(F) max{1/a_i : F meets K_i}).
* simulate_spectral: arbitrary nonnegative spectral draws with a declared
  essential bound B.

Exactness of the stopping rule: every term is bounded by bound/Gamma_n,
so once every point that can be positive at all is positive and
bound/Gamma_n has dropped strictly below the smallest running maximum, no
later term can change any coordinate.  "Exact" mode stops there; the
tail is provably irrelevant, not just negligible.  "Truncated" mode keeps
exactly n_terms terms of the same substream, so a truncated sample is
pathwise dominated by its exact twin.

Randomness contract: sample j of a run with seed s is generated from the
counter-based generator Philox(key=[s, j]), independent of all other
samples and bit-reproducible across runs, platforms and sample counts.
Within a substream the draws occur in a fixed documented order (chunked
exponential spacings and uniform pairs for the CRSM path; one spacing
then one spectral draw per term otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .carrier import Carrier, iter_bits
from .setfun import Capacity, mobius_inverse
from .tdf import SpectralTDF

CA_SIM_TOL = 1e-9


class MaxTermsExceeded(RuntimeError):
    """Exact stopping did not trigger within config.max_terms terms."""


@dataclass(frozen=True)
class SimConfig:
    """Simulation request: substream seed, sample count, stopping mode."""

    seed: int
    samples: int
    mode: str = "exact"
    n_terms: Optional[int] = None
    max_terms: int = 1_000_000

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative int")
        if self.samples < 1:
            raise ValueError("need at least one sample")
        if self.mode not in ("exact", "truncated"):
            raise ValueError(f"mode must be 'exact' or 'truncated', got {self.mode!r}")
        if self.mode == "truncated" and (self.n_terms is None or self.n_terms < 1):
            raise ValueError("truncated mode needs n_terms >= 1")
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")


def substream(seed: int, index: int) -> np.random.Generator:
    """Counter-based per-sample generator; key = (run seed, sample index)."""
    return np.random.Generator(np.random.Philox(key=[seed, index]))


@dataclass(frozen=True)
class SampleBatch:
    """Realizations of a random sup-measure, one row per sample.

    values[j, i] = X_j({x_i}); the sup-measure of any set is the row max
    over the mask.  first_atoms carries the first LePage atom Xi_1 of each
    sample (CRSM runs only), which is exactly the argmax set of X_j.
    """

    carrier: Carrier
    values: np.ndarray
    seed: int
    mode: str
    n_terms: Optional[int] = None
    first_atoms: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def sup(self, mask: int) -> np.ndarray:
        """X_j(K) for every sample j (0 for the empty set)."""
        self.carrier.validate_mask(mask)
        if mask == 0:
            return np.zeros(self.n)
        idx = list(iter_bits(mask))
        return self.values[:, idx].max(axis=1)

    def extremal(self, f) -> np.ndarray:
        """Extremal integral of f against each sample: max_x f(x) X_j(x)."""
        from .integrals import _vals
        v = _vals(f, self.carrier)
        return (self.values * v[None, :]).max(axis=1)


class _AliasTable:
    """Vose alias method over positive weights; two uniforms per pick."""

    def __init__(self, weights: np.ndarray):
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("alias table needs nonnegative weights with positive sum")
        k = len(w)
        scaled = w * (k / w.sum())
        self.prob = np.ones(k)
        self.alias = np.arange(k)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        scaled = scaled.copy()
        while small and large:
            s = small.pop()
            l = large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = l
            scaled[l] -= 1.0 - scaled[s]
            (small if scaled[l] < 1.0 else large).append(l)
        self.k = k

    def pick(self, u1: float, u2: float) -> int:
        i = min(int(u1 * self.k), self.k - 1)
        return int(i if u2 < self.prob[i] else self.alias[i])


class _TermStream:
    """Buffered (spacing, uniform pair) draws for one sample substream.

    Buffers start at 8 terms and double, so the value consumed by term i
    depends only on (seed, sample index, i): exact and truncated runs of
    the same substream see identical terms.
    """

    def __init__(self, gen: np.random.Generator, chunk: int = 8):
        self.gen = gen
        self.e = gen.standard_exponential(chunk)
        self.u = gen.random((chunk, 2))
        self.pos = 0

    def next_term(self) -> tuple[float, float, float]:
        if self.pos == len(self.e):
            grow = len(self.e)
            self.e = np.concatenate([self.e, self.gen.standard_exponential(grow)])
            self.u = np.concatenate([self.u, self.gen.random((grow, 2))])
        e = self.e[self.pos]
        u1, u2 = self.u[self.pos]
        self.pos += 1
        return float(e), float(u1), float(u2)


def _crsm_atoms(theta: Capacity) -> tuple[np.ndarray, np.ndarray, int]:
    """Positive Mobius atoms (masks, weights) and the relevant-point mask.

    Refuses capacities that are not completely alternating within
    CA_SIM_TOL; weights inside the tolerance band are clamped to zero.
    """
    nu = mobius_inverse(theta)
    min_w, witness = nu.min_weight()
    if min_w < -CA_SIM_TOL:
        raise ValueError(
            f"capacity is not completely alternating (mobius weight {min_w:.3g} "
            f"at mask {witness:#x}); no random sup-measure to simulate")
    if theta.total <= 0:
        raise ValueError("capacity is identically zero; nothing to simulate")
    w = np.clip(nu.weights, 0.0, None)
    masks = np.flatnonzero(w > 0).astype(np.int64)
    weights = w[masks]
    relevant = 0
    for m in masks:
        relevant |= int(m)
    return masks, weights, relevant


def simulate_crsm(theta: Capacity, config: SimConfig) -> SampleBatch:
    """Sample the Choquet random sup-measure of a CA capacity.

    Atom sets arrive as Xi ~ nu/theta(E) with common magnitude
    theta(E)/Gamma_n.  Stopping rule (exact mode): first n with
    theta(E)/Gamma_n strictly below the running maximum at every point
    with theta({x}) > 0; all coordinates are exact from that term on.
    """
    masks, weights, relevant = _crsm_atoms(theta)
    d = theta.carrier.size
    total = theta.total
    alias = _AliasTable(weights)
    rel_idx = np.fromiter(iter_bits(relevant), dtype=np.int64)
    exact = config.mode == "exact"
    limit = config.max_terms if exact else config.n_terms

    out = np.empty((config.samples, d))
    firsts = np.empty(config.samples, dtype=np.int64)
    for j in range(config.samples):
        stream = _TermStream(substream(config.seed, j))
        x = np.zeros(d)
        gamma = 0.0
        covered = 0
        first = 0
        n = 0
        while True:
            if n >= limit:
                if exact:
                    raise MaxTermsExceeded(
                        f"sample {j} did not stop within {limit} terms")
                break
            e, u1, u2 = stream.next_term()
            gamma += e
            n += 1
            mask = int(masks[alias.pick(u1, u2)])
            if first == 0:
                first = mask
            val = total / gamma
            for i in iter_bits(mask):
                if x[i] < val:
                    x[i] = val
            covered |= mask
            if exact and covered & relevant == relevant and val < x[rel_idx].min():
                break
        out[j] = x
        firsts[j] = first
    out.setflags(write=False)
    return SampleBatch(theta.carrier, out, config.seed, config.mode,
                       config.n_terms, firsts)


@dataclass(frozen=True)
class SpectralSampler:
    """Spectral draw Y for the LePage series, with its declared envelope.

    draw(gen) returns one nonnegative vector.  bound is an essential sup
    of max_x Y_x (required for exact stopping); structural_zeros masks the
    points with Y_x = 0 almost surely; argmax_reachable masks the points
    that can ever realize the maximum of Y (needed by `couple`).  Each
    draw is validated against these declarations.
    """

    carrier: Carrier
    draw: Callable[[np.random.Generator], np.ndarray]
    bound: Optional[float] = None
    structural_zeros: int = 0
    argmax_reachable: Optional[int] = None

    def __post_init__(self) -> None:
        self.carrier.validate_mask(self.structural_zeros)
        if self.argmax_reachable is not None:
            self.carrier.validate_mask(self.argmax_reachable)
        if self.bound is not None and not (self.bound > 0 and math.isfinite(self.bound)):
            raise ValueError(f"bound must be positive finite, got {self.bound}")

    def checked_draw(self, gen: np.random.Generator) -> np.ndarray:
        y = np.asarray(self.draw(gen), dtype=float)
        if y.shape != (self.carrier.size,):
            raise ValueError(f"spectral draw has shape {y.shape}")
        if np.any(y < 0) or not np.all(np.isfinite(y)):
            raise ValueError("spectral draw must be nonnegative finite")
        if self.bound is not None and np.any(y > self.bound * (1 + 1e-12)):
            raise ValueError(
                f"spectral draw exceeds declared bound {self.bound}")
        if self.structural_zeros:
            idx = list(iter_bits(self.structural_zeros))
            if np.any(y[idx] != 0.0):
                raise ValueError("spectral draw is positive at a declared structural zero")
        return y

    @classmethod
    def from_atoms(cls, carrier: Carrier, probs, atoms) -> "SpectralSampler":
        """Finite spectral law; bound, zeros and argmax reach are derived."""
        law = SpectralTDF(carrier, np.asarray(probs, float), np.asarray(atoms, float))
        return cls.from_tdf(law)

    @classmethod
    def from_tdf(cls, law: SpectralTDF) -> "SpectralSampler":
        atoms = law.atoms
        alias = _AliasTable(law.probs)

        def draw(gen: np.random.Generator) -> np.ndarray:
            u = gen.random(2)
            return atoms[alias.pick(u[0], u[1])]

        peaks = atoms.max(axis=1)
        zeros_mask = 0
        for i in np.flatnonzero(atoms.max(axis=0) == 0.0):
            zeros_mask |= 1 << int(i)
        reach = 0
        for k in range(atoms.shape[0]):
            if peaks[k] > 0:
                for i in np.flatnonzero(atoms[k] == peaks[k]):
                    reach |= 1 << int(i)
        return cls(law.carrier, draw, float(peaks.max()), zeros_mask, reach)

    @classmethod
    def from_capacity(cls, theta: Capacity) -> "SpectralSampler":
        """Indicator atoms theta(E) * 1_F with F ~ nu/theta(E): the CRSM law."""
        masks, weights, _ = _crsm_atoms(theta)
        d = theta.carrier.size
        atoms = np.zeros((len(masks), d))
        for k, m in enumerate(masks):
            for i in iter_bits(int(m)):
                atoms[k, i] = theta.total
        return cls.from_tdf(SpectralTDF(theta.carrier, weights / weights.sum(), atoms))


def simulate_spectral(sampler: SpectralSampler, config: SimConfig) -> SampleBatch:
    """LePage series with arbitrary spectral draws.

    Exact mode needs the declared bound; stopping mirrors simulate_crsm
    with bound/Gamma_n in place of theta(E)/Gamma_n.
    """
    if config.mode == "exact" and sampler.bound is None:
        raise ValueError("exact mode needs a declared spectral bound")
    d = sampler.carrier.size
    live = sampler.carrier.full_mask & ~sampler.structural_zeros
    if live == 0:
        raise ValueError("every point is a structural zero; nothing to simulate")
    live_idx = np.fromiter(iter_bits(live), dtype=np.int64)
    exact = config.mode == "exact"
    limit = config.max_terms if exact else config.n_terms

    out = np.empty((config.samples, d))
    for j in range(config.samples):
        gen = substream(config.seed, j)
        x = np.zeros(d)
        gamma = 0.0
        n = 0
        while True:
            if n >= limit:
                if exact:
                    raise MaxTermsExceeded(
                        f"sample {j} did not stop within {limit} terms")
                break
            gamma += float(gen.standard_exponential())
            n += 1
            y = sampler.checked_draw(gen)
            np.maximum(x, y / gamma, out=x)
            if exact:
                room = sampler.bound / gamma
                mins = x[live_idx].min()
                if mins > 0.0 and room < mins:
                    break
        out[j] = x
    out.setflags(write=False)
    return SampleBatch(sampler.carrier, out, config.seed, config.mode, config.n_terms)


def simulate_model(model, config: SimConfig) -> SampleBatch:
    """Dispatch: capacities and Choquet/Lebesgue TDFs go through the CRSM
    path, spectral TDFs through their own atoms."""
    from .tdf import ChoquetTDF, LebesgueTDF, extremal_coefficients
    if isinstance(model, Capacity):
        return simulate_crsm(model, config)
    if isinstance(model, ChoquetTDF):
        return simulate_crsm(model.theta, config)
    if isinstance(model, LebesgueTDF):
        return simulate_crsm(extremal_coefficients(model), config)
    if isinstance(model, SpectralTDF):
        return simulate_spectral(SpectralSampler.from_tdf(model), config)
    raise TypeError(f"cannot simulate {type(model).__name__}")


@dataclass(frozen=True)
class FrechetEstimate:
    scale: float
    half_width: float
    n: int


def frechet_scale_estimate(z: np.ndarray, min_n: int = 30) -> FrechetEstimate:
    """MLE of the scale a of a unit-shape Frechet sample.

    1/z_j are iid Exp(a), so a_hat = n / sum(1/z_j); the reported
    half-width is the 3-sigma band 3 a_hat / sqrt(n).  Requires at least
    min_n strictly positive observations.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < min_n:
        raise ValueError(f"need at least {min_n} observations, got {z.size}")
    if np.any(z <= 0) or not np.all(np.isfinite(z)):
        raise ValueError("Frechet scale needs strictly positive finite observations")
    n = z.size
    scale = n / float((1.0 / z).sum())
    return FrechetEstimate(scale, 3.0 * scale / math.sqrt(n), n)


def argmax_set(x: np.ndarray, rel_tol: float = 0.0) -> int:
    """Mask of the points within rel_tol of the maximum of x.

    rel_tol = 0 keeps the exact argmax ties; the zero vector has no argmax
    and raises.
    """
    x = np.asarray(x, dtype=float)
    m = float(x.max())
    if m <= 0.0:
        raise ValueError("argmax of the zero vector is undefined")
    if not 0.0 <= rel_tol < 1.0:
        raise ValueError("rel_tol must lie in [0, 1)")
    mask = 0
    for i in np.flatnonzero(x >= (1.0 - rel_tol) * m):
        mask |= 1 << int(i)
    return mask


@dataclass(frozen=True)
class ArgmaxIndependenceReport:
    z: float
    passed: bool
    n: int
    hit_rate: float
    negative_control: bool


def argmax_independence_test(theta: Capacity, region: int, config: SimConfig,
                             negative_control: bool = False,
                             batch: Optional[SampleBatch] = None
                             ) -> ArgmaxIndependenceReport:
    """Correlation test of {argmax set meets region} against 1/X(E).

    For an exact CRSM sample the argmax set equals the first LePage atom
    and is independent of X(E); the statistic z = corr * sqrt(n) is
    asymptotically standard normal, so |z| <= 4 passes.  The negative
    control replaces the indicator with {X(region) > median}, which is
    strongly coupled to X(E) and must blow the same threshold up.
    """
    theta.carrier.validate_mask(region)
    if region == 0:
        raise ValueError("region must be nonempty")
    if batch is None:
        batch = simulate_crsm(theta, config)
    xe = batch.values.max(axis=1)
    t = 1.0 / xe
    if negative_control:
        stat = batch.sup(region)
        ind = (stat > np.median(stat)).astype(float)
    else:
        ind = (batch.values[:, list(iter_bits(region))] == xe[:, None]).any(axis=1)
        ind = ind.astype(float)
    n = batch.n
    if ind.std() == 0.0 or t.std() == 0.0:
        z = 0.0
        corr = 0.0
    else:
        corr = float(np.corrcoef(t, ind)[0, 1])
        z = corr * math.sqrt(n)
    return ArgmaxIndependenceReport(z, abs(z) <= 4.0, n, float(ind.mean()),
                                    negative_control)


@dataclass(frozen=True)
class Coupling:
    """Pathwise sandwich from one spectral stream.

    lower values use Y(E) on the argmax of Y, upper values use Y(E) on the
    whole support of Y; lower <= exact <= upper holds coordinatewise for
    every sample and upper matches exact on the full carrier.

    The lower term is the indicator sup-measure of the argmax set,
    Y(E) * 1{K meets M_Y}.  Restricting Y(E) to subsets of the argmax set
    instead would not be monotone in K; the indicator form is the largest
    monotone, indicator-valued sup-measure dominated by Y.
    """

    lower: SampleBatch
    exact: SampleBatch
    upper: SampleBatch


def couple(sampler: SpectralSampler, config: SimConfig) -> Coupling:
    """Simulate (lower, X, upper) from one substream per sample.

    Requires a finitely-described sampler: a declared bound and the
    argmax-reachable mask (both derived automatically by from_atoms /
    from_tdf / from_capacity).  Black-box draw callables without these
    declarations are rejected.
    """
    if sampler.bound is None or sampler.argmax_reachable is None:
        raise ValueError(
            "coupling needs declared bound and argmax_reachable; build the "
            "sampler from atoms / a TDF / a capacity")
    if sampler.argmax_reachable == 0:
        raise ValueError("no point can realize the spectral argmax")
    d = sampler.carrier.size
    live = sampler.carrier.full_mask & ~sampler.structural_zeros
    live_idx = np.fromiter(iter_bits(live), dtype=np.int64)
    am_idx = np.fromiter(iter_bits(sampler.argmax_reachable), dtype=np.int64)
    exact_mode = config.mode == "exact"
    limit = config.max_terms if exact_mode else config.n_terms

    lo = np.empty((config.samples, d))
    mid = np.empty((config.samples, d))
    hi = np.empty((config.samples, d))
    for j in range(config.samples):
        gen = substream(config.seed, j)
        xl = np.zeros(d)
        x = np.zeros(d)
        xu = np.zeros(d)
        gamma = 0.0
        n = 0
        while True:
            if n >= limit:
                if exact_mode:
                    raise MaxTermsExceeded(
                        f"sample {j} did not stop within {limit} terms")
                break
            gamma += float(gen.standard_exponential())
            n += 1
            y = sampler.checked_draw(gen)
            peak = y.max()
            if peak > 0.0:
                contrib = peak / gamma
                np.maximum(x, y / gamma, out=x)
                support = y > 0.0
                np.maximum(xu, np.where(support, contrib, 0.0), out=xu)
                at_peak = y == peak
                np.maximum(xl, np.where(at_peak, contrib, 0.0), out=xl)
            if exact_mode:
                room = sampler.bound / gamma
                m_x = x[live_idx].min()
                m_l = xl[am_idx].min()
                if m_x > 0.0 and m_l > 0.0 and room < m_x and room < m_l:
                    break
        lo[j] = xl
        mid[j] = x
        hi[j] = xu
    for arr in (lo, mid, hi):
        arr.setflags(write=False)
    mk = lambda a: SampleBatch(sampler.carrier, a, config.seed, config.mode,
                               config.n_terms)
    return Coupling(mk(lo), mk(mid), mk(hi))


@dataclass(frozen=True)
class ContinuityReport:
    p_hat: float
    bound: float
    slack: float
    passed: bool
    n: int


def continuity_bound_check(theta: Capacity, k1: int, k2: int, eps: float,
                           config: SimConfig,
                           batch: Optional[SampleBatch] = None) -> ContinuityReport:
    """Empirical check of P(|X(K1) - X(K2)| > eps) <= modulus / eps.

    The modulus is 2 theta(K1 | K2) - theta(K1) - theta(K2); the empirical
    side gets a 4-sigma binomial allowance on top of the bound.
    """
    theta.carrier.validate_mask(k1)
    theta.carrier.validate_mask(k2)
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError(f"eps must be positive finite, got {eps}")
    if batch is None:
        batch = simulate_crsm(theta, config)
    diff = np.abs(batch.sup(k1) - batch.sup(k2))
    p_hat = float((diff > eps).mean())
    n = batch.n
    bound = (2.0 * float(theta.table[k1 | k2]) - float(theta.table[k1])
             - float(theta.table[k2])) / eps
    slack = 4.0 * math.sqrt(p_hat * (1.0 - p_hat) / n)
    return ContinuityReport(p_hat, bound, slack, p_hat <= bound + slack, n)


@dataclass(frozen=True)
class DisjointnessCheck:
    part_a: int
    part_b: int
    level_a: float
    level_b: float
    p_product: float
    p_hat: float
    sigma: float


@dataclass(frozen=True)
class DisjointnessReport:
    cross_mass: float
    expect_independent: bool
    max_z: float
    consistent: bool
    checks: tuple[DisjointnessCheck, ...]


def independence_on_disjoint(theta: Capacity, parts: Sequence[int],
                             config: SimConfig,
                             quantiles: Sequence[float] = (0.3, 0.5, 0.8),
                             batch: Optional[SampleBatch] = None
                             ) -> DisjointnessReport:
    """Factorization test of the CRSM over disjoint parts.

    X is independent over the parts iff no Mobius mass touches two of
    them; that exact criterion (cross_mass) decides what the empirical
    side must show.  For each pair and quantile q the joint empirical CDF
    at the exact marginal q-quantiles is compared against the product
    q**2 with a 4-sigma binomial allowance: independence must stay inside
    the band, genuine dependence must break it somewhere.
    """
    if len(parts) < 2:
        raise ValueError("need at least two parts")
    seen = 0
    for p in parts:
        theta.carrier.validate_mask(p)
        if p == 0:
            raise ValueError("parts must be nonempty")
        if p & seen:
            raise ValueError("parts overlap")
        if theta.table[p] <= 0:
            raise ValueError("parts must carry positive capacity")
        seen |= p
    nu = mobius_inverse(theta)
    size = 1 << theta.carrier.size
    all_masks = np.arange(size)
    touches = np.zeros(size, dtype=np.int64)
    for p in parts:
        touches += ((all_masks & p) != 0).astype(np.int64)
    cross_mass = float(np.abs(nu.weights[touches >= 2]).sum())
    expect_independent = cross_mass <= CA_SIM_TOL

    if batch is None:
        batch = simulate_crsm(theta, config)
    n = batch.n
    sups = {p: batch.sup(p) for p in parts}
    checks = []
    max_z = 0.0
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            a, b = parts[i], parts[j]
            for q in quantiles:
                s = float(theta.table[a]) / (-math.log(q))
                t = float(theta.table[b]) / (-math.log(q))
                p_prod = q * q
                p_hat = float(((sups[a] <= s) & (sups[b] <= t)).mean())
                sigma = math.sqrt(p_prod * (1.0 - p_prod) / n)
                checks.append(DisjointnessCheck(a, b, s, t, p_prod, p_hat, sigma))
                max_z = max(max_z, abs(p_hat - p_prod) / sigma)
    consistent = (max_z <= 4.0) if expect_independent else (max_z > 4.0)
    return DisjointnessReport(cross_mass, expect_independent, max_z, consistent,
                              tuple(checks))
