"""Cocycle construction and iteration; Lyapunov exponents by renormalized
Birkhoff products, by the exact periodic-orbit spectral radius, by the
decreasing Hilbert-Schmidt sequence, and the rotation-average identity check.

The scalar operations work for arbitrary fiber maps.  Families of Schrodinger
entry potentials (and constant-left-factor matrix families) additionally have
batched numpy kernels, shared with the regularized-functional module; both
paths implement the same estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bases import (BasePoint, BaseSystem, BernoulliShift, CircleRotation,
                    IntegrationScheme, PeriodicOrbits, PeriodicPoint, Potential,
                    ShiftPoint, CirclePoint, check_attachment, combine,
                    constant_potential, integrate, potential_value,
                    rotation_start, symbols_from_stream, _sample_seed)
from .projective import IDENTITY, Mat2, rotation

_RESCALE_TRIGGER = 1e100


@dataclass(frozen=True)
class Cocycle:
    """A base system together with a fiber map x -> SL(2) matrix.

    `entry` records the Schrodinger structure (fiber [[entry(x), -1], [1, 0]])
    when present; `left` records a constant left factor over `base_fiber`.
    Both enable the batched kernels; the generic `fiber` is always valid.
    """

    base: BaseSystem
    fiber: Callable[[BasePoint], Mat2]
    real_flag: bool = True
    entry: Potential | None = None
    base_fiber: Callable[[BasePoint], Mat2] | None = None
    left: Mat2 | None = None


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    stderr: float
    method: str           # birkhoff | periodic_exact | uh_exact | fubini
    n: int = 0
    samples: int = 1


def schrodinger_entry_cocycle(base: BaseSystem, entry: Potential) -> Cocycle:
    """Fiber [[w(x), -1], [1, 0]] for the entry function w (the convention in
    which L(w) is written for Schrodinger cocycles)."""
    check_attachment(entry, base)

    def fiber(pt: BasePoint) -> Mat2:
        return Mat2(potential_value(entry, base, pt), -1.0, 1.0, 0.0)

    return Cocycle(base=base, fiber=fiber, real_flag=entry.is_real(), entry=entry)


def schrodinger_cocycle(base: BaseSystem, potential: Potential, energy: complex) -> Cocycle:
    """Schrodinger cocycle with fiber [[E - v(x), -1], [1, 0]]."""
    entry = combine([(energy, constant_potential(base)), (-1.0, potential)])
    return schrodinger_entry_cocycle(base, entry)


def constant_cocycle(base: BaseSystem, m: Mat2) -> Cocycle:
    return Cocycle(base=base, fiber=lambda pt: m, real_flag=m.is_real())


def matrix_cocycle(base: BaseSystem, fiber: Callable[[BasePoint], Mat2],
                   real_flag: bool = True) -> Cocycle:
    return Cocycle(base=base, fiber=fiber, real_flag=real_flag)


def left_multiplied_cocycle(c: Cocycle, left: Mat2) -> Cocycle:
    """Cocycle with fiber x -> left @ A(x)."""
    inner = c.base_fiber if c.base_fiber is not None else c.fiber
    eff_left = left if c.left is None else (left @ c.left)
    return Cocycle(base=c.base, fiber=lambda pt: left @ c.fiber(pt),
                   real_flag=c.real_flag and left.is_real(),
                   base_fiber=inner, left=eff_left)


def right_rotated_cocycle(c: Cocycle, theta: float) -> Cocycle:
    """Cocycle with fiber x -> A(x) @ R_theta (rotation by angle 2 pi theta)."""
    r = rotation(theta)
    return Cocycle(base=c.base, fiber=lambda pt: c.fiber(pt) @ r, real_flag=c.real_flag)


# ---------------------------------------------------------------------------
# scalar iteration

def iterate_renormalized(c: Cocycle, x: BasePoint, n: int) -> tuple[Mat2, float]:
    """(M, log_norm) with M of unit Frobenius norm and M * exp(log_norm) equal
    to A_n(x) in exact arithmetic.

    Rescaling by the Frobenius norm happens every step; the rescaling logs
    telescope to log ||A_n||_HS and are accumulated with compensated summation.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    m11, m12, m21, m22 = 1.0 + 0j, 0j, 0j, 1.0 + 0j
    acc = 0.0
    comp = 0.0
    pt = x
    fiber = c.fiber
    base = c.base
    for _ in range(n):
        a = fiber(pt)
        n11 = a.a11 * m11 + a.a12 * m21
        n12 = a.a11 * m12 + a.a12 * m22
        n21 = a.a21 * m11 + a.a22 * m21
        n22 = a.a21 * m12 + a.a22 * m22
        s = math.sqrt(abs(n11) ** 2 + abs(n12) ** 2 + abs(n21) ** 2 + abs(n22) ** 2)
        m11, m12, m21, m22 = n11 / s, n12 / s, n21 / s, n22 / s
        y = math.log(s) - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        pt = base.step(pt)
    return Mat2(m11, m12, m21, m22), acc


def direct_product(c: Cocycle, x: BasePoint, n: int) -> Mat2:
    """Unrescaled A_n(x); only safe for small n (overflow check is on the caller)."""
    m = IDENTITY
    pt = x
    for _ in range(n):
        m = c.fiber(pt) @ m
        pt = c.base.step(pt)
    return m


def _log_opnorm_of_product(c: Cocycle, x: BasePoint, n: int) -> float:
    m, acc = iterate_renormalized(c, x, n)
    return acc + math.log(m.opnorm())


# ---------------------------------------------------------------------------
# eigenvalue helpers (scaled spectral radius)

def _lnrho_scaled(tr_hat: np.ndarray, det_hat: np.ndarray, logscale: np.ndarray,
                  real_input: np.ndarray) -> np.ndarray:
    """log spectral radius of matrices exp(logscale) * M_hat given trace and
    det of M_hat.  Real elliptic/parabolic monodromies (|trace| <= 2) snap to
    exactly 0; roundoff negatives are clamped (|det| = 1 forces rho >= 1)."""
    tr_hat = np.asarray(tr_hat, dtype=complex)
    det_hat = np.asarray(det_hat, dtype=complex)
    logscale = np.broadcast_to(np.asarray(logscale, dtype=float), tr_hat.shape)
    disc = np.sqrt(tr_hat * tr_hat - 4.0 * det_hat)
    rho_hat = 0.5 * np.maximum(np.abs(tr_hat + disc), np.abs(tr_hat - disc))
    with np.errstate(divide="ignore"):
        out = logscale + np.log(rho_hat)
        log_tr_true = logscale + np.log(np.abs(tr_hat))
    out = np.maximum(out, 0.0)
    real_in = np.broadcast_to(np.asarray(real_input, dtype=bool), tr_hat.shape)
    elliptic = (real_in
                & (np.abs(tr_hat.imag) <= 1e-12 * np.abs(tr_hat.real) + 1e-300)
                & (log_tr_true <= math.log(2.0) + 1e-14))
    return np.where(elliptic, 0.0, out)


# ---------------------------------------------------------------------------
# batched kernels over Schrodinger entry arrays

def _tree_reduce(factors: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Ordered product factors[..., n-1] @ ... @ factors[..., 0] by pairwise
    tree reduction with per-level rescaling.

    factors: (..., n, 2, 2).  Returns (trace_hat, det_hat, logscale,
    log_opnorm_hat) of the product written as exp(logscale) * M_hat with
    M_hat of unit max-entry.  Rescaling every level keeps all intermediates
    bounded, so arbitrarily long hyperbolic products cannot overflow.
    """
    m = np.asarray(factors, dtype=complex)
    lead = m.shape[:-3]
    logscale = np.zeros(lead + (m.shape[-3],))
    while m.shape[-3] > 1:
        n = m.shape[-3]
        if n % 2 == 1:
            pad_m = np.broadcast_to(np.eye(2, dtype=complex), lead + (1, 2, 2))
            m = np.concatenate([m, pad_m], axis=-3)
            logscale = np.concatenate([logscale, np.zeros(lead + (1,))], axis=-1)
        m = np.matmul(m[..., 1::2, :, :], m[..., 0::2, :, :])
        logscale = logscale[..., 0::2] + logscale[..., 1::2]
        biggest = np.abs(m).max(axis=(-2, -1))
        scale = np.where(biggest > 0.0, biggest, 1.0)
        m = m / scale[..., None, None]
        logscale = logscale + np.log(scale)
    m = m[..., 0, :, :]
    c = logscale[..., 0]
    tr = m[..., 0, 0] + m[..., 1, 1]
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    s = (np.abs(m) ** 2).sum(axis=(-2, -1))
    disc = np.maximum(s * s - 4.0 * np.abs(det) ** 2, 0.0)
    log_opnorm = 0.5 * np.log(0.5 * (s + np.sqrt(disc)))
    return tr, det, c, log_opnorm


def _schrodinger_product(entries: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Multiply out [[e_j, -1], [1, 0]] factors along the last axis.

    entries has shape (..., n); returns (trace_hat, det_hat, logscale,
    log_opnorm_hat) of the renormalized product."""
    e = np.asarray(entries, dtype=complex)
    factors = np.zeros(e.shape + (2, 2), dtype=complex)
    factors[..., 0, 0] = e
    factors[..., 0, 1] = -1.0
    factors[..., 1, 0] = 1.0
    return _tree_reduce(factors)


def _matrix_product(mats: np.ndarray, left: np.ndarray | None = None):
    """Same reduction for explicit per-step factors mats (n, 2, 2), optionally
    premultiplied stepwise by constant lane matrices left (K, 2, 2)."""
    mats = np.asarray(mats, dtype=complex)
    if left is None:
        factors = mats[None, :, :, :]
    else:
        left = np.asarray(left, dtype=complex)
        factors = np.matmul(left[:, None, :, :], mats[None, :, :, :])
    return _tree_reduce(factors)


class SchrodingerFamilyEvaluator:
    """Batched Lyapunov exponents of fiber entries w_k over a fixed base.

    Precomputes the integration support once (orbit points, Birkhoff orbit, or
    Monte Carlo windows); `lyapunov_batch` then maps a stack of entry arrays
    over that support to (values, stderrs).  Exact on periodic orbits, single
    Birkhoff orbit with the N-vs-N/2 proxy on rotations, seeded sample means
    on shifts.  Complex entries are allowed everywhere.
    """

    def __init__(self, base: BaseSystem, scheme: IntegrationScheme = IntegrationScheme()):
        self.base = base
        self.scheme = scheme
        if isinstance(base, PeriodicOrbits):
            self.kind = "periodic"
        elif isinstance(base, CircleRotation):
            self.kind = "birkhoff"
            self.n = max(2, scheme.n)
            self.xs = base.orbit_array(rotation_start(scheme.seed), self.n)
        elif isinstance(base, BernoulliShift):
            self.kind = "monte_carlo"
            self.n = max(2, scheme.n)
            self.samples = max(2, scheme.samples)
            self._window_len = self.n + scheme.window
            self._draw_windows()
        else:
            raise TypeError(type(base).__name__)

    def _draw_windows(self):
        self.windows = np.stack([
            symbols_from_stream(_sample_seed(self.scheme.seed, i), 0,
                                self._window_len, self.base.cum_probs)
            for i in range(self.samples)])

    def potential_support(self, pot: Potential) -> object:
        """Values of pot over the support; combine linearly and feed the result
        to lyapunov_batch."""
        check_attachment(pot, self.base)
        if self.kind == "periodic":
            return [np.array([pot.value(PeriodicPoint(j, p)) for p in range(n)], dtype=complex)
                    for j, (n, _) in enumerate(self.base.orbits)]
        if self.kind == "birkhoff":
            return pot.evaluate(self.xs).astype(complex)
        depth = pot.depth
        if self.n + depth > self._window_len:
            # counter-mode symbols agree on prefixes, so longer windows are
            # consistent extensions of the ones already drawn
            self._window_len = self.n + depth
            self._draw_windows()
        idx = np.zeros((self.samples, self.n), dtype=np.int64)
        for d in range(depth):
            idx = idx * pot.symbols + self.windows[:, d:d + self.n]
        table = np.asarray(pot.table, dtype=complex)
        return table[idx]

    def lyapunov_batch(self, entries) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "periodic":
            vals = 0.0
            reals = [np.max(np.abs(np.asarray(e, dtype=complex).imag), axis=-1) == 0.0
                     for e in entries]
            for (nj, w), ent, real in zip(self.base.orbits, entries, reals):
                tr, det, c, _ = _schrodinger_product(np.asarray(ent, dtype=complex))
                vals = vals + (w / nj) * _lnrho_scaled(tr, det, c, real)
            return np.asarray(vals, dtype=float), np.zeros(np.shape(vals))
        if self.kind == "birkhoff":
            ent = np.asarray(entries, dtype=complex)
            half = self.n // 2
            _, _, c_h, op_h = _schrodinger_product(ent[..., :half])
            _, _, c, op = _schrodinger_product(ent)
            val = (c + op) / self.n
            val_half = (c_h + op_h) / half
            return val, np.abs(val - val_half)
        ent = np.asarray(entries, dtype=complex)     # (K, samples, n)
        tr, det, c, op = _schrodinger_product(ent)
        vals_ks = (c + op) / self.n
        val = vals_ks.mean(axis=-1)
        stderr = vals_ks.std(axis=-1, ddof=1) / math.sqrt(vals_ks.shape[-1])
        return val, stderr


class MatrixFamilyEvaluator:
    """Batched Lyapunov exponents of x -> C_k @ A(x) for constant C_k."""

    def __init__(self, cocycle: Cocycle, scheme: IntegrationScheme = IntegrationScheme()):
        self.base = cocycle.base
        self.scheme = scheme
        fiber = cocycle.fiber

        def mats_at(points) -> np.ndarray:
            out = np.empty((len(points), 2, 2), dtype=complex)
            for i, pt in enumerate(points):
                a = fiber(pt)
                out[i] = ((a.a11, a.a12), (a.a21, a.a22))
            return out

        if isinstance(self.base, PeriodicOrbits):
            self.kind = "periodic"
            self.orbit_mats = [mats_at([PeriodicPoint(j, p) for p in range(n)])
                               for j, (n, _) in enumerate(self.base.orbits)]
        elif isinstance(self.base, CircleRotation):
            self.kind = "birkhoff"
            self.n = max(2, scheme.n)
            xs = self.base.orbit_array(rotation_start(scheme.seed), self.n)
            self.mats = mats_at([CirclePoint(float(x)) for x in xs])
        else:
            self.kind = "monte_carlo"
            self.n = max(2, scheme.n)
            self.samples = max(2, scheme.samples)
            self.sample_mats = [mats_at([ShiftPoint(_sample_seed(scheme.seed, i), k)
                                         for k in range(self.n)])
                                for i in range(self.samples)]

    def lyapunov_batch(self, left: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        left = np.asarray(left, dtype=complex)
        k = left.shape[0]
        real_in = np.array([np.max(np.abs(left[i].imag)) == 0.0 for i in range(k)])
        if self.kind == "periodic":
            vals = np.zeros(k)
            for (nj, w), mats in zip(self.base.orbits, self.orbit_mats):
                mats_real = np.max(np.abs(mats.imag)) == 0.0
                tr, det, c, _ = _matrix_product(mats, left)
                vals += (w / nj) * _lnrho_scaled(tr, det, c, real_in & mats_real)
            return vals, np.zeros(k)
        if self.kind == "birkhoff":
            half = self.n // 2
            _, _, c_h, op_h = _matrix_product(self.mats[:half], left)
            _, _, c, op = _matrix_product(self.mats, left)
            val = (c + op) / self.n
            val_half = (c_h + op_h) / half
            return val, np.abs(val - val_half)
        per_sample = np.empty((k, self.samples))
        for i, mats in enumerate(self.sample_mats):
            tr, det, c, op = _matrix_product(mats, left)
            per_sample[:, i] = (c + op) / self.n
        val = per_sample.mean(axis=1)
        stderr = per_sample.std(axis=1, ddof=1) / math.sqrt(self.samples)
        return val, stderr


# ---------------------------------------------------------------------------
# public estimators

def lyapunov_birkhoff(c: Cocycle, n: int, samples: int = 1, seed: int = 0) -> LyapunovEstimate:
    """Average of (1/n) log ||A_n(x)|| over mu-sampled starting points.

    Periodic bases enumerate all orbit points exactly (the remaining error is
    the finite-n bias).  Rotations chunk a single seeded Birkhoff orbit into
    `samples` consecutive length-n blocks.  Shifts draw seeded windows.
    """
    if n < 1 or samples < 1:
        raise ValueError("need n >= 1 and samples >= 1")
    base = c.base
    if isinstance(base, PeriodicOrbits):
        total = 0.0
        for j, (nj, w) in enumerate(base.orbits):
            s = sum(_log_opnorm_of_product(c, PeriodicPoint(j, p), n) / n for p in range(nj))
            total += w * s / nj
        return LyapunovEstimate(value=total, stderr=0.0, method="birkhoff", n=n,
                                samples=sum(nj for nj, _ in base.orbits))
    if isinstance(base, CircleRotation):
        x0 = rotation_start(seed)
        if samples == 1:
            val = _log_opnorm_of_product(c, CirclePoint(x0), n) / n
            half = max(1, n // 2)
            vhalf = _log_opnorm_of_product(c, CirclePoint(x0), half) / half
            return LyapunovEstimate(value=val, stderr=abs(val - vhalf),
                                    method="birkhoff", n=n, samples=1)
        vals = []
        pt = CirclePoint(x0)
        for _ in range(samples):
            vals.append(_log_opnorm_of_product(c, pt, n) / n)
            pt = CirclePoint((pt.x + n * base.alpha) % 1.0)
        vals = np.array(vals)
        return LyapunovEstimate(value=float(vals.mean()),
                                stderr=float(vals.std(ddof=1) / math.sqrt(samples)),
                                method="birkhoff", n=n, samples=samples)
    vals = np.array([
        _log_opnorm_of_product(c, ShiftPoint(_sample_seed(seed, i), 0), n) / n
        for i in range(samples)])
    stderr = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    return LyapunovEstimate(value=float(vals.mean()), stderr=stderr,
                            method="birkhoff", n=n, samples=samples)


def lyapunov_periodic_exact(c: Cocycle) -> LyapunovEstimate:
    """sum_j w_j (1/n_j) log rho(A_{n_j}(x_j)) over the periodic orbits.

    rho is the spectral radius of the monodromy; elliptic/parabolic real
    monodromies (|trace| <= 2) contribute exactly 0.
    """
    base = c.base
    if not isinstance(base, PeriodicOrbits):
        raise TypeError("lyapunov_periodic_exact needs a PeriodicOrbits base")
    total = 0.0
    for j, (nj, w) in enumerate(base.orbits):
        m11, m12, m21, m22 = 1.0 + 0j, 0j, 0j, 1.0 + 0j
        logscale = 0.0
        real = True
        pt = PeriodicPoint(j, 0)
        for _ in range(nj):
            a = c.fiber(pt)
            real = real and a.is_real()
            n11 = a.a11 * m11 + a.a12 * m21
            n12 = a.a11 * m12 + a.a12 * m22
            n21 = a.a21 * m11 + a.a22 * m21
            n22 = a.a21 * m12 + a.a22 * m22
            m11, m12, m21, m22 = n11, n12, n21, n22
            big = max(abs(m11), abs(m12), abs(m21), abs(m22))
            if big > _RESCALE_TRIGGER:
                m11, m12, m21, m22 = m11 / big, m12 / big, m21 / big, m22 / big
                logscale += math.log(big)
            pt = base.step(pt)
        tr = m11 + m22
        det = m11 * m22 - m12 * m21
        lnrho = float(_lnrho_scaled(np.array([tr]), np.array([det]),
                                    np.array([logscale]), np.array([real]))[0])
        total += w * lnrho / nj
    return LyapunovEstimate(value=total, stderr=0.0, method="periodic_exact")


def lyapunov_fubini(c: Cocycle, max_doubling: int,
                    scheme: IntegrationScheme = IntegrationScheme()) -> list[float]:
    """[ (1/2^m) integral log ||A_{2^m}||_HS d-mu ]_{m=0..max_doubling}.

    Non-increasing within integration error; every term upper-bounds L.
    """
    if max_doubling > 20:
        raise ValueError("max_doubling must be <= 20")
    out = []
    for m in range(max_doubling + 1):
        length = 2 ** m
        def obs(pt, length=length):
            _, acc = iterate_renormalized(c, pt, length)
            return acc / length
        val, _ = integrate(c.base, obs, scheme)
        out.append(val)
    return out


def best_lyapunov(c: Cocycle, n: int = 4096, samples: int = 1, seed: int = 0) -> LyapunovEstimate:
    """Exact on periodic bases, Birkhoff elsewhere.

    Rotations keep the single-orbit scheme regardless of `samples`; shifts
    get at least two Monte Carlo samples so the standard error is finite.
    """
    if isinstance(c.base, PeriodicOrbits):
        return lyapunov_periodic_exact(c)
    if isinstance(c.base, BernoulliShift):
        return lyapunov_birkhoff(c, n=n, samples=max(2, samples), seed=seed)
    return lyapunov_birkhoff(c, n=n, samples=1, seed=seed)


def ab_average_check(c: Cocycle, theta_nodes: int = 4096,
                     scheme: IntegrationScheme = IntegrationScheme()) -> tuple[float, float]:
    """(theta-average of L(A R_theta), integral of log((||A|| + ||A||^{-1})/2)).

    The rotation average uses the midpoint rule over theta_nodes; each L is
    exact on periodic bases and Birkhoff otherwise.  The caller asserts the
    identity of the two returns within combined errors.
    """
    if theta_nodes < 16:
        raise ValueError("need theta_nodes >= 16")
    if not c.real_flag:
        raise ValueError("the rotation-average identity is for real cocycles")
    thetas = (np.arange(theta_nodes) + 0.5) / theta_nodes
    if isinstance(c.base, PeriodicOrbits):
        ev = MatrixFamilyEvaluator(c, scheme)
        lhs = 0.0
        # A(x) R_theta has the same monodromy trace as R_theta-conjugated
        # ordering only for period 1; evaluate the honest product per theta.
        vals = np.zeros(theta_nodes)
        for j, (nj, w) in enumerate(c.base.orbits):
            mats = ev.orbit_mats[j]
            rot = np.empty((theta_nodes, 2, 2), dtype=complex)
            ang = 2.0 * math.pi * thetas
            rot[:, 0, 0] = np.cos(ang)
            rot[:, 0, 1] = np.sin(ang)
            rot[:, 1, 0] = -np.sin(ang)
            rot[:, 1, 1] = np.cos(ang)
            prod = np.broadcast_to(np.eye(2, dtype=complex), (theta_nodes, 2, 2)).copy()
            logscale = np.zeros(theta_nodes)
            for k in range(nj):
                prod = np.matmul(np.matmul(mats[k][None, :, :], rot), prod)
                big = np.abs(prod).max(axis=(1, 2))
                mask = big > _RESCALE_TRIGGER
                if np.any(mask):
                    sc = np.where(mask, big, 1.0)
                    prod /= sc[:, None, None]
                    logscale += np.log(sc)
            tr = prod[:, 0, 0] + prod[:, 1, 1]
            det = prod[:, 0, 0] * prod[:, 1, 1] - prod[:, 0, 1] * prod[:, 1, 0]
            vals += (w / nj) * _lnrho_scaled(tr, det, logscale, np.array(True))
        lhs = float(vals.mean())
    else:
        lhs_vals = [lyapunov_birkhoff(right_rotated_cocycle(c, float(t)),
                                      n=scheme.n, seed=scheme.seed).value
                    for t in thetas]
        lhs = float(np.mean(lhs_vals))

    def obs(pt):
        nrm = c.fiber(pt).opnorm()
        return math.log(0.5 * (nrm + 1.0 / nrm))

    rhs, _ = integrate(c.base, obs, scheme)
    return lhs, rhs
