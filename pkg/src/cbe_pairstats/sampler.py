"""Draws from the circular beta ensemble.

Two independent constructions are provided:

* :func:`sample_cue` builds a Haar unitary from a complex Ginibre matrix
  (QR with the diagonal phase correction) and diagonalises it.  It only
  exists for ``beta = 2`` and is used as a cross-check.
* :func:`sample_cbeta` draws Verblunsky coefficients with the
  Killip-Nenciu law and extracts the eigenphases of the associated CMV
  matrix.  This works for every ``beta > 0``.

The CMV eigenphases are computed by simultaneous Aberth iteration on the
paraorthogonal polynomial whose zeros are the eigenvalues.  The result is
certified with the monotone Pruefer phase of the Szegő recursion (exactly
one eigenvalue between consecutive midpoints) and falls back to a dense
eigensolver on the assembled matrix whenever the certificate fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

__all__ = [
    "TWO_PI",
    "UNIT_MODULUS_TOL",
    "EigensolverResidualError",
    "PhaseConfiguration",
    "SeedSpec",
    "derive_trial_seed",
    "trial_generator",
    "verblunsky_coefficients",
    "cmv_matrix",
    "cmv_eigenphases",
    "sample_cue",
    "sample_cbeta",
]

TWO_PI = 2.0 * math.pi
UNIT_MODULUS_TOL = 1e-8
_MASK64 = (1 << 64) - 1


class EigensolverResidualError(RuntimeError):
    """Raised when an eigenvalue drifts off the unit circle beyond tolerance."""


# ---------------------------------------------------------------------------
# seeding


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus trial index; the per-trial stream depends on nothing else."""

    master_seed: int
    trial_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if int(self.trial_index) < 0:
            raise ValueError("trial_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        return trial_generator(self.master_seed, self.trial_index)


def derive_trial_seed(master: int, trial: int) -> int:
    """Mix ``(master, trial)`` into a 64-bit seed.

    Uses numpy's ``SeedSequence`` with the trial index as spawn key, which is
    the same hash-based splitting numpy applies to child streams.
    """
    if not 0 <= int(master) <= _MASK64:
        raise ValueError("master must be a 64-bit unsigned integer")
    if int(trial) < 0:
        raise ValueError("trial must be nonnegative")
    ss = np.random.SeedSequence(int(master), spawn_key=(int(trial),))
    return int(ss.generate_state(1, np.uint64)[0])


def trial_generator(master: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_trial_seed(master, trial)))


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, SeedSpec):
        return seed.generator()
    if isinstance(seed, np.random.Generator):
        return seed
    return trial_generator(int(seed), 0)


# ---------------------------------------------------------------------------
# configurations


@dataclass(frozen=True)
class PhaseConfiguration:
    """Sorted eigenphases in ``[0, 2*pi)``.

    Construct with :meth:`from_angles` to reduce and sort arbitrary angles;
    the plain constructor validates but does not modify its input.
    """

    phases: np.ndarray = field(repr=False)

    def __post_init__(self):
        ph = np.array(self.phases, dtype=float, copy=True).reshape(-1)
        if ph.size == 0:
            raise ValueError("a configuration needs at least one phase")
        if not np.all(np.isfinite(ph)):
            raise ValueError("phases must be finite")
        if ph[0] < 0.0 or ph[-1] >= TWO_PI:
            raise ValueError("phases must lie in [0, 2*pi)")
        if np.any(np.diff(ph) < 0.0):
            raise ValueError("phases must be sorted ascending")
        ph.setflags(write=False)
        object.__setattr__(self, "phases", ph)

    @classmethod
    def from_angles(cls, angles) -> "PhaseConfiguration":
        ph = np.mod(np.asarray(angles, dtype=float).reshape(-1), TWO_PI)
        # np.mod can round a tiny negative angle up to exactly 2*pi
        ph[ph >= TWO_PI] = 0.0
        ph.sort()
        return cls(ph)

    @property
    def n(self) -> int:
        return int(self.phases.size)

    def __len__(self) -> int:
        return self.n

    def rotated(self, phi: float) -> "PhaseConfiguration":
        return PhaseConfiguration.from_angles(self.phases + phi)

    def reflected(self) -> "PhaseConfiguration":
        return PhaseConfiguration.from_angles(-self.phases)

    def __repr__(self) -> str:
        return f"PhaseConfiguration(n={self.n})"


# ---------------------------------------------------------------------------
# Haar path


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"matrix size must be a positive integer, got {n!r}")
    return int(n)


def _check_beta(beta) -> float:
    beta = float(beta)
    if not (beta > 0.0 and math.isfinite(beta)):
        raise ValueError(f"beta must be a positive real, got {beta!r}")
    return beta


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _phases_from_eigenvalues(ev: np.ndarray) -> PhaseConfiguration:
    resid = float(np.max(np.abs(np.abs(ev) - 1.0)))
    if resid > UNIT_MODULUS_TOL:
        raise EigensolverResidualError(
            f"eigenvalue modulus residual {resid:.3e} exceeds {UNIT_MODULUS_TOL:g}"
        )
    # angle() of ev/|ev| is the angle of ev itself
    return PhaseConfiguration.from_angles(np.angle(ev))


def sample_cue(n: int, seed) -> PhaseConfiguration:
    """Eigenphases of a Haar-distributed ``n x n`` unitary matrix."""
    n = _check_n(n)
    u = haar_unitary(n, _as_generator(seed))
    return _phases_from_eigenvalues(np.linalg.eigvals(u))


# ---------------------------------------------------------------------------
# CMV path


def verblunsky_coefficients(n: int, beta: float, rng: np.random.Generator):
    """Return ``(alpha, eta)``: ``n - 1`` random coefficients in the disc and
    the angle of the final unimodular coefficient."""
    k = np.arange(n - 1)
    r = np.sqrt(rng.beta(1.0, 0.5 * beta * (n - k - 1))) if n > 1 else np.zeros(0)
    psi = rng.uniform(0.0, TWO_PI, size=n - 1)
    eta = float(rng.uniform(0.0, TWO_PI))
    return r * np.exp(1j * psi), eta


def _theta_block(a: complex) -> np.ndarray:
    rho = math.sqrt(max(0.0, 1.0 - abs(a) ** 2))
    return np.array([[np.conj(a), rho], [rho, -a]])


def cmv_matrix(alpha, eta: float) -> np.ndarray:
    """Dense CMV matrix ``L @ M`` for coefficients ``alpha`` and ``exp(i*eta)``."""
    full = np.concatenate([np.asarray(alpha, dtype=complex), [np.exp(1j * eta)]])
    n = full.size
    L = np.zeros((n, n), dtype=complex)
    M = np.zeros((n, n), dtype=complex)
    M[0, 0] = 1.0
    for j in range(n):
        target, off = (L, j) if j % 2 == 0 else (M, j)
        if j == n - 1:
            target[off, off] = np.conj(full[j])
        else:
            target[off:off + 2, off:off + 2] = _theta_block(full[j])
    return L @ M


@numba.njit(cache=True)
def _newton_ratio(z, alpha, abar_last):
    # p/p' for p(z) = z*Phi(z) - conj(alpha_last)*Phi^*(z) via the Szegő recursion
    phi = 1.0 + 0.0j
    phis = 1.0 + 0.0j
    dphi = 0.0j
    dphis = 0.0j
    for k in range(alpha.shape[0]):
        a = alpha[k]
        ac = a.conjugate()
        zphi = z * phi
        dzphi = phi + z * dphi
        nphi = zphi - ac * phis
        nphis = phis - a * zphi
        ndphi = dzphi - ac * dphis
        ndphis = dphis - a * dzphi
        phi = nphi
        phis = nphis
        dphi = ndphi
        dphis = ndphis
        if k & 15 == 15:
            # the recursion is linear in (phi, phis, dphi, dphis); rescale
            # jointly so iterates far from the circle cannot overflow
            sc = abs(phi) + abs(phis) + abs(dphi) + abs(dphis)
            phi /= sc
            phis /= sc
            dphi /= sc
            dphis /= sc
    p = z * phi - abar_last * phis
    dp = phi + z * dphi - abar_last * dphis
    return p / dp


@numba.njit(cache=True)
def _aberth(alpha, eta, maxit, tol):
    n = alpha.shape[0] + 1
    abar = complex(math.cos(eta), -math.sin(eta))
    z = np.empty(n, np.complex128)
    for j in range(n):
        t = 2.0 * math.pi * (j + 0.5) / n
        z[j] = complex(math.cos(t), math.sin(t))
    for it in range(maxit):
        big = 0.0
        for j in range(n):
            r = _newton_ratio(z[j], alpha, abar)
            s = 0.0j
            for k in range(n):
                if k != j:
                    s += 1.0 / (z[j] - z[k])
            w = r / (1.0 - r * s)
            z[j] -= w
            aw = abs(w)
            if not (aw <= big):
                big = aw
        if not math.isfinite(big):
            return z, False
        if big < tol:
            return z, True
    return z, False


@numba.njit(cache=True)
def _pruefer_phase(theta, alpha, eta):
    # Continuous argument of exp(i*eta) * z * Phi(z) / Phi^*(z) at z = exp(i*theta);
    # strictly increasing in theta with total increase 2*pi*n per turn.
    z = complex(math.cos(theta), math.sin(theta))
    w = z
    acc = 0.0
    m = alpha.shape[0]
    pending = 1.0 + 0.0j
    for k in range(m):
        d = 1.0 - alpha[k] * w
        ad2 = d.real * d.real + d.imag * d.imag
        cd = d.conjugate()
        w = w * z * (cd * cd) / ad2
        pending = pending * d
        if k & 1:
            acc += math.atan2(pending.imag, pending.real)
            pending = 1.0 + 0.0j
    if m & 1:
        acc += math.atan2(pending.imag, pending.real)
    return (m + 1) * theta - 2.0 * acc + eta


@numba.njit(cache=True)
def _one_root_per_gap(theta_sorted, alpha, eta):
    n = theta_sorted.shape[0]
    if n == 1:
        return True
    two_pi = 2.0 * math.pi
    prev = 0.0
    first = 0.0
    for j in range(n):
        nxt = theta_sorted[j + 1] if j + 1 < n else theta_sorted[0] + two_pi
        mid = 0.5 * (theta_sorted[j] + nxt)
        level = math.floor(_pruefer_phase(mid, alpha, eta) / two_pi)
        if j == 0:
            first = level
        elif level - prev != 1.0:
            return False
        prev = level
    # wrap-around gap: the phase gains exactly 2*pi*n over a full turn
    return first + n - prev == 1.0


def cmv_eigenphases(alpha, eta: float, method: str = "aberth") -> PhaseConfiguration:
    """Eigenphases of the CMV matrix with coefficients ``alpha`` and ``exp(i*eta)``.

    ``method="dense"`` diagonalises the assembled matrix.  The default runs
    the certified polynomial root finder and silently uses the dense path if
    the certificate does not hold.
    """
    alpha = np.ascontiguousarray(alpha, dtype=np.complex128)
    if method == "dense":
        return _phases_from_eigenvalues(np.linalg.eigvals(cmv_matrix(alpha, eta)))
    if method != "aberth":
        raise ValueError(f"unknown eigenphase method {method!r}")
    z, converged = _aberth(alpha, float(eta), 200, 1e-14)
    if converged and float(np.max(np.abs(np.abs(z) - 1.0))) <= UNIT_MODULUS_TOL:
        cfg = PhaseConfiguration.from_angles(np.angle(z))
        ph = cfg.phases
        if np.all(np.diff(ph) > 0.0) and _one_root_per_gap(ph, alpha, float(eta)):
            return cfg
    return cmv_eigenphases(alpha, eta, method="dense")


def sample_cbeta(n: int, beta: float, seed, method: str = "aberth") -> PhaseConfiguration:
    """One draw from the circular beta ensemble of size ``n``."""
    n = _check_n(n)
    beta = _check_beta(beta)
    alpha, eta = verblunsky_coefficients(n, beta, _as_generator(seed))
    return cmv_eigenphases(alpha, eta, method=method)
