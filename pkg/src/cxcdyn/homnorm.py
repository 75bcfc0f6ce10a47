"""Homogeneous norms for expanding linear maps, quasi-ultrametric constants
and chain metrics on the abelian and Heisenberg model groups.

Given an expanding matrix, the norm evaluates |v| = e^{-t(v)} where t(v) is
the unique flow time with ||exp(phi t) v|| = 1 in an adapted inner product
making the flow strictly radially increasing.  Negative real eigenvalues are
split off through an involution commuting with the flow, so the matrix
itself acts as |Phi v| = e |v| in flow normalization (a snowflake power
recalibrates this to the spectral factor when one is available).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class NormError(Exception):
    pass


@dataclass
class ExpandingLinearMap:
    Phi: np.ndarray
    eigenvalues: np.ndarray
    M: np.ndarray                # involution soaking up negative real spectrum
    generator: np.ndarray        # phi with M @ expm(phi) = Phi

    @property
    def dimension(self) -> int:
        return self.Phi.shape[0]


def _split_negative_real(Phi: np.ndarray, margin: float = 1e-9) -> np.ndarray:
    """Involution M = -I on the invariant subspace of negative real
    eigenvalues, +I on a complementary invariant subspace."""
    n = Phi.shape[0]
    evals = np.linalg.eigvals(Phi)
    is_neg = lambda w: abs(w.imag) <= margin * (1 + abs(w)) and w.real < 0

    if not any(is_neg(w) for w in evals):
        return np.eye(n)
    T, Q, k = scipy.linalg.schur(Phi, output="real", sort=lambda a, b: (
        abs(b) <= 1e-12 and a < 0))
    if k == 0 or k == n:
        return -np.eye(n) if k == n else np.eye(n)
    T2, Q2, k2 = scipy.linalg.schur(Phi, output="real", sort=lambda a, b: not (
        abs(b) <= 1e-12 and a < 0))
    neg_basis = Q[:, :k]
    pos_basis = Q2[:, :k2]
    B = np.hstack([neg_basis, pos_basis])
    if B.shape[1] != n or abs(np.linalg.det(B)) < 1e-12:
        raise NormError("could not split the negative real eigenspace")
    D = np.diag([-1.0] * k + [1.0] * k2)
    return B @ D @ np.linalg.inv(B)


def _adapted_basis(phi: np.ndarray, delta: float) -> np.ndarray:
    """Basis in which the symmetric part of phi is positive definite.

    Real Schur form plus a geometric rescaling pushes the strictly upper
    part below delta, so radial growth wins over shear.
    """
    T, Q = scipy.linalg.schur(phi, output="real")
    n = phi.shape[0]
    # strictly upper part excluding the 2x2 rotation blocks on the diagonal
    off = np.triu(T, 1).copy()
    for i in range(n - 1):
        if abs(T[i + 1, i]) > 1e-14:
            off[i, i + 1] = 0.0
    norm_off = np.linalg.norm(off, 2)
    if norm_off <= 1e-300:
        scale = 1.0
    else:
        scale = min(1.0, 0.5 * delta / norm_off)
    S = np.diag([scale ** i for i in range(n)])
    basis = Q @ S
    sym = basis_inv_phi_sym(phi, basis)
    if np.linalg.eigvalsh(sym).min() <= 0:
        raise NormError("monotonicity violation: adapted basis failed")
    return basis


def basis_inv_phi_sym(phi: np.ndarray, basis: np.ndarray) -> np.ndarray:
    A = np.linalg.solve(basis, phi @ basis)
    return 0.5 * (A + A.T)


@dataclass
class HomogeneousNorm:
    map: ExpandingLinearMap
    basis: np.ndarray
    basis_inv: np.ndarray = field(init=False)
    _flow_eval: np.ndarray = field(init=False)
    _flow_vecs: np.ndarray = field(init=False)
    _flow_vecs_inv: np.ndarray = field(init=False)

    def __post_init__(self):
        self.basis_inv = np.linalg.inv(self.basis)
        A = self.basis_inv @ self.map.generator @ self.basis
        w, V = np.linalg.eig(A)
        if np.linalg.cond(V) > 1e8:
            raise NormError("flow generator too defective for the fast path")
        self._flow_eval = w
        self._flow_vecs = V
        self._flow_vecs_inv = np.linalg.inv(V)

    @property
    def spectral_factor(self) -> float:
        """min |eigenvalue| of the map: |Phi v| equals this times |v| in the
        snowflake calibration exposed by ``value_calibrated``."""
        return float(np.min(np.abs(self.map.eigenvalues)))

    def _radius_sq(self, coeffs: np.ndarray, t: float) -> float:
        z = self._flow_vecs @ (np.exp(self._flow_eval * t) * coeffs)
        return float(np.real(np.vdot(z, z)))

    def t_of(self, v: np.ndarray, tol: float = 1e-12) -> float:
        """The unique t with ||exp(phi t) v|| = 1 in the adapted norm."""
        y = self.basis_inv @ np.asarray(v, dtype=float)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            raise ValueError("t_of undefined at the origin")
        coeffs = self._flow_vecs_inv @ y.astype(complex)
        lo, hi = 0.0, 0.0
        if self._radius_sq(coeffs, 0.0) < 1.0:
            hi = 1.0
            while self._radius_sq(coeffs, hi) < 1.0:
                lo, hi = hi, 2 * hi
        else:
            lo = -1.0
            while self._radius_sq(coeffs, lo) > 1.0:
                hi, lo = lo, 2 * lo
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self._radius_sq(coeffs, mid) < 1.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def value(self, v) -> float:
        """|v| in flow normalization: |exp(phi t) v| = e^t |v|."""
        v = np.asarray(v, dtype=float)
        if not np.any(v):
            return 0.0
        return math.exp(-self.t_of(v))

    def value_calibrated(self, v) -> float:
        """|v| rescaled so the matrix itself scales by its smallest
        eigenvalue modulus (the convention of the explicit torus examples)."""
        v = np.asarray(v, dtype=float)
        if not np.any(v):
            return 0.0
        return math.exp(-self.t_of(v) * math.log(self.spectral_factor))

    def flow(self, t: float) -> np.ndarray:
        return self.basis @ np.real(
            self._flow_vecs @ np.diag(np.exp(self._flow_eval * t)) @ self._flow_vecs_inv
        ) @ self.basis_inv

    def monotone_on_samples(self, rng, samples: int = 50, grid: int = 60) -> bool:
        """Finite-difference check that t -> ||exp(phi t) v|| increases."""
        n = self.map.dimension
        for _ in range(samples):
            v = rng.standard_normal(n)
            y = self.basis_inv @ v
            coeffs = self._flow_vecs_inv @ y.astype(complex)
            ts = np.linspace(-3.0, 3.0, grid)
            vals = [self._radius_sq(coeffs, t) for t in ts]
            if any(b <= a for a, b in zip(vals, vals[1:])):
                return False
        return True


def build_norm(Phi, margin: float = 1e-9) -> HomogeneousNorm:
    """Homogeneous norm for a matrix with all eigenvalues outside the unit
    circle; negative real spectrum is handled through the involution factor."""
    Phi = np.asarray(Phi, dtype=float)
    evals = np.linalg.eigvals(Phi)
    if np.min(np.abs(evals)) <= 1.0 + margin:
        raise NormError(
            f"eigenvalue modulus {np.min(np.abs(evals)):.12g} not above 1 + margin")
    M = _split_negative_real(Phi, margin)
    if np.linalg.norm(M @ M - np.eye(Phi.shape[0]), 2) > 1e-8:
        raise NormError("involution factor is not an involution")
    if np.linalg.norm(M @ Phi - Phi @ M, 2) > 1e-8 * np.linalg.norm(Phi, 2):
        raise NormError("involution does not commute with the map")
    phi = np.real(scipy.linalg.logm(M @ Phi))
    lam_min = min(np.real(np.log(w)) for w in np.linalg.eigvals(M @ Phi))
    delta = 0.5 * lam_min
    basis = _adapted_basis(phi, delta)
    emap = ExpandingLinearMap(Phi=Phi, eigenvalues=evals, M=M, generator=phi)
    return HomogeneousNorm(map=emap, basis=basis)


def baby_norm(v) -> float:
    """max(|x|, |y|^lambda) with lambda = log 3 / log 4; scales by exactly 3
    under (x, y) -> (3x, 4y)."""
    lam = math.log(3.0) / math.log(4.0)
    x, y = float(v[0]), float(v[1])
    return max(abs(x), abs(y) ** lam)


BABY_PHI = np.array([[3.0, 0.0], [0.0, 4.0]])


# --- group structure ---------------------------------------------------------

def group_product(group: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if group == "abelian":
        return a + b
    if group == "heisenberg":
        x, y, z = a
        u, v, w = b
        return np.array([x + u, y + v, z + w + 0.5 * (x * v - y * u)])
    raise NormError(f"unknown group {group!r}")


def group_inverse(group: str, a: np.ndarray) -> np.ndarray:
    return -np.asarray(a, dtype=float)


def quasi_triangle_Q(norm: HomogeneousNorm, group: str = "abelian",
                     resolution: int = 24, refinements: int = 2,
                     calibrated: bool = False) -> dict:
    """Q = sup |x*y| over the level set |x| + |y| = 1, by deterministic grid
    search with local refinement; reported with the refinement trend.

    A grid search only bounds Q from below; the trend across refinements is
    the convergence diagnostic.
    """
    n = norm.map.dimension
    value = norm.value_calibrated if calibrated else norm.value
    power = math.log(norm.spectral_factor) if calibrated else 1.0
    dirs = _directions(n, resolution)
    scaled = {}

    def to_norm(u: np.ndarray, s: float) -> np.ndarray:
        # |flow(a) v| = e^{a * power} |v| in the active convention
        if s <= 0.0:
            return np.zeros(n)
        key = (tuple(np.round(u, 12)), round(s, 14))
        if key not in scaled:
            scaled[key] = norm.flow((math.log(s) - math.log(value(u))) / power) @ u
        return scaled[key]

    best = (0.0, None)
    trend = []
    svals = [k / resolution for k in range(resolution + 1)]
    for sweep in range(refinements + 1):
        for s in svals:
            for u in dirs:
                x = to_norm(u, s)
                for w in dirs:
                    y = to_norm(w, 1.0 - s)
                    q = value(group_product(group, x, y))
                    if q > best[0]:
                        best = (q, (s, tuple(u), tuple(w)))
        trend.append(best[0])
        if sweep < refinements and best[1] is not None:
            s0 = best[1][0]
            lo, hi = max(0.0, s0 - 1.0 / resolution), min(1.0, s0 + 1.0 / resolution)
            svals = [lo + (hi - lo) * k / resolution for k in range(resolution + 1)]
    return {"Q": best[0], "witness": best[1], "trend": trend}


def _directions(n: int, resolution: int) -> list[np.ndarray]:
    if n == 1:
        return [np.array([1.0]), np.array([-1.0])]
    if n == 2:
        return [np.array([math.cos(2 * math.pi * k / resolution),
                          math.sin(2 * math.pi * k / resolution)])
                for k in range(resolution)]
    if n == 3:
        out = []
        for i in range(resolution // 2 + 1):
            th = math.pi * i / (resolution // 2)
            for j in range(resolution):
                ph = 2 * math.pi * j / resolution
                out.append(np.array([math.sin(th) * math.cos(ph),
                                     math.sin(th) * math.sin(ph),
                                     math.cos(th)]))
        uniq = []
        seen = set()
        for u in out:
            key = tuple(np.round(u, 9))
            if key not in seen:
                seen.add(key)
                uniq.append(u)
        return uniq
    raise NormError("directions implemented for dimensions 1..3")


@dataclass
class ChainMetric:
    norm: HomogeneousNorm
    epsilon: float
    group: str = "abelian"
    Q: float = field(default=0.0)
    calibrated: bool = True   # scale by the spectral factor rather than e

    def __post_init__(self):
        if not self.Q:
            self.Q = quasi_triangle_Q(self.norm, self.group,
                                      calibrated=self.calibrated)["Q"]
        if self.Q ** self.epsilon >= math.sqrt(2.0):
            raise NormError(
                f"need Q^eps < sqrt(2): Q={self.Q:.6g} requires eps < "
                f"{0.5 * math.log(2) / math.log(max(self.Q, 1 + 1e-15)):.6g}")

    def rho(self, x, y) -> float:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        step = group_product(self.group, group_inverse(self.group, x), y)
        value = self.norm.value_calibrated if self.calibrated else self.norm.value
        return value(step) ** self.epsilon

    @property
    def floor_factor(self) -> float:
        return 3.0 - 2.0 * self.Q ** self.epsilon

    def chain_upper(self, x, y, depth: int = 6) -> float:
        """Greedy midpoint refinement: an upper estimate of the chain infimum."""
        chain = [np.asarray(x, dtype=float), np.asarray(y, dtype=float)]
        for _ in range(depth):
            nxt = [chain[0]]
            improved = False
            for a, b in zip(chain, chain[1:]):
                mid = self._midpoint(a, b)
                if (self.rho(a, mid) + self.rho(mid, b)) < self.rho(a, b) - 1e-15:
                    nxt.extend([mid, b])
                    improved = True
                else:
                    nxt.append(b)
            chain = nxt
            if not improved:
                break
        return sum(self.rho(a, b) for a, b in zip(chain, chain[1:]))

    def _midpoint(self, a, b) -> np.ndarray:
        step = group_product(self.group, group_inverse(self.group, a), b)
        if not np.any(step):
            return a
        half = self.norm.flow(math.log(0.5)) @ step
        return group_product(self.group, a, half)

    def evaluate(self, pairs) -> list[dict]:
        """Per pair: the quasimetric, the certified floor and the chain upper
        estimate, with the sandwich asserted."""
        out = []
        for x, y in pairs:
            r = self.rho(x, y)
            upper = min(self.chain_upper(x, y), r)
            lower = self.floor_factor * r
            if upper > r + 1e-9 or upper < lower - 1e-9:
                raise AssertionError("chain estimate escaped the sandwich")
            out.append({"rho": r, "floor": lower, "upper": upper})
        return out


def torus_homothety_check(pairs, delta: float = 0.05) -> dict:
    """d(f x, f y) / d(x, y) for the torus map of the explicit product norm;
    the ratio is the spectral factor 3 exactly, pair by pair."""
    ratios = []
    for x, y in pairs:
        d0 = _torus_dist(x, y)
        if d0 == 0.0 or d0 >= delta:
            continue
        fx = np.mod(BABY_PHI @ np.asarray(x, dtype=float), 1.0)
        fy = np.mod(BABY_PHI @ np.asarray(y, dtype=float), 1.0)
        ratios.append(_torus_dist(fx, fy) / d0)
    if not ratios:
        raise ValueError("no admissible pairs below the injectivity scale")
    return {"count": len(ratios), "min": min(ratios), "max": max(ratios),
            "target": 3.0}


def _torus_dist(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    best = math.inf
    for dx in (-1.0, 0.0, 1.0):
        for dy in (-1.0, 0.0, 1.0):
            best = min(best, baby_norm(y - x + np.array([dx, dy])))
    return best
