"""Matrix-free linearized operators L+ / L- around a converged profile,
their extreme spectra, the Vakhitov-Kolokolov quantity <L+^(-1) phi, phi>,
the D-matrix entries for the first-order and Klein-Gordon flows, and the
growing-mode extraction for the Hamiltonian eigenproblem.

With V2 = c(|.|^(-gamma) * phi^p) phi^(p-2) and W f = c(|.|^(-gamma) *
[phi^(p-1) f]) phi^(p-1),

    L- f = (-Lap)^beta f - omega f - V2 f
    L+ f = L- f - p W f - (p - 2) V2 f

so L+ carries the full (p - 1) coefficient on the local potential.  Both are
self-adjoint; at an exact profile L- phi = 0 and
L+ phi = -(2p - 2) c (|.|^(-gamma) * phi^p) phi^(p-1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .energy import HartreeEnergy
from .grid import Field, GridSpec
from .params import gamma_big
from .solver import GroundState

__all__ = [
    "LinearizedPair",
    "SpectralReport",
    "GrowingMode",
    "EigenSolveError",
    "IllConditionedError",
    "extreme_eigs",
    "rayleigh_lplus_phi",
    "vk_quantity",
    "vk_closed_form",
    "d11_kg",
    "growing_mode",
    "index_count",
    "essential_spectrum_edges",
    "build_spectral_report",
]

DENSE_THRESHOLD = 2048


class EigenSolveError(RuntimeError):
    pass


class IllConditionedError(RuntimeError):
    """Kernel contamination too large for a reliable resolvent solve."""


class LinearizedPair:
    """Actions of L+ and L- on flat arrays, bound to one ground state."""

    def __init__(self, gs: GroundState):
        self.gs = gs
        self.params = gs.params
        self.grid = gs.phi.grid
        ws = HartreeEnergy(gs.params, self.grid)
        self.ws = ws
        p = gs.params.p
        phi = gs.phi.values
        self.omega = gs.omega
        dens = np.abs(phi) ** p
        self.conv_dens = ws.riesz.convolve(Field(self.grid, dens)).values
        self.phi_pm1 = np.sign(phi) * np.abs(phi) ** (p - 1.0)
        # V2 = c(|.|^(-gamma)*phi^p) phi^(p-2), sign-preserving at phi = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            pm2 = np.where(phi != 0.0, np.abs(phi) ** (p - 2.0), 0.0)
        self.v2 = self.conv_dens * pm2
        self.sym = ws.frac_lap.symbol
        self.n = self.grid.size
        self._axes = tuple(range(self.grid.ndim))

    def _fraclap(self, v: np.ndarray) -> np.ndarray:
        vhat = np.fft.rfftn(v.reshape(self.grid.dims))
        return np.fft.irfftn(self.sym * vhat, s=self.grid.dims, axes=self._axes).ravel()

    def apply_lminus(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64).ravel()
        out = self._fraclap(v) - self.omega * v - (self.v2.ravel()) * v
        return out

    def apply_lplus(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64).ravel()
        p = self.params.p
        vg = v.reshape(self.grid.dims)
        nonlocal_term = self.ws.riesz.convolve(
            Field(self.grid, self.phi_pm1 * vg)
        ).values * self.phi_pm1
        out = (self._fraclap(v) - self.omega * v
               - p * nonlocal_term.ravel()
               - (p - 1.0) * self.v2.ravel() * v)
        return out

    def operator(self, which: str):
        apply = self.apply_lplus if which == "lplus" else self.apply_lminus
        return spla.LinearOperator((self.n, self.n), matvec=apply, dtype=np.float64)

    def dense(self, which: str) -> np.ndarray:
        """Dense matrix of the action; W is built by one batched convolution,
        the rest is circulant + diagonal. Intended for grids <= a few 10^3."""
        n = self.n
        apply = self.apply_lplus if which == "lplus" else self.apply_lminus
        out = np.empty((n, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            out[:, j] = apply(e)
            e[j] = 0.0
        return 0.5 * (out + out.T)  # symmetrize rounding noise


@dataclass(frozen=True)
class GrowingMode:
    rate: float
    v1: Field
    v2: Field
    residual: float


@dataclass(frozen=True)
class SpectralReport:
    n_lplus: int
    n_lminus: int
    lambda_min_lminus: float
    kernel_dim_lplus: int
    vk_quantity: float
    vk_closed_form: float | None
    d11_hartree: float
    d11_kg: float | None
    growing_mode: tuple[float, float] | None  # (rate, certification residual)
    ess_spectrum_edges: tuple[float, float]  # (edge of L+, edge of L-)

    def as_dict(self) -> dict:
        return {
            "n_lplus": self.n_lplus,
            "n_lminus": self.n_lminus,
            "lambda_min_lminus": self.lambda_min_lminus,
            "kernel_dim_lplus": self.kernel_dim_lplus,
            "vk_quantity": self.vk_quantity,
            "vk_closed_form": self.vk_closed_form,
            "d11_hartree": self.d11_hartree,
            "d11_kg": self.d11_kg,
            "growing_mode": None if self.growing_mode is None else
                {"rate": self.growing_mode[0], "residual": self.growing_mode[1]},
            "ess_spectrum_edges": {"lplus": self.ess_spectrum_edges[0],
                                   "lminus": self.ess_spectrum_edges[1]},
        }


def _eig_residual(pair: LinearizedPair, which: str, lam: float, v: np.ndarray) -> float:
    apply = pair.apply_lplus if which == "lplus" else pair.apply_lminus
    r = apply(v) - lam * v
    return float(np.linalg.norm(r) / np.linalg.norm(v))


def extreme_eigs(pair: LinearizedPair, which: str, how_many: int,
                 dense_threshold: int = DENSE_THRESHOLD,
                 tol: float = 1e-9, seed: int = 0,
                 max_lanczos: int = 400) -> list[tuple[float, Field]]:
    """Lowest eigenpairs of L+ or L-.

    Dense symmetric eigendecomposition for small grids; otherwise Lanczos with
    full reorthogonalization on the shifted inverse (A - sigma)^(-1), sigma a
    certified lower bound, inner solves by Fourier-preconditioned CG.  Each
    returned pair satisfies ||A v - lam v|| / ||v|| < 1e-7.
    """
    if which not in ("lplus", "lminus"):
        raise ValueError(f"which must be lplus or lminus, got {which!r}")
    n = pair.n
    if n <= dense_threshold:
        mat = pair.dense(which)
        vals, vecs = scipy.linalg.eigh(mat)
        out = [(float(vals[i]), Field(pair.grid, vecs[:, i].reshape(pair.grid.dims)))
               for i in range(min(how_many, n))]
    else:
        out = _lanczos_lowest(pair, which, how_many, tol=tol, seed=seed,
                              max_iter=max_lanczos)
    for lam, v in out:
        res = _eig_residual(pair, which, lam, v.values.ravel())
        if res > 1e-7 * max(1.0, abs(lam)):
            raise EigenSolveError(
                f"eigenpair residual {res:.2e} at lambda={lam:.6e} too large")
    return out


def _lower_bound(pair: LinearizedPair, which: str) -> float:
    """Certified lower bound of the spectrum from potential bounds:
    (-Lap)^beta >= 0 and the nonlocal part has a Gershgorin-type row bound."""
    base = -pair.omega - float(np.max(pair.v2)) * (
        pair.params.p - 1.0 if which == "lplus" else 1.0)
    if which == "lplus":
        row = pair.ws.riesz.convolve(
            Field(pair.grid, np.abs(pair.phi_pm1))
        ).values * np.abs(pair.phi_pm1)
        base -= pair.params.p * float(np.max(row))
    return min(base, 0.0)


def _lanczos_lowest(pair: LinearizedPair, which: str, how_many: int,
                    tol: float, seed: int, max_iter: int):
    """Shift-invert Lanczos with full reorthogonalization.

    sigma sits strictly below the spectrum, so A - sigma is SPD and the inner
    solves are plain CG preconditioned by the Fourier-diagonal part.
    """
    apply = pair.apply_lplus if which == "lplus" else pair.apply_lminus
    n = pair.n
    sigma = _lower_bound(pair, which) - 1.0

    shift_sym = pair.sym - pair.omega - sigma  # diagonal preconditioner in Fourier

    def precond(v):
        vhat = np.fft.rfftn(v.reshape(pair.grid.dims))
        return np.fft.irfftn(vhat / shift_sym, s=pair.grid.dims, axes=tuple(range(pair.grid.ndim))).ravel()

    def solve_shifted(b):
        x = np.zeros_like(b)
        r = b.copy()
        z = precond(r)
        p_dir = z.copy()
        rz = float(r @ z)
        bnorm = float(np.linalg.norm(b))
        for _ in range(2000):
            ap = apply(p_dir) - sigma * p_dir
            alpha = rz / float(p_dir @ ap)
            x += alpha * p_dir
            r -= alpha * ap
            if np.linalg.norm(r) < 1e-12 * bnorm:
                break
            z = precond(r)
            rz_new = float(r @ z)
            p_dir = z + (rz_new / rz) * p_dir
            rz = rz_new
        return x

    rng = np.random.default_rng(seed)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    Q = [q]
    alphas: list[float] = []
    betas: list[float] = []
    converged = None
    for m in range(1, max_iter + 1):
        w = solve_shifted(Q[-1])
        a = float(w @ Q[-1])
        alphas.append(a)
        w -= a * Q[-1]
        if len(Q) > 1:
            w -= betas[-1] * Q[-2]
        for qv in Q:  # full reorthogonalization
            w -= (w @ qv) * qv
        bnorm = float(np.linalg.norm(w))
        if m >= max(2 * how_many, 10) and m % 5 == 0 or bnorm < 1e-13:
            T = np.diag(alphas)
            if betas:
                T += np.diag(betas, 1) + np.diag(betas, -1)
            theta, s = scipy.linalg.eigh(T)
            # largest theta of the inverse <-> smallest of A
            idx = np.argsort(theta)[::-1][:how_many]
            resids = np.abs(bnorm * s[-1, idx])
            if np.all(resids < tol * np.abs(theta[idx])) or bnorm < 1e-13:
                converged = (theta, s, idx)
                break
        if bnorm < 1e-13:
            break
        betas.append(bnorm)
        Q.append(w / bnorm)
    # final extraction: Rayleigh-Ritz in the A-space over the Krylov basis.
    # Ritz pairs of the shifted inverse are accurate in that metric but their
    # A-residuals inherit a factor ||A - sigma||; re-projecting A onto the
    # basis removes it.
    Qm = np.array(Q).T
    W = np.column_stack([apply(Qm[:, j]) for j in range(Qm.shape[1])])
    G = Qm.T @ W
    G = 0.5 * (G + G.T)
    vals, vecs = scipy.linalg.eigh(G)
    out = []
    for i in range(min(how_many, len(vals))):
        vec = Qm @ vecs[:, i]
        vec /= np.linalg.norm(vec)
        lam = float(vec @ apply(vec))
        out.append((lam, Field(pair.grid, vec.reshape(pair.grid.dims))))
    out.sort(key=lambda t: t[0])
    return out


def rayleigh_lplus_phi(pair: LinearizedPair) -> float:
    """<L+ phi, phi> with the grid pairing; equals -(2p-2)K at a converged state."""
    phi = pair.gs.phi.values.ravel()
    return float(phi @ pair.apply_lplus(phi)) * pair.grid.cell_volume


def vk_closed_form(pair: LinearizedPair) -> float | None:
    """-Gamma/(4(p-1)) ||phi||^2, valid for the unit-frequency classical
    normalization at beta = 1; None otherwise."""
    if pair.params.beta != 1.0 or pair.gs.normalization != "unit_frequency":
        return None
    gb = gamma_big(pair.params)
    return -gb / (4.0 * (pair.params.p - 1.0)) * pair.gs.breakdown.mass


def vk_quantity(pair: LinearizedPair, kernel_tol_factor: float = 1e-5,
                solve_tol: float = 1e-10, dense_threshold: int = DENSE_THRESHOLD,
                seed: int = 0) -> float:
    """<L+^(-1) phi, phi> by a deflated minimal-residual solve.

    The single negative direction and the numerical kernel (|lam| below
    kernel_tol_factor * |omega|) are deflated: their contributions are summed
    analytically from the eigendecomposition and MINRES runs on the projected
    positive-definite complement, where it is safe despite indefiniteness of
    the full operator.
    """
    grid = pair.grid
    phi = pair.gs.phi.values.ravel()
    vol = grid.cell_volume
    kernel_tol = kernel_tol_factor * max(abs(pair.omega), 1e-8)

    eigs = extreme_eigs(pair, "lplus", how_many=max(4, pair.params.d + 3),
                        dense_threshold=dense_threshold, seed=seed)
    deflate: list[tuple[float, np.ndarray]] = []
    contaminated = 0.0
    for lam, v in eigs:
        vec = v.values.ravel()
        vec = vec / np.linalg.norm(vec)
        if lam < -kernel_tol:
            deflate.append((lam, vec))
        elif abs(lam) <= kernel_tol:
            overlap = abs(float(vec @ phi)) / np.linalg.norm(phi)
            contaminated = max(contaminated, overlap)
            deflate.append((0.0, vec))
    if contaminated > 1e-3:
        raise IllConditionedError(
            f"phi overlaps the numerical kernel of L+ by {contaminated:.2e}")

    basis = np.array([v for _, v in deflate]) if deflate else np.zeros((0, pair.n))

    def project(v):
        for row in basis:
            v = v - (row @ v) * row
        return v

    def matvec(v):
        return project(pair.apply_lplus(project(v)))

    # On the deflated complement the operator is positive definite, so a
    # projected, Fourier-preconditioned CG applies; the solution residual is
    # certified explicitly below (scipy's minres stops early on the projected
    # singular system, hence the hand-rolled loop).
    shift_sym = pair.sym + max(-pair.omega, 1e-2)

    def precond(v):
        vhat = np.fft.rfftn(v.reshape(pair.grid.dims))
        return project(np.fft.irfftn(vhat / shift_sym, s=pair.grid.dims, axes=tuple(range(pair.grid.ndim))).ravel())

    rhs = project(phi.copy())
    bnorm = np.linalg.norm(rhs)
    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = precond(r)
    p_dir = z.copy()
    rz = float(r @ z)
    for _ in range(20_000):
        ap = matvec(p_dir)
        denom = float(p_dir @ ap)
        if denom <= 0.0:
            raise EigenSolveError("deflated operator lost definiteness")
        alpha = rz / denom
        x += alpha * p_dir
        r -= alpha * ap
        if np.linalg.norm(r) < solve_tol * bnorm:
            break
        z = precond(r)
        rz_new = float(r @ z)
        p_dir = z + (rz_new / rz) * p_dir
        rz = rz_new
    resid = np.linalg.norm(matvec(x) - rhs) / bnorm
    if resid > 1e-8:
        raise EigenSolveError(f"resolvent solve residual {resid:.2e} too large")

    total = float(x @ phi) * vol
    # deflated contributions: vectors are euclidean-unit, so the L2-normalized
    # eigenvector is vec/sqrt(vol) and <phi, v>^2/lam = (phi@vec)^2 * vol / lam
    for lam, vec in deflate:
        if lam != 0.0:
            total += float(vec @ phi) ** 2 * vol / lam
    return total


def d11_kg(pair: LinearizedPair, kg_omega: float, vk: float | None = None,
           **vk_kwargs) -> float:
    """Klein-Gordon D-matrix entry 4*w^2/(1-w^2) * <L+^(-1)phi, phi> + ||phi||^2;
    negative exactly on the stable side of the frequency threshold."""
    if pair.params.beta != 1.0:
        raise ValueError("the Klein-Gordon reduction is classical: beta must be 1")
    if not -1.0 < kg_omega < 1.0:
        raise ValueError(f"kg frequency must lie in (-1, 1), got {kg_omega}")
    if vk is None:
        vk = vk_quantity(pair, **vk_kwargs)
    mass = pair.gs.breakdown.mass
    return 4.0 * kg_omega ** 2 / (1.0 - kg_omega ** 2) * vk + mass


def growing_mode(pair: LinearizedPair, dense_threshold: int = DENSE_THRESHOLD,
                 rate_tol: float | None = None, seed: int = 0) -> GrowingMode | None:
    """Most unstable mode of the Hamiltonian flow, if any.

    The composed operator L+ L- restricted off Ker L- has real spectrum; a
    negative eigenvalue nu gives the growing pair (rate sqrt(-nu)).  Small
    grids use the symmetric congruence L-^(1/2) L+ L-^(1/2) densely; large
    grids solve the generalized symmetric problem (L- L+ L-) w = nu L- w with
    LOBPCG.  A found mode is certified against the first-order flow and
    rejected if the residual exceeds 1e-6.
    """
    # spurious negatives scale with ||L+ L-|| * eps; physical rates with |omega|
    spectral_radius = (float(np.max(pair.sym)) - pair.omega
                       + float(np.max(np.abs(pair.v2))) * pair.params.p) ** 2
    noise_floor = spectral_radius * 1e-12
    if rate_tol is None:
        rate_tol = 1e-4 * max(abs(pair.omega), 1.0)
    nu_tol = max(rate_tol ** 2, noise_floor)

    if pair.n <= dense_threshold:
        lm = pair.dense("lminus")
        vals_m, vecs_m = scipy.linalg.eigh(lm)
        root = vecs_m * np.sqrt(np.clip(vals_m, 0.0, None)) @ vecs_m.T
        lp = pair.dense("lplus")
        s = root @ lp @ root
        s = 0.5 * (s + s.T)
        vals, vecs = scipy.linalg.eigh(s)
        nu = float(vals[0])
        if nu >= -nu_tol:
            return None
        w = vecs[:, 0]
        u = root @ w
        v2 = pair.apply_lplus(u)
        v2 = v2 / np.linalg.norm(v2)
        # inverse-iteration polish on the composed operator: the congruence
        # route loses ~1e-5 through the operator norms, the certification
        # gate below needs better
        comp = lp @ lm
        for _ in range(3):
            nu = float(v2 @ (comp @ v2)) / float(v2 @ v2)
            try:
                with warnings.catch_warnings():
                    # ill-conditioning at the eigenvalue is the point here
                    warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                    z = scipy.linalg.solve(comp - nu * np.eye(pair.n), v2)
            except scipy.linalg.LinAlgError:
                break
            v2 = z / np.linalg.norm(z)
        nu = float(v2 @ (comp @ v2)) / float(v2 @ v2)
        if nu >= -nu_tol:
            return None
    else:
        nu, v2 = _growing_mode_lobpcg(pair, seed=seed)
        if nu is None or nu >= -nu_tol:
            return None
        nu, v2 = _polish_composed_mode(pair, nu, v2)
        if nu >= -nu_tol:
            return None
    lam = math.sqrt(-nu)
    v2 = v2 / math.sqrt(float(v2 @ v2) * pair.grid.cell_volume)
    v1 = -pair.apply_lminus(v2) / lam
    # certification against the first-order system
    top = -pair.apply_lminus(v2) - lam * v1
    bot = pair.apply_lplus(v1) - lam * v2
    num = math.sqrt(float(top @ top + bot @ bot))
    den = math.sqrt(float(v1 @ v1 + v2 @ v2))
    resid = num / den
    if resid > 1e-6:
        raise EigenSolveError(
            f"growing-mode certification failed: residual {resid:.2e}")
    return GrowingMode(rate=lam, v1=Field(pair.grid, v1.reshape(pair.grid.dims)),
                       v2=Field(pair.grid, v2.reshape(pair.grid.dims)),
                       residual=resid)


def _polish_composed_mode(pair: LinearizedPair, nu: float, v2: np.ndarray,
                          rounds: int = 3):
    """Matrix-free inverse-iteration polish of an eigenpair of L+ L-,
    shifted GMRES solves with the Fourier-diagonal preconditioner."""
    msym = (pair.sym - pair.omega) ** 2
    axes = tuple(range(pair.grid.ndim))

    for _ in range(rounds):
        def matvec(z, _nu=nu):
            return pair.apply_lplus(pair.apply_lminus(z)) - _nu * z

        def prec(z, _nu=nu):
            zhat = np.fft.rfftn(z.reshape(pair.grid.dims))
            return np.fft.irfftn(zhat / (msym - _nu), s=pair.grid.dims,
                                 axes=axes).ravel()

        op = spla.LinearOperator((pair.n, pair.n), matvec=matvec,
                                 dtype=np.float64)
        m_op = spla.LinearOperator((pair.n, pair.n), matvec=prec,
                                   dtype=np.float64)
        z, _ = spla.gmres(op, v2, M=m_op, rtol=1e-12, restart=60, maxiter=300)
        nrm = np.linalg.norm(z)
        if nrm == 0.0 or not np.all(np.isfinite(z)):
            break
        v2 = z / nrm
        nu = float(v2 @ pair.apply_lplus(pair.apply_lminus(v2)))
    return nu, v2


def _growing_mode_lobpcg(pair: LinearizedPair, seed: int, k: int = 3):
    """Lowest generalized eigenvalue of (L- L+ L-) w = nu (L-) w on the
    complement of Ker L- = span{phi}."""
    phi = pair.gs.phi.values.ravel()
    phi_unit = phi / np.linalg.norm(phi)

    def project(v):
        return v - (phi_unit @ v) * phi_unit

    def a_mat(x):
        cols = []
        for j in range(x.shape[1]):
            v = project(x[:, j])
            cols.append(project(pair.apply_lminus(
                pair.apply_lplus(pair.apply_lminus(v)))))
        return np.column_stack(cols)

    def b_mat(x):
        cols = []
        for j in range(x.shape[1]):
            cols.append(project(pair.apply_lminus(project(x[:, j]))))
        return np.column_stack(cols)

    shift_sym = (pair.sym - pair.omega) ** 3  # diagonal part of L- L+ L-

    def m_mat(x):
        cols = []
        for j in range(x.shape[1]):
            vhat = np.fft.rfftn(x[:, j].reshape(pair.grid.dims))
            cols.append(project(np.fft.irfftn(
                vhat / shift_sym, s=pair.grid.dims,
                axes=tuple(range(pair.grid.ndim))).ravel()))
        return np.column_stack(cols)

    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal((pair.n, k))
    x0[:, 0] = project(pair.gs.phi.values.ravel() * pair.grid.radius_sq.ravel())
    a_op = spla.LinearOperator((pair.n, pair.n),
                               matvec=lambda v: a_mat(v.reshape(-1, 1)).ravel(),
                               matmat=a_mat, dtype=np.float64)
    b_op = spla.LinearOperator((pair.n, pair.n),
                               matvec=lambda v: b_mat(v.reshape(-1, 1)).ravel(),
                               matmat=b_mat, dtype=np.float64)
    m_op = spla.LinearOperator((pair.n, pair.n),
                               matvec=lambda v: m_mat(v.reshape(-1, 1)).ravel(),
                               matmat=m_mat, dtype=np.float64)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # lobpcg chatters about tolerance
            vals, vecs = spla.lobpcg(a_op, x0, B=b_op, M=m_op, largest=False,
                                     tol=1e-10, maxiter=3000)
    except Exception as exc:  # pragma: no cover - solver-internal failures
        raise EigenSolveError(f"lobpcg failed: {exc}") from exc
    order = np.argsort(vals)
    nu = float(vals[order[0]])
    w = vecs[:, order[0]]
    v2 = pair.apply_lplus(pair.apply_lminus(w))
    nrm = np.linalg.norm(v2)
    if nrm == 0.0:
        return None, None
    return nu, v2 / nrm


def index_count(report: SpectralReport) -> int:
    """Unstable-eigenvalue count n(L) - n(D); n(D) = 1 iff the distinguished
    D entry is negative (the rest of D is positive definite)."""
    d11 = report.d11_kg if report.d11_kg is not None else report.d11_hartree
    n_d = 1 if d11 < 0.0 else 0
    return report.n_lplus + report.n_lminus - n_d


def essential_spectrum_edges(pair: LinearizedPair) -> tuple[float, float]:
    """Edges of the absolutely continuous spectrum from the potential limit at
    the box edge: for p >= 2 the potential decays and both edges are -omega;
    for p < 2 the local potential tends to -omega, shifting the edges."""
    corner = (0,) * pair.grid.ndim
    v2_edge = float(pair.v2[corner])
    edge_minus = -pair.omega - v2_edge
    edge_plus = -pair.omega - (pair.params.p - 1.0) * v2_edge
    return edge_plus, edge_minus


def build_spectral_report(pair: LinearizedPair, kg_omega: float | None = None,
                          dense_threshold: int = DENSE_THRESHOLD,
                          how_many: int | None = None,
                          seed: int = 0) -> SpectralReport:
    """Assemble counts, VK quantity, D entries, growing mode, and edges."""
    d = pair.params.d
    k = how_many or max(6, d + 4)
    neg_tol = 1e-6 * max(abs(pair.omega), 1e-8)
    kernel_tol = 1e-5 * max(abs(pair.omega), 1e-8)

    plus = extreme_eigs(pair, "lplus", k, dense_threshold=dense_threshold, seed=seed)
    minus = extreme_eigs(pair, "lminus", k, dense_threshold=dense_threshold, seed=seed)
    n_plus = sum(1 for lam, _ in plus if lam < -neg_tol)
    n_minus = sum(1 for lam, _ in minus if lam < -neg_tol)
    kdim = sum(1 for lam, _ in plus if abs(lam) <= kernel_tol)
    vk = vk_quantity(pair, dense_threshold=dense_threshold, seed=seed)
    closed = vk_closed_form(pair)
    dkg = None
    if kg_omega is not None:
        dkg = d11_kg(pair, kg_omega, vk=vk)
    gm = growing_mode(pair, dense_threshold=dense_threshold, seed=seed)
    return SpectralReport(
        n_lplus=n_plus,
        n_lminus=n_minus,
        lambda_min_lminus=minus[0][0],
        kernel_dim_lplus=kdim,
        vk_quantity=vk,
        vk_closed_form=closed,
        d11_hartree=vk,
        d11_kg=dkg,
        growing_mode=None if gm is None else (gm.rate, gm.residual),
        ess_spectrum_edges=essential_spectrum_edges(pair),
    )
