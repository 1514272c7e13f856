"""Gaussian approximation for linear spectral statistics of the sample SSCM.

Mean and covariance kernels are evaluated on rectangular contours enclosing
the limiting spectrum, with the population side described by a ShapeContext:
aspect ratio, population spectral distribution, fourth moment of the
coordinates, the radial dispersion ratio, and the mixing matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, UnsupportedConfigError
from .mp_law import DiscreteMeasure, SpectralModel, solve_stieltjes_grid


def _alpha_moments(H, k_max=6):
    return [H.moment(k) for k in range(1, k_max + 1)]


@dataclass(frozen=True)
class ShapeContext:
    """Population-side inputs of the CLT for a given (p, n) design.

    A and sigma may be dense p x p arrays or 1-d arrays of diagonal values.
    H_p is the spectral distribution of sigma; zeta_p and trace_sigma2_over_p
    are the Hadamard-trace and squared-trace summaries appearing in the
    kernels.
    """

    c_n: float
    H_p: DiscreteMeasure
    tau: float
    r_w: float
    A: np.ndarray
    sigma: np.ndarray
    trace_sigma2_over_p: float
    zeta_p: float

    def __post_init__(self):
        if self.r_w < 1.0 - 1e-12:
            raise ValueError("r_w must be >= 1")
        if abs(self.H_p.moment(1) - 1.0) > 1e-8:
            raise ValueError("population spectrum must have mean 1 (trace normalization)")

    @property
    def diagonal(self):
        return np.ndim(self.A) == 1

    @property
    def model(self):
        return SpectralModel(self.c_n, self.H_p)

    def alpha(self, k_max=6):
        return _alpha_moments(self.H_p, k_max)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def isotropic(p, n, tau=3.0, r_w=1.0):
        """Shape matrix identity: H_p = delta_1, Hadamard terms trivial."""
        a = np.ones(p)
        return ShapeContext(
            c_n=p / n,
            H_p=DiscreteMeasure.point_mass(1.0),
            tau=tau,
            r_w=r_w,
            A=a,
            sigma=a,
            trace_sigma2_over_p=1.0,
            zeta_p=1.0,
        )

    @staticmethod
    def from_diagonal_shape(t_diag, n, tau=3.0, r_w=1.0, sign_correction=True):
        """Context for a diagonal shape matrix T = diag(t_diag), trace p.

        When sign_correction is on, the population sign covariance is the
        second-order expansion of T (diagonal specialization), whose O(1/p)
        difference from T matters at the CLT scale.
        """
        t = np.asarray(t_diag, dtype=float)
        p = t.size
        if abs(t.sum() - p) > 1e-8 * p:
            raise ValueError("diagonal shape must have trace p")
        if sign_correction:
            sig = shape_to_sigma_eigs(t, tau)
        else:
            sig = t.copy()
        a = np.sqrt(t)
        H_p = DiscreteMeasure.from_eigenvalues(sig)
        return ShapeContext(
            c_n=p / n,
            H_p=H_p,
            tau=tau,
            r_w=r_w,
            A=a,
            sigma=sig,
            trace_sigma2_over_p=float(np.mean(sig**2)),
            zeta_p=float(np.mean(t**2)),
        )

    @staticmethod
    def from_matrix(A, n, tau=3.0, r_w=1.0, sigma=None):
        """Context for a general mixing matrix A with T = A A' of trace p."""
        A = np.asarray(A, dtype=float)
        p = A.shape[0]
        T = A @ A.T
        if abs(np.trace(T) - p) > 1e-8 * p:
            raise ValueError("shape matrix A A' must have trace p")
        if sigma is None:
            At = A.T @ A
            dT = np.diag(np.diag(At))
            corr = (
                -(tau - 3.0) / p * (A @ dT @ A.T)
                - 2.0 / p * (T @ T)
                + ((tau - 3.0) / p**2 * np.sum(np.diag(At) ** 2) + 2.0 / p**2 * np.trace(T @ T)) * T
            )
            sigma = T + corr
            sigma = 0.5 * (sigma + sigma.T)
        eigs = np.linalg.eigvalsh(sigma)
        H_p = DiscreteMeasure.from_eigenvalues(eigs, merge_tol=1e-9)
        At = A.T @ A
        return ShapeContext(
            c_n=p / n,
            H_p=H_p,
            tau=tau,
            r_w=r_w,
            A=A,
            sigma=sigma,
            trace_sigma2_over_p=float(np.trace(sigma @ sigma) / p),
            zeta_p=float(np.sum(At * At) / p),
        )


def shape_to_sigma_eigs(t_eigs, tau):
    """Population sign-covariance eigenvalues from shape eigenvalues, diagonal case.

    Second-order expansion: sigma_i = t_i - (tau-1)/p (t_i^2 - alpha2 t_i)
    with alpha2 = mean(t^2); trace is preserved exactly.
    """
    t = np.asarray(t_eigs, dtype=float)
    p = t.size
    alpha2 = np.mean(t**2)
    return t - (tau - 1.0) / p * (t**2 - alpha2 * t)


@dataclass(frozen=True)
class ContourSpec:
    """Rectangle [x_left, x_right] x [-v0, v0] traversed counter-clockwise."""

    x_left: float
    x_right: float
    v0: float
    nodes_per_edge: int = 64

    def __post_init__(self):
        if not (self.x_right > self.x_left and self.v0 > 0):
            raise ValueError("degenerate contour")

    def nodes(self, nodes_per_edge=None):
        """Gauss-Legendre nodes z and complex weights (including dz direction)."""
        npe = nodes_per_edge or self.nodes_per_edge
        x, w = np.polynomial.legendre.leggauss(npe)
        zs, ws = [], []
        corners = [
            complex(self.x_right, -self.v0),
            complex(self.x_right, self.v0),
            complex(self.x_left, self.v0),
            complex(self.x_left, -self.v0),
        ]
        for a, b in zip(corners, corners[1:] + corners[:1]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            zs.append(mid + half * x)
            ws.append(np.full(npe, half) * w)
        return np.concatenate(zs), np.concatenate(ws)

    def shrink(self, v_factor=0.5, x_factor=0.5, interval=None):
        """Inner contour for the double integral; still encloses `interval`."""
        if interval is None:
            return ContourSpec(self.x_left, self.x_right, self.v0 * v_factor, self.nodes_per_edge)
        sl, sr = interval
        return ContourSpec(
            sl - (sl - self.x_left) * x_factor,
            sr + (self.x_right - sr) * x_factor,
            self.v0 * v_factor,
            self.nodes_per_edge,
        )


def spectrum_interval(ctx):
    """Interval bracketing the limiting spectrum of the sample SSCM."""
    sig = ctx.sigma
    eigs = sig if np.ndim(sig) == 1 else np.linalg.eigvalsh(sig)
    lam_min, lam_max = float(np.min(eigs)), float(np.max(eigs))
    c = ctx.c_n
    left = lam_min * (1.0 - np.sqrt(c)) ** 2 if 0 < c < 1 else 0.0
    right = lam_max * (1.0 + np.sqrt(c)) ** 2
    return left, right


def default_contour(ctx, v0=0.5, nodes_per_edge=64, margin_factor=0.25):
    sl, sr = spectrum_interval(ctx)
    margin = margin_factor * (sr - sl)
    return ContourSpec(sl - margin, sr + margin, v0, nodes_per_edge)


@dataclass(frozen=True)
class NormalApprox:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        if np.min(np.linalg.eigvalsh(cov)) < -1e-8:
            raise ValueError("covariance must be positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    def to_json(self):
        return json.dumps({"mean": self.mean.tolist(), "cov": self.covariance.tolist()})


# -- auxiliary Hadamard-trace quantities -----------------------------------


def aux_quantities(A, sigma, z, z2):
    """(zeta_p, h_p(z), g_p(z, z2)) for dense or diagonal A and sigma."""
    if np.ndim(A) == 1:
        a2 = np.asarray(A, dtype=float) ** 2
        sig = np.asarray(sigma, dtype=float)
        p = a2.size
        zeta = float(np.sum(a2**2) / p)
        h = complex(np.sum(a2**2 / (sig - z)) / p)
        g = complex(np.sum(a2**2 / ((sig - z) * (sig - z2))) / p)
        return zeta, h, g
    A = np.asarray(A, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    p = A.shape[0]
    At = A.T @ A
    R1 = A.T @ np.linalg.solve(sigma - z * np.eye(p), A)
    R2 = A.T @ np.linalg.solve(sigma - z2 * np.eye(p), A)
    zeta = float(np.sum(At * At) / p)
    h = complex(np.sum(R1 * At) / p)
    g = complex(np.sum(R1 * R2) / p)
    return zeta, h, g


class _HadamardOps:
    """Fast h_p / g_p evaluation collapsed over distinct (T, sigma) pairs."""

    def __init__(self, ctx):
        self.ctx = ctx
        if ctx.diagonal:
            a2 = np.asarray(ctx.A, dtype=float) ** 2
            sig = np.asarray(ctx.sigma, dtype=float)
            pairs = {}
            for t, s in zip(a2, sig):
                key = (round(t, 12), round(s, 12))
                pairs[key] = pairs.get(key, 0) + 1
            self.t2w = np.array([k[0] ** 2 * cnt for k, cnt in pairs.items()]) / a2.size
            self.sig = np.array([k[1] for k in pairs])
        else:
            self.eigval, Q = np.linalg.eigh(np.asarray(ctx.sigma, dtype=float))
            self.B = Q.T @ np.asarray(ctx.A, dtype=float)
            self.At = ctx.A.T @ ctx.A

    def h(self, u):
        """h_p at points u (any shape)."""
        if self.ctx.diagonal:
            u = np.asarray(u)
            return np.sum(self.t2w / (self.sig - u[..., None]), axis=-1)
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        out = np.empty(u.shape, dtype=complex)
        p = self.B.shape[1]
        for i, ui in np.ndenumerate(u):
            C = self.B.T @ (self.B / (self.eigval - ui)[:, None])
            out[i] = np.sum(C * self.At) / p
        return out

    def h_prime(self, u):
        if self.ctx.diagonal:
            u = np.asarray(u)
            return np.sum(self.t2w / (self.sig - u[..., None]) ** 2, axis=-1)
        step = 1e-6 * max(1.0, abs(u))
        return (self.h(u + step) - self.h(u - step))[0] / (2 * step)

    def g(self, u, v):
        """g_p on the outer product of point sets u and v."""
        if self.ctx.diagonal:
            u = np.asarray(u)
            v = np.asarray(v)
            phi_u = self.t2w / (self.sig - u[..., None])  # weights folded in
            phi_v = 1.0 / (self.sig - v[..., None])
            return np.tensordot(phi_u, phi_v, axes=([-1], [-1]))
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        p = self.B.shape[1]
        Cs_u = [self.B.T @ (self.B / (self.eigval - ui)[:, None]) for ui in u.ravel()]
        Cs_v = [self.B.T @ (self.B / (self.eigval - vi)[:, None]) for vi in v.ravel()]
        out = np.array([[np.sum(cu * cv) / p for cv in Cs_v] for cu in Cs_u])
        return out.reshape(u.shape + v.shape)

    def g_d1(self, u, v):
        """Partial derivative of g_p in its first argument."""
        if self.ctx.diagonal:
            u = np.asarray(u)
            v = np.asarray(v)
            phi_u = self.t2w / (self.sig - u[..., None]) ** 2
            phi_v = 1.0 / (self.sig - v[..., None])
            return np.tensordot(phi_u, phi_v, axes=([-1], [-1]))
        step = 1e-6 * max(1.0, abs(u))
        return (self.g(u + step, v) - self.g(u - step, v))[0, 0] / (2 * step)


# -- kernels ---------------------------------------------------------------


def _solve_many(ctx, zs):
    m, mu, mup = solve_stieltjes_grid(ctx.model, np.asarray(zs, dtype=complex))
    return mu, mup


def _kappa(mu, mup, z, r):
    zm = z * mu
    num = (mu + z * mup) * (1.0 + zm) * (zm * (r - 2.0) * (r - 1.0) - r)
    den = zm * (r + zm * (r - 1.0))
    return num / den


def _mu1(ctx, mu, mup, z):
    t = ctx.H_p.values
    w = ctx.H_p.weights
    c = ctx.c_n
    frac = 1.0 + t * mu[..., None]
    i1 = c * mup**2 / mu * np.sum(w * t**2 / frac**3, axis=-1)
    i2 = 2.0 * mup * (1.0 + z * mu) * np.sum(w * t**2 / frac**2, axis=-1)
    s2 = ctx.trace_sigma2_over_p
    i3a = np.sum(w * (s2 * t - t**2) / frac, axis=-1)
    i3b = 2.0 * c * mu * mup * np.sum(w * t / frac**2, axis=-1)
    return i1 - i2 + i3a * i3b


def _mu2(ctx, ops, mu, mup, z):
    t = ctx.H_p.values
    w = ctx.H_p.weights
    c = ctx.c_n
    u = -1.0 / mu
    frac = 1.0 + t * mu[..., None]
    int_t2 = np.sum(w * t / frac**2, axis=-1)
    if ctx.diagonal:
        g1 = np.diagonal(ops.g_d1(u, u)) if np.ndim(u) else ops.g_d1(np.atleast_1d(u), np.atleast_1d(u))[0, 0]
        hp = ops.h(u)
        hpp = ops.h_prime(u)
    else:
        g1 = np.array([ops.g_d1(ui, ui) for ui in np.atleast_1d(u)]).reshape(np.shape(u))
        hp = np.array([ops.h(ui)[0] for ui in np.atleast_1d(u)]).reshape(np.shape(u))
        hpp = np.array([ops.h_prime(ui) for ui in np.atleast_1d(u)]).reshape(np.shape(u))
    one_zm = 1.0 + z * mu
    term1 = c * mup / mu**2 * g1
    term2 = ctx.zeta_p * one_zm * mup * int_t2
    term3 = one_zm * mup / mu**2 * hpp
    term4 = c * mup * int_t2 * hp
    return term1 + term2 - term3 - term4


def mean_kernel(ctx, z):
    """(kappa, mu1, mu2) of the CLT mean integrand at a single point z."""
    mu, mup = _solve_many(ctx, np.atleast_1d(np.asarray(z, dtype=complex)))
    ops = _HadamardOps(ctx)
    kap = _kappa(mu, mup, np.atleast_1d(z), ctx.r_w)
    m1 = _mu1(ctx, mu, mup, np.atleast_1d(z))
    m2 = _mu2(ctx, ops, mu, mup, np.atleast_1d(z))
    return complex(kap[0]), complex(m1[0]), complex(m2[0])


def _log_term(mu1v, mu2v, z1, z2):
    arg = (mu1v - mu2v) / (mu1v * mu2v * (z1 - z2))
    on_cut = (arg.real <= 0) & (np.abs(arg.imag) <= 1e-12 * np.abs(arg.real))
    if np.any(on_cut):
        raise NumericError("log branch cut crossed; widen or shift the contours")
    return np.log(arg)


def _s1_grid(ctx, z1, mu1v, z2, mu2v):
    """Pre-derivative part of the first covariance kernel on an outer grid.

    z1, mu1v indexed by leading axes; z2, mu2v by trailing axes.
    """
    Z1 = z1[..., None]
    M1 = mu1v[..., None]
    Z2 = z2[None, :]
    M2 = mu2v[None, :]
    c = ctx.c_n
    s2 = ctx.trace_sigma2_over_p
    log_part = _log_term(M1, M2, Z1, Z2)
    pref = s2 / c + 1.0 / (c * M1) + 1.0 / (c * M2)
    prod = (1.0 + Z1 * M1) * (1.0 + Z2 * M2)
    return log_part + pref * prod - Z1 * M1 - Z2 * M2 - 2.0


def _s2_grid(ctx, ops, z1, mu1v, z2, mu2v):
    """Pre-derivative part of the Hadamard covariance kernel on an outer grid."""
    c = ctx.c_n
    u1 = -1.0 / mu1v
    u2 = -1.0 / mu2v
    g = ops.g(u1, u2)
    h2 = ops.h(u2)
    h1 = ops.h(u1)
    one1 = (1.0 + z1 * mu1v)[..., None]
    one2 = (1.0 + z2 * mu2v)[None, :]
    return (
        c * g
        + ctx.zeta_p / c * one1 * one2
        - one1 * h2[None, :]
        - one2 * h1[..., None]
    )


_FD_STEP = 1e-3


def _mixed_partial(fn, z1, z2, step=_FD_STEP):
    """Mixed second partial on an outer grid, Richardson-extrapolated once.

    fn(za, zb) must accept arrays za (offsets x n1) and zb (offsets x n2) and
    return values on the full outer grid.
    """
    h1 = step * np.maximum(1.0, np.abs(z1))
    h2 = step * np.maximum(1.0, np.abs(z2))

    def estimate(f1, f2):
        a1, b1 = z1 + f1 * h1, z1 - f1 * h1
        a2, b2 = z2 + f2 * h2, z2 - f2 * h2
        za = np.stack([a1, b1])
        zb = np.stack([a2, b2])
        S = fn(za, zb)  # (2, n1, 2, n2)
        num = S[0, :, 0, :] - S[0, :, 1, :] - S[1, :, 0, :] + S[1, :, 1, :]
        return num / (4.0 * np.outer(f1 * h1, f2 * h2))

    d_h = estimate(1.0, 1.0)
    d_h2 = estimate(0.5, 0.5)
    return (4.0 * d_h2 - d_h) / 3.0


def _cov_kernel_grid(ctx, ops, z1, z2):
    """sigma1 + (tau - 3) sigma2 on the outer product of two node sets."""
    model = ctx.model

    def solve_stack(z_stack):
        _, mu, _ = solve_stieltjes_grid(model, z_stack)
        return mu

    def s1_fn(za, zb):
        mua = solve_stack(za)
        mub = solve_stack(zb)
        out = np.empty(za.shape + zb.shape, dtype=complex)
        for i in range(za.shape[0]):
            for j in range(zb.shape[0]):
                out[i, :, j, :] = _s1_grid(ctx, za[i], mua[i], zb[j], mub[j])
        return out

    total = 2.0 * _mixed_partial(s1_fn, z1, z2)
    if ctx.tau != 3.0:
        def s2_fn(za, zb):
            mua = solve_stack(za)
            mub = solve_stack(zb)
            out = np.empty(za.shape + zb.shape, dtype=complex)
            for i in range(za.shape[0]):
                for j in range(zb.shape[0]):
                    out[i, :, j, :] = _s2_grid(ctx, ops, za[i], mua[i], zb[j], mub[j])
            return out

        total = total + (ctx.tau - 3.0) * _mixed_partial(s2_fn, z1, z2)
    return total


def cov_kernel(ctx, z, z2):
    """(sigma1, sigma2) at a single pair of points; z must differ from z2."""
    if z == z2:
        raise ValueError("covariance kernel is singular at coinciding arguments")
    ops = _HadamardOps(ctx)
    z1a = np.atleast_1d(np.asarray(z, dtype=complex))
    z2a = np.atleast_1d(np.asarray(z2, dtype=complex))
    model = ctx.model

    def solve_stack(z_stack):
        _, mu, _ = solve_stieltjes_grid(model, z_stack)
        return mu

    def make_fn(grid_fn):
        def fn(za, zb):
            mua = solve_stack(za)
            mub = solve_stack(zb)
            out = np.empty(za.shape + zb.shape, dtype=complex)
            for i in range(za.shape[0]):
                for j in range(zb.shape[0]):
                    out[i, :, j, :] = grid_fn(za[i], mua[i], zb[j], mub[j])
            return out
        return fn

    s1 = _mixed_partial(make_fn(lambda *a: _s1_grid(ctx, *a)), z1a, z2a)
    s2 = _mixed_partial(make_fn(lambda *a: _s2_grid(ctx, ops, *a)), z1a, z2a)
    return 2.0 * complex(s1[0, 0]), complex(s2[0, 0])


def _mean_integral(ctx, ops, fs, contour, npe):
    z, wq = contour.nodes(npe)
    mu, mup = _solve_many(ctx, z)
    kern = _kappa(mu, mup, z, ctx.r_w) + _mu1(ctx, mu, mup, z)
    if ctx.tau != 3.0:
        kern = kern + (ctx.tau - 3.0) * _mu2(ctx, ops, mu, mup, z)
    vals = []
    for f in fs:
        fz = np.array([f(zi) for zi in z])
        vals.append(-np.sum(fz * kern * wq) / (2.0j * np.pi))
    return np.array(vals)


def _cov_integral(ctx, ops, fs, c1, c2, npe):
    z1, w1 = c1.nodes(npe)
    z2, w2 = c2.nodes(npe)
    kern = _cov_kernel_grid(ctx, ops, z1, z2)
    out = np.empty((len(fs), len(fs)), dtype=complex)
    f1 = [np.array([f(zi) for zi in z1]) for f in fs]
    f2 = [np.array([f(zi) for zi in z2]) for f in fs]
    base = kern * np.outer(w1, w2)
    for j in range(len(fs)):
        for l in range(len(fs)):
            out[j, l] = -np.sum(np.outer(f1[j], f2[l]) * base) / (4.0 * np.pi**2)
    return out


def lss_normal_approx(ctx, fs, contour=None, tol=1e-6, max_refine=3):
    """Mean vector and covariance matrix of the Gaussian approximation.

    fs are callables, analytic on a neighborhood of the spectral interval.
    Node counts double until the results settle to `tol` relative change.
    """
    fs = list(fs)
    if contour is None:
        contour = default_contour(ctx)
    ops = _HadamardOps(ctx)
    inner = contour.shrink(interval=spectrum_interval(ctx))

    npe = contour.nodes_per_edge
    mean = _mean_integral(ctx, ops, fs, contour, npe)
    cov = _cov_integral(ctx, ops, fs, contour, inner, npe)
    for _ in range(max_refine):
        npe *= 2
        mean_new = _mean_integral(ctx, ops, fs, contour, npe)
        cov_new = _cov_integral(ctx, ops, fs, contour, inner, npe)
        dm = np.max(np.abs(mean_new - mean)) / max(1e-12, np.max(np.abs(mean_new)), 1.0)
        dc = np.max(np.abs(cov_new - cov)) / max(1e-12, np.max(np.abs(cov_new)), 1.0)
        mean, cov = mean_new, cov_new
        if dm < tol and dc < tol:
            break
    else:
        raise NumericError(
            "contour quadrature did not settle", estimates=(mean, cov)
        )
    if np.max(np.abs(mean.imag)) > 1e-6 or np.max(np.abs(cov.imag)) > 1e-6:
        raise NumericError("contour integrals have non-negligible imaginary part",
                           estimates=(mean, cov))
    cov = cov.real
    cov = 0.5 * (cov + cov.T)
    return NormalApprox(mean=mean.real, covariance=cov)


# -- closed-form normal approximation for the second and third moments -----


def beta_centering(ctx):
    """Centering terms (beta_2, beta_3) for the trace-power statistics."""
    a = ctx.alpha(3)
    c = ctx.c_n
    return a[1] + c, a[2] + 3.0 * c * a[1] + c**2


def beta_moments_normal(ctx):
    """Closed-form normal approximation for p (beta2_hat - beta2, beta3_hat - beta3).

    The (tau - 3) covariance terms are available for diagonal mixing
    matrices only.
    """
    a1, a2, a3, a4, a5, a6 = ctx.alpha(6)
    c = ctx.c_n
    r = ctx.r_w
    tau = ctx.tau
    if tau != 3.0 and not ctx.diagonal:
        raise UnsupportedConfigError(
            "fourth-moment covariance terms require a diagonal mixing matrix"
        )
    mu2 = c**2 * (r**2 - 2 * r + 2) - c * a2
    mu3 = (
        3 * c**2 * (r**2 - 2 * r + 2) * a2
        + c**3 * (r**3 - 3 * r + 4)
        - 3 * c * (a3 + c * a2)
    )
    s22 = 8 * c * (a2**3 - 2 * a2 * a3 + a4) + 4 * c**2 * a2**2
    s23 = (
        12 * c * (a2**2 * a3 - a3**2 - a2 * a4 + a5)
        + 12 * c**2 * (2 * a2**3 - 3 * a2 * a3 + 2 * a4)
        + 12 * c**3 * a2**2
    )
    s33 = (
        18 * c * (a2 * a3**2 - 2 * a3 * a4 + a6)
        + 18 * c**2 * (4 * a2**2 * a3 - 3 * a3**2 - 3 * a2 * a4 + 4 * a5)
        + 6 * c**3 * (13 * a2**3 - 12 * a2 * a3 + 12 * a4)
        + 36 * c**4 * a2**2
    )
    if tau != 3.0:
        ts22 = 4 * c * (a2**3 - 2 * a2 * a3 + a4)
        ts23 = 6 * c * (a2**2 * a3 - a3**2 - a2 * a4 + a5) + 12 * c**2 * (
            a2**3 - 2 * a2 * a3 + a4
        )
        ts33 = (
            9 * c * (a2 * a3**2 - 2 * a3 * a4 + a6)
            + 36 * c**2 * (a2**2 * a3 - a3**2 - a2 * a4 + a5)
            + 36 * c**3 * (a2**3 - 2 * a2 * a3 + a4)
        )
        s22 += (tau - 3.0) * ts22
        s23 += (tau - 3.0) * ts23
        s33 += (tau - 3.0) * ts33
    mean = np.array([mu2, mu3])
    cov = np.array([[s22, s23], [s23, s33]])
    return NormalApprox(mean=mean, covariance=cov)
