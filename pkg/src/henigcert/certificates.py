"""Sequential optimality certificates for the parametric reformulation.

Three interchangeable certificate forms attest that a candidate point of
the ratio problem is properly efficient, each as a finite table of N
entries approximating the asymptotic conditions:

* conjugate-epigraph form: pairs (functional, height) in the epigraphs of
  the conjugates, with three residual traces driven to zero;
* eps-subdifferential form: the same functionals as gamma_n-approximate
  subgradients and normals at the candidate itself;
* exact form: exact subgradients at nearby points that converge to the
  candidate.

Verifiers check every membership by LP and apply an explicit finite-
horizon convergence rule to the residual traces.  The generator solves
one small LP per entry, minimizing the dual residual over the membership
encodings.  Transfers map an eps certificate up to the epigraph form
(pure arithmetic) and down to the exact form (one nearby-pair search per
block).  A multiplier check covers the classical single-LP condition
that applies when a strict-interior constraint point exists.

The Accept verdict at finite horizon is a documented heuristic: a trace
counts as convergent when its last value clears tol_conv and its tail is
non-increasing up to jitter.  Every report carries this caveat.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cones import PolyhedralCone
from .convex import (
    Polyhedron,
    PolyhedralFn,
    ScaledFn,
    as_polyhedral,
    br_regularize,
    conjugate,
    is_zero_fn,
    support_function,
    weighted_sum_polyhedral,
)
from .encodings import (
    BlockLP,
    LinExpr,
    add_composite_subdiff_block,
    add_eps_normal_block,
    add_eps_subdiff_block,
    add_inner_product_eq,
    add_inner_product_ub,
    add_l1_elastic,
    add_linf_elastic,
    add_polar_member,
    expr_sum,
    require_optimal,
)
from .errors import (
    BRSearchFailed,
    ConjugateUnsupported,
    DimensionMismatch,
    GeneratorFormRequired,
    HorizonTooShort,
    PointOutsideDomain,
    UnsupportedData,
    UnsupportedDomain,
)
from .fractional import FractionalProblem, feasible, nu_values

TOL_MEMBERSHIP = 1e-7
DEFAULT_TOL_CONV = 1e-3
JITTER = 1e-9
VSTAR_ZERO_TOL = 1e-12

HEURISTIC_NOTE = (
    "finite-horizon verdict: the limit conditions are checked by the "
    "documented convergence rule (last value within tol_conv, tail "
    "non-increasing up to jitter), which is a heuristic, not a proof"
)


def _check_lambda(lam, m: int) -> np.ndarray:
    lam = np.asarray(lam, float).reshape(-1)
    if lam.shape[0] != m:
        raise DimensionMismatch("lambda length does not match objective count")
    if (lam <= 0).any():
        raise ValueError("lambda weights must be strictly positive")
    return lam


def converged(trace, tol_conv: float, jitter: float = JITTER) -> bool:
    """Finite-horizon convergence rule: trace[-1] <= tol_conv and the last
    ceil(N/2) values are non-increasing up to jitter."""
    trace = np.asarray(trace, float).reshape(-1)
    N = trace.shape[0]
    if N < 4:
        raise HorizonTooShort(f"need a horizon of at least 4 entries, got {N}")
    tail = trace[-int(np.ceil(N / 2)):]
    if (np.diff(tail) > jitter).any():
        return False
    return bool(trace[-1] <= tol_conv)


# ---------------------------------------------------------------------------
# certificate tables


@dataclass(frozen=True)
class EpsCertificate:
    """Per-n approximate subgradients and normals at the candidate itself."""

    lam: np.ndarray
    gamma: np.ndarray        # (N,)
    xstar: np.ndarray        # (m, N, n)
    wstar: np.ndarray        # (m, N, n)
    cstar: np.ndarray        # (N, n)
    ystar: np.ndarray        # (N, p)
    vstar: np.ndarray        # (N, p)
    ustar: np.ndarray        # (N, n)

    def __post_init__(self):
        lam = _check_lambda(self.lam, self.xstar.shape[0])
        object.__setattr__(self, "lam", lam)
        if (np.asarray(self.gamma) < 0).any():
            raise ValueError("gamma values must be nonnegative")
        N = self.N
        m, n, p = self.xstar.shape[0], self.xstar.shape[2], self.ystar.shape[1]
        shapes = {
            "xstar": (m, N, n), "wstar": (m, N, n), "cstar": (N, n),
            "ystar": (N, p), "vstar": (N, p), "ustar": (N, n),
        }
        for name, want in shapes.items():
            got = getattr(self, name).shape
            if got != want:
                raise DimensionMismatch(f"{name} has shape {got}, want {want}")

    @property
    def N(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class EpiCertificate:
    """Per-n pairs in the conjugate epigraphs, with scalar heights."""

    lam: np.ndarray
    xstar: np.ndarray        # (m, N, n)
    a: np.ndarray            # (m, N)
    wstar: np.ndarray        # (m, N, n)
    b: np.ndarray            # (m, N)
    cstar: np.ndarray        # (N, n)
    d: np.ndarray            # (N,)
    ystar: np.ndarray        # (N, p)
    s: np.ndarray            # (N,)
    vstar: np.ndarray        # (N, p)
    ustar: np.ndarray        # (N, n)
    t: np.ndarray            # (N,)

    def __post_init__(self):
        lam = _check_lambda(self.lam, self.xstar.shape[0])
        object.__setattr__(self, "lam", lam)
        m, N, n = self.xstar.shape
        p = self.ystar.shape[1]
        shapes = {
            "a": (m, N), "wstar": (m, N, n), "b": (m, N), "cstar": (N, n),
            "d": (N,), "ystar": (N, p), "s": (N,), "vstar": (N, p),
            "ustar": (N, n), "t": (N,),
        }
        for name, want in shapes.items():
            got = getattr(self, name).shape
            if got != want:
                raise DimensionMismatch(f"{name} has shape {got}, want {want}")

    @property
    def N(self) -> int:
        return self.xstar.shape[1]


@dataclass(frozen=True)
class ExactCertificate:
    """Per-n exact subgradients and normals at nearby points."""

    lam: np.ndarray
    x: np.ndarray            # (m, N, n)
    xstar: np.ndarray        # (m, N, n)
    w: np.ndarray            # (m, N, n)
    wstar: np.ndarray        # (m, N, n)
    c: np.ndarray            # (N, n)
    cstar: np.ndarray        # (N, n)
    u: np.ndarray            # (N, n)
    ustar: np.ndarray        # (N, n)
    y: np.ndarray            # (N, p)
    ystar: np.ndarray        # (N, p)
    vstar: np.ndarray        # (N, p)
    br_bounds: Optional[dict] = None   # block name -> (N, 3) bound values

    def __post_init__(self):
        lam = _check_lambda(self.lam, self.x.shape[0])
        object.__setattr__(self, "lam", lam)
        m, N, n = self.x.shape
        p = self.y.shape[1]
        shapes = {
            "xstar": (m, N, n), "w": (m, N, n), "wstar": (m, N, n),
            "c": (N, n), "cstar": (N, n), "u": (N, n), "ustar": (N, n),
            "y": (N, p), "ystar": (N, p), "vstar": (N, p),
        }
        for name, want in shapes.items():
            got = getattr(self, name).shape
            if got != want:
                raise DimensionMismatch(f"{name} has shape {got}, want {want}")

    @property
    def N(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class VerificationReport:
    theorem: str
    verdict: str                      # "Accept" | "Reject"
    reasons: tuple
    memberships: dict                 # name -> (N,) bool array
    slacks: dict                      # name -> (N,) float array
    residuals: dict                   # name -> (N,) float array
    tolerances: dict
    note: str = HEURISTIC_NOTE

    @property
    def ok(self) -> bool:
        return self.verdict == "Accept"


# ---------------------------------------------------------------------------
# shared verification plumbing


class _Memo:
    """Memoized conjugate and support values keyed by functional bytes."""

    def __init__(self):
        self._c = {}

    def conj(self, key, fn, xs):
        k = (key, xs.tobytes())
        if k not in self._c:
            self._c[k] = conjugate(fn, xs)
        return self._c[k]

    def supp(self, key, C, xs):
        k = (key, xs.tobytes())
        if k not in self._c:
            self._c[k] = support_function(C, xs)
        return self._c[k]


def _objective_fns(prob: FractionalProblem, xbar, lam):
    """The scaled summand pairs (lam_i f_i, lam_i nu_i (-g_i)) at xbar."""
    nu = nu_values(prob, xbar)
    f_fns, w_fns = [], []
    for i, (f, ng) in enumerate(prob.objectives):
        f_fns.append(ScaledFn(lam[i], f))
        coef = lam[i] * nu[i]
        if coef < 0:
            raise UnsupportedData(
                f"objective {i}: negative ratio nu = {nu[i]:g} leaves the "
                "scaled denominator term nonconvex"
            )
        w_fns.append(ScaledFn(coef, ng))
    return nu, f_fns, w_fns


def _generators(cone: PolyhedralCone) -> np.ndarray:
    if cone.G is None:
        raise GeneratorFormRequired(
            "certificate checks need the generator form of the ordering cone"
        )
    return cone.G


def _composite_fn(prob, vstar, cache: dict):
    """(-vstar) o h as a ConvexFn; zero-scaled when vstar vanishes."""
    key = vstar.tobytes()
    if key not in cache:
        if np.abs(vstar).max(initial=0.0) <= VSTAR_ZERO_TOL:
            cache[key] = ScaledFn(0.0, prob.hmap[0])
        else:
            weights = np.maximum(-vstar, 0.0)
            if (-vstar < -1e-9).any():
                raise UnsupportedData(
                    "composite term needs componentwise nonnegative -vstar"
                )
            cache[key] = weighted_sum_polyhedral(weights, prob.hmap)
    return cache[key]


def _polar_slacks(G, V):
    """Per-row smallest generator inner product for a stack of vectors."""
    return (V @ G.T).min(axis=1)


def _verdict(memberships, residual_checks, tol_membership):
    reasons = []
    for name, ok in memberships.items():
        if not ok.all():
            bad = int(np.argmin(ok))
            reasons.append(f"{name} fails at n={bad + 1}")
    for name, is_conv in residual_checks.items():
        if not is_conv:
            reasons.append(f"residual trace '{name}' does not converge")
    verdict = "Accept" if not reasons else "Reject"
    return verdict, tuple(reasons)


# ---------------------------------------------------------------------------
# verifiers


def verify_epi_certificate(
    prob: FractionalProblem,
    xbar,
    cert: EpiCertificate,
    tol_membership: float = TOL_MEMBERSHIP,
    tol_conv: float = DEFAULT_TOL_CONV,
) -> VerificationReport:
    """Check every conjugate-epigraph membership and the three residual
    traces of the epigraph-form certificate."""
    xbar = np.asarray(xbar, float).reshape(-1)
    m, N, n = cert.xstar.shape
    if N < 4:
        raise HorizonTooShort(f"need a horizon of at least 4 entries, got {N}")
    if m != prob.m or n != prob.n or cert.ystar.shape[1] != prob.p:
        raise DimensionMismatch("certificate shapes do not match the problem")
    nu, f_fns, w_fns = _objective_fns(prob, xbar, cert.lam)
    G = _generators(prob.cone)
    memo = _Memo()
    comp_cache: dict = {}

    memberships, slacks = {}, {}
    for i in range(m):
        sl = np.array(
            [cert.a[i, k] - memo.conj(("f", i), f_fns[i], cert.xstar[i, k]) for k in range(N)]
        )
        memberships[f"epi_f[{i}]"] = sl >= -tol_membership
        slacks[f"epi_f[{i}]"] = sl
        sl = np.array(
            [cert.b[i, k] - memo.conj(("w", i), w_fns[i], cert.wstar[i, k]) for k in range(N)]
        )
        memberships[f"epi_w[{i}]"] = sl >= -tol_membership
        slacks[f"epi_w[{i}]"] = sl
    sl = np.array(
        [cert.d[k] - memo.supp("C", prob.C, cert.cstar[k]) for k in range(N)]
    )
    memberships["epi_C"] = sl >= -tol_membership
    slacks["epi_C"] = sl

    sl = _polar_slacks(G, cert.ystar)
    memberships["ystar_polar"] = sl >= -tol_membership
    slacks["ystar_polar"] = sl
    memberships["s_nonneg"] = cert.s >= -tol_membership
    slacks["s_nonneg"] = cert.s.copy()
    sl = _polar_slacks(G, -cert.vstar)
    memberships["vstar_polar"] = sl >= -tol_membership
    slacks["vstar_polar"] = sl

    sl = np.empty(N)
    for k in range(N):
        fn = _composite_fn(prob, cert.vstar[k], comp_cache)
        sl[k] = cert.t[k] - memo.conj(("comp", cert.vstar[k].tobytes()), fn, cert.ustar[k])
    memberships["epi_comp"] = sl >= -tol_membership
    slacks["epi_comp"] = sl

    dual = np.abs(
        cert.xstar.sum(axis=0) + cert.wstar.sum(axis=0) + cert.cstar + cert.ustar
    ).max(axis=1)
    yres = np.abs(cert.ystar + cert.vstar).max(axis=1)
    scalar = np.abs(cert.a.sum(axis=0) + cert.b.sum(axis=0) + cert.d + cert.s + cert.t)
    residuals = {"dual": dual, "y": yres, "scalar": scalar}
    checks = {name: converged(tr, tol_conv) for name, tr in residuals.items()}
    verdict, reasons = _verdict(memberships, checks, tol_membership)
    return VerificationReport(
        theorem="4.2", verdict=verdict, reasons=reasons,
        memberships=memberships, slacks=slacks, residuals=residuals,
        tolerances={"tol_membership": tol_membership, "tol_conv": tol_conv},
    )


def verify_eps_certificate(
    prob: FractionalProblem,
    xbar,
    cert: EpsCertificate,
    tol_membership: float = TOL_MEMBERSHIP,
    tol_conv: float = DEFAULT_TOL_CONV,
) -> VerificationReport:
    """Check the gamma_n-approximate memberships at the candidate point."""
    xbar = np.asarray(xbar, float).reshape(-1)
    m, N, n = cert.xstar.shape
    if N < 4:
        raise HorizonTooShort(f"need a horizon of at least 4 entries, got {N}")
    if m != prob.m or n != prob.n or cert.ystar.shape[1] != prob.p:
        raise DimensionMismatch("certificate shapes do not match the problem")
    nu, f_fns, w_fns = _objective_fns(prob, xbar, cert.lam)
    G = _generators(prob.cone)
    memo = _Memo()
    comp_cache: dict = {}
    hbar = prob.h_values(xbar)
    gam = cert.gamma

    def subdiff_slacks(key, fn, stars):
        fval = fn.eval(xbar)
        if not np.isfinite(fval):
            raise PointOutsideDomain("candidate lies outside an objective domain")
        out = np.empty(N)
        for k in range(N):
            cval = memo.conj(key, fn, stars[k])
            gap = cval + fval - stars[k] @ xbar if np.isfinite(cval) else np.inf
            out[k] = gam[k] - gap
        return out

    memberships, slacks = {}, {}
    for i in range(m):
        sl = subdiff_slacks(("f", i), f_fns[i], cert.xstar[i])
        memberships[f"subdiff_f[{i}]"] = sl >= -tol_membership
        slacks[f"subdiff_f[{i}]"] = sl
        sl = subdiff_slacks(("w", i), w_fns[i], cert.wstar[i])
        memberships[f"subdiff_w[{i}]"] = sl >= -tol_membership
        slacks[f"subdiff_w[{i}]"] = sl

    sl = np.array(
        [
            gam[k] - (memo.supp("C", prob.C, cert.cstar[k]) - cert.cstar[k] @ xbar)
            for k in range(N)
        ]
    )
    memberships["normal_C"] = sl >= -tol_membership
    slacks["normal_C"] = sl

    # ystar in Y* and in the gamma_n-normal set of -Y+ at h(xbar): the
    # support of -Y+ is 0 on Y* and infinite elsewhere
    polar = _polar_slacks(G, cert.ystar)
    gap = gam + cert.ystar @ hbar
    sl = np.minimum(polar, gap)
    memberships["normal_Y"] = sl >= -tol_membership
    slacks["normal_Y"] = sl

    sl = _polar_slacks(G, -cert.vstar)
    memberships["vstar_polar"] = sl >= -tol_membership
    slacks["vstar_polar"] = sl

    sl = np.empty(N)
    for k in range(N):
        fn = _composite_fn(prob, cert.vstar[k], comp_cache)
        cval = memo.conj(("comp", cert.vstar[k].tobytes()), fn, cert.ustar[k])
        fval = fn.eval(xbar)
        gap = cval + fval - cert.ustar[k] @ xbar if np.isfinite(cval) else np.inf
        sl[k] = gam[k] - gap
    memberships["subdiff_comp"] = sl >= -tol_membership
    slacks["subdiff_comp"] = sl

    dual = np.abs(
        cert.xstar.sum(axis=0) + cert.wstar.sum(axis=0) + cert.cstar + cert.ustar
    ).max(axis=1)
    yres = np.abs(cert.ystar + cert.vstar).max(axis=1)
    residuals = {"dual": dual, "y": yres, "scalar": gam.astype(float)}
    checks = {name: converged(tr, tol_conv) for name, tr in residuals.items()}
    verdict, reasons = _verdict(memberships, checks, tol_membership)
    return VerificationReport(
        theorem="4.3", verdict=verdict, reasons=reasons,
        memberships=memberships, slacks=slacks, residuals=residuals,
        tolerances={"tol_membership": tol_membership, "tol_conv": tol_conv},
    )


def verify_exact_certificate(
    prob: FractionalProblem,
    xbar,
    cert: ExactCertificate,
    tol_membership: float = TOL_MEMBERSHIP,
    tol_conv: float = DEFAULT_TOL_CONV,
    tol_points: Optional[float] = None,
) -> VerificationReport:
    """Check the exact memberships at the nearby points, their convergence
    to the candidate, and the value-gap traces.

    Point traces are held to tol_points (default sqrt(tol_conv)): a value
    tolerance eps pairs with a point tolerance sqrt(eps) in the nearby-
    pair bounds, so the two rules are kept on matching scales.
    """
    xbar = np.asarray(xbar, float).reshape(-1)
    if tol_points is None:
        tol_points = float(np.sqrt(tol_conv))
    m, N, n = cert.x.shape
    if N < 4:
        raise HorizonTooShort(f"need a horizon of at least 4 entries, got {N}")
    if m != prob.m or n != prob.n or cert.y.shape[1] != prob.p:
        raise DimensionMismatch("certificate shapes do not match the problem")
    nu, f_fns, w_fns = _objective_fns(prob, xbar, cert.lam)
    G = _generators(prob.cone)
    memo = _Memo()
    comp_cache: dict = {}
    hbar = prob.h_values(xbar)

    def exact_slacks(key, fn, points, stars):
        out = np.empty(N)
        for k in range(N):
            fval = fn.eval(points[k])
            if not np.isfinite(fval):
                out[k] = -np.inf
                continue
            cval = memo.conj(key, fn, stars[k])
            out[k] = -(cval + fval - stars[k] @ points[k]) if np.isfinite(cval) else -np.inf
        return out

    memberships, slacks = {}, {}
    value_gaps = {}
    for i in range(m):
        sl = exact_slacks(("f", i), f_fns[i], cert.x[i], cert.xstar[i])
        memberships[f"subdiff_f[{i}]"] = sl >= -tol_membership
        slacks[f"subdiff_f[{i}]"] = sl
        sl = exact_slacks(("w", i), w_fns[i], cert.w[i], cert.wstar[i])
        memberships[f"subdiff_w[{i}]"] = sl >= -tol_membership
        slacks[f"subdiff_w[{i}]"] = sl
        fb = f_fns[i].eval(xbar)
        value_gaps[f"gap_f[{i}]"] = np.array(
            [
                abs(f_fns[i].eval(cert.x[i, k]) - cert.xstar[i, k] @ (cert.x[i, k] - xbar) - fb)
                for k in range(N)
            ]
        )
        wb = w_fns[i].eval(xbar)
        value_gaps[f"gap_w[{i}]"] = np.array(
            [
                abs(w_fns[i].eval(cert.w[i, k]) - cert.wstar[i, k] @ (cert.w[i, k] - xbar) - wb)
                for k in range(N)
            ]
        )

    in_C = prob.C.contains_batch(cert.c, tol=tol_membership)
    supp = np.array([memo.supp("C", prob.C, cert.cstar[k]) for k in range(N)])
    sl = np.where(in_C, -(supp - np.einsum("ij,ij->i", cert.cstar, cert.c)), -np.inf)
    memberships["normal_C"] = sl >= -tol_membership
    slacks["normal_C"] = sl
    value_gaps["gap_C"] = np.abs(np.einsum("ij,ij->i", cert.cstar, cert.c - xbar))

    from .cones import in_minus_cone_batch

    in_mY = in_minus_cone_batch(prob.cone, cert.y, tol=tol_membership)
    polar = _polar_slacks(G, cert.ystar)
    comp_slack = np.einsum("ij,ij->i", cert.ystar, cert.y)
    sl = np.where(in_mY, np.minimum(polar, comp_slack), -np.inf)
    memberships["normal_Y"] = sl >= -tol_membership
    slacks["normal_Y"] = sl
    value_gaps["gap_Y"] = np.abs(np.einsum("ij,ij->i", cert.ystar, cert.y - hbar))

    sl = _polar_slacks(G, -cert.vstar)
    memberships["vstar_polar"] = sl >= -tol_membership
    slacks["vstar_polar"] = sl

    sl = np.empty(N)
    comp_gap = np.empty(N)
    for k in range(N):
        fn = _composite_fn(prob, cert.vstar[k], comp_cache)
        fval = fn.eval(cert.u[k])
        if not np.isfinite(fval):
            sl[k] = -np.inf
            comp_gap[k] = np.inf
            continue
        cval = memo.conj(("comp", cert.vstar[k].tobytes()), fn, cert.ustar[k])
        sl[k] = -(cval + fval - cert.ustar[k] @ cert.u[k]) if np.isfinite(cval) else -np.inf
        hu = prob.h_values(cert.u[k])
        comp_gap[k] = abs(cert.ustar[k] @ (cert.u[k] - xbar) + cert.vstar[k] @ (hu - hbar))
    memberships["subdiff_comp"] = sl >= -tol_membership
    slacks["subdiff_comp"] = sl
    value_gaps["gap_comp"] = comp_gap

    dual = np.abs(
        cert.xstar.sum(axis=0) + cert.wstar.sum(axis=0) + cert.cstar + cert.ustar
    ).max(axis=1)
    yres = np.abs(cert.ystar + cert.vstar).max(axis=1)
    scalar = np.max(np.column_stack(list(value_gaps.values())), axis=1)
    residuals = {"dual": dual, "y": yres, "scalar": scalar}
    residuals.update(value_gaps)
    point_traces = {}
    for i in range(m):
        point_traces[f"point_x[{i}]"] = np.linalg.norm(cert.x[i] - xbar, axis=1)
        point_traces[f"point_w[{i}]"] = np.linalg.norm(cert.w[i] - xbar, axis=1)
    point_traces["point_c"] = np.linalg.norm(cert.c - xbar, axis=1)
    point_traces["point_u"] = np.linalg.norm(cert.u - xbar, axis=1)
    point_traces["point_y"] = np.linalg.norm(cert.y - hbar, axis=1)
    residuals.update(point_traces)

    checks = {name: converged(residuals[name], tol_conv) for name in ("dual", "y", "scalar")}
    for name, tr in point_traces.items():
        checks[name] = converged(tr, tol_points)
    verdict, reasons = _verdict(memberships, checks, tol_membership)
    return VerificationReport(
        theorem="4.4", verdict=verdict, reasons=reasons,
        memberships=memberships, slacks=slacks, residuals=residuals,
        tolerances={
            "tol_membership": tol_membership,
            "tol_conv": tol_conv,
            "tol_points": tol_points,
        },
    )


# ---------------------------------------------------------------------------
# generation


def _poly_or_none(fn):
    p = as_polyhedral(fn)
    if p is not None and not p.domain.is_full_space():
        raise UnsupportedDomain("certificate generation needs full-space objective domains")
    return p


def generate_eps_certificate(
    prob: FractionalProblem,
    xbar,
    lam=None,
    gamma=None,
    N: Optional[int] = None,
    pin_vstar: bool = False,
):
    """Solve one residual-minimizing LP per entry.

    Per n the memberships are encoded as LP blocks: gamma_n-subdifferential
    polytopes for the objective summands and the composite term, EXACT
    (eps = 0) normal-cone encodings for the set blocks, generator rows for
    the polar memberships.  The objective is the dual residual's sup-norm
    plus the l1 norm of ystar + vstar.  Returns the certificate and the
    per-n LP optima; a residual trace that tends to zero is the existence
    side of the subdifferential form, a floor bounded away from zero is
    its converse.

    ``pin_vstar`` fixes vstar = 0 and drops the composite block (the only
    route when h has non-polyhedral components).
    """
    xbar = np.asarray(xbar, float).reshape(-1)
    if not feasible(prob, xbar):
        raise PointOutsideDomain("candidate point is not feasible")
    if gamma is None:
        if N is None:
            raise ValueError("need gamma or N")
        gamma = 1.0 / np.arange(1, N + 1)
    gamma = np.asarray(gamma, float).reshape(-1)
    if (gamma < 0).any():
        raise ValueError("gamma values must be nonnegative")
    N = gamma.shape[0]
    lam = np.ones(prob.m) if lam is None else np.asarray(lam, float).reshape(-1)
    lam = _check_lambda(lam, prob.m)
    nu, f_fns, w_fns = _objective_fns(prob, xbar, lam)
    G = _generators(prob.cone)

    f_polys = []
    for i, fn in enumerate(f_fns):
        p = _poly_or_none(fn)
        if p is None:
            raise ConjugateUnsupported(f"objective {i}: numerator is not polyhedral")
        f_polys.append(p)
    w_polys = []
    for i, fn in enumerate(w_fns):
        if is_zero_fn(fn):
            w_polys.append(None)  # wstar stays identically zero
            continue
        wp = _poly_or_none(fn)
        if wp is None:
            raise ConjugateUnsupported(f"objective {i}: denominator term is not polyhedral")
        w_polys.append(wp)
    if not pin_vstar:
        h_polys = [as_polyhedral(h) for h in prob.hmap]
        if any(p is None for p in h_polys):
            raise ConjugateUnsupported(
                "constraint components are not polyhedral; rerun with vstar pinned to 0"
            )
        for p in h_polys:
            if not p.domain.is_full_space():
                raise UnsupportedDomain("composite encoding needs full-space h components")
    hbar = prob.h_values(xbar)

    m, n, p = prob.m, prob.n, prob.p
    xstar = np.zeros((m, N, n))
    wstar = np.zeros((m, N, n))
    cstar = np.zeros((N, n))
    ystar = np.zeros((N, p))
    vstar = np.zeros((N, p))
    ustar = np.zeros((N, n))
    trace = np.zeros(N)

    for k in range(N):
        g = float(gamma[k])
        lp = BlockLP()
        dual_parts = []
        f_exprs = [add_eps_subdiff_block(lp, fp, xbar, g) for fp in f_polys]
        dual_parts.extend(f_exprs)
        w_exprs = []
        for wp in w_polys:
            if wp is None:
                w_exprs.append(None)
            else:
                e = add_eps_subdiff_block(lp, wp, xbar, g)
                w_exprs.append(e)
                dual_parts.append(e)
        c_expr = add_eps_normal_block(lp, prob.C, xbar, 0.0)
        if c_expr.idx.size:
            dual_parts.append(c_expr)
        y_expr = add_polar_member(lp, G, sign=1.0)
        add_inner_product_ub(lp, y_expr, hbar, 0.0, sign=-1.0)  # <ystar, hbar> >= 0
        y_parts = [y_expr]
        v_expr = None
        u_expr = None
        if not pin_vstar:
            v_expr = add_polar_member(lp, G, sign=-1.0)
            y_parts.append(v_expr)
            weights = LinExpr(idx=v_expr.idx, M=-v_expr.M)
            u_expr = add_composite_subdiff_block(lp, h_polys, xbar, g, weights)
            dual_parts.append(u_expr)
        t_idx = add_linf_elastic(lp, dual_parts)
        q_idx = add_l1_elastic(lp, y_parts)
        obj_idx = np.concatenate([t_idx, q_idx])
        out = require_optimal(
            lp.solve(obj_idx, -np.ones(obj_idx.shape[0])),
            "certificate generation",
        )
        trace[k] = -out.value
        sol = out.x
        for i in range(m):
            xstar[i, k] = f_exprs[i].value(sol)
            if w_exprs[i] is not None:
                wstar[i, k] = w_exprs[i].value(sol)
        cstar[k] = c_expr.value(sol)
        ystar[k] = y_expr.value(sol)
        if v_expr is not None:
            vstar[k] = v_expr.value(sol)
            ustar[k] = u_expr.value(sol)
    cert = EpsCertificate(
        lam=lam, gamma=gamma, xstar=xstar, wstar=wstar,
        cstar=cstar, ystar=ystar, vstar=vstar, ustar=ustar,
    )
    return cert, trace


# ---------------------------------------------------------------------------
# transfers


def minus_cone_polyhedron(cone: PolyhedralCone) -> Polyhedron:
    """-Y+ as a polyhedron; needs the inequality form H y >= 0."""
    if cone.H is None:
        raise GeneratorFormRequired(
            "transfers need the inequality form of the ordering cone"
        )
    return Polyhedron(A=cone.H, b=np.zeros(cone.H.shape[0]))


def eps_to_exact(prob: FractionalProblem, xbar, cert: EpsCertificate) -> ExactCertificate:
    """Regularize each block of the subdifferential-form certificate into an
    exact pair at a nearby point, with eps = gamma_n per entry.

    The nearby-pair bounds (point distance and functional distance at most
    sqrt(gamma_n), value gap at most 2*gamma_n) are recorded per block in
    ``br_bounds``.
    """
    xbar = np.asarray(xbar, float).reshape(-1)
    m, N, n = cert.xstar.shape
    nu, f_fns, w_fns = _objective_fns(prob, xbar, cert.lam)
    hbar = prob.h_values(xbar)
    delta_C = PolyhedralFn.indicator(prob.C)
    delta_mY = PolyhedralFn.indicator(minus_cone_polyhedron(prob.cone))
    comp_cache: dict = {}

    x = np.tile(xbar, (m, N, 1))
    w = np.tile(xbar, (m, N, 1))
    c = np.tile(xbar, (N, 1))
    u = np.tile(xbar, (N, 1))
    y = np.tile(hbar, (N, 1))
    xstar = np.zeros_like(cert.xstar)
    wstar = np.zeros_like(cert.wstar)
    cstar = np.zeros_like(cert.cstar)
    ustar = np.zeros_like(cert.ustar)
    ystar = np.zeros_like(cert.ystar)
    bounds = {}

    def run(name, fn, base, star, k):
        try:
            res = br_regularize(fn, base, float(cert.gamma[k]), star)
        except BRSearchFailed as exc:
            raise BRSearchFailed(f"block {name}, entry n={k + 1}: {exc}") from exc
        rec = bounds.setdefault(name, np.zeros((N, 3)))
        rec[k] = (res.dist_x, res.dist_xstar, res.value_gap)
        return res

    for k in range(N):
        for i in range(m):
            res = run(f"objective[{i}]", f_fns[i], xbar, cert.xstar[i, k], k)
            x[i, k], xstar[i, k] = res.x, res.xstar
            res = run(f"denominator[{i}]", w_fns[i], xbar, cert.wstar[i, k], k)
            w[i, k], wstar[i, k] = res.x, res.xstar
        res = run("set_C", delta_C, xbar, cert.cstar[k], k)
        c[k], cstar[k] = res.x, res.xstar
        res = run("set_Y", delta_mY, hbar, cert.ystar[k], k)
        y[k], ystar[k] = res.x, res.xstar
        fn = _composite_fn(prob, cert.vstar[k], comp_cache)
        res = run("composite", fn, xbar, cert.ustar[k], k)
        u[k], ustar[k] = res.x, res.xstar
    return ExactCertificate(
        lam=cert.lam, x=x, xstar=xstar, w=w, wstar=wstar, c=c, cstar=cstar,
        u=u, ustar=ustar, y=y, ystar=ystar, vstar=cert.vstar.copy(),
        br_bounds=bounds,
    )


def epi_from_eps(prob: FractionalProblem, xbar, cert: EpsCertificate) -> EpiCertificate:
    """Lift the subdifferential form to the epigraph form by arithmetic.

    Heights follow a = <xstar, xbar> + gamma_n - value(xbar) per block
    (d and s drop the value term, which is zero for indicators); the
    composite height t is pinned to the exact value 0 whenever vstar
    vanishes, which reproduces the six-summand scalar count of the
    worked examples.
    """
    xbar = np.asarray(xbar, float).reshape(-1)
    m, N, n = cert.xstar.shape
    nu, f_fns, w_fns = _objective_fns(prob, xbar, cert.lam)
    hbar = prob.h_values(xbar)
    gam = cert.gamma
    a = np.empty((m, N))
    b = np.empty((m, N))
    for i in range(m):
        fv = f_fns[i].eval(xbar)
        wv = w_fns[i].eval(xbar)
        a[i] = cert.xstar[i] @ xbar + gam - fv
        b[i] = cert.wstar[i] @ xbar + gam - wv
    d = cert.cstar @ xbar + gam
    s = cert.ystar @ hbar + gam
    comp_val = -(cert.vstar @ hbar)  # (-vstar o h)(xbar)
    t = cert.ustar @ xbar + gam - comp_val
    zero_v = np.abs(cert.vstar).max(axis=1) <= VSTAR_ZERO_TOL
    t = np.where(zero_v, 0.0, t)
    return EpiCertificate(
        lam=cert.lam, xstar=cert.xstar.copy(), a=a, wstar=cert.wstar.copy(), b=b,
        cstar=cert.cstar.copy(), d=d, ystar=cert.ystar.copy(), s=s,
        vstar=cert.vstar.copy(), ustar=cert.ustar.copy(), t=t,
    )


# ---------------------------------------------------------------------------
# classical multiplier condition


@dataclass(frozen=True)
class KKTResult:
    holds: bool
    ystar: Optional[np.ndarray] = None
    reason: Optional[str] = None


def classical_kkt_check(prob: FractionalProblem, xbar, lam=None) -> KKTResult:
    """One exact (eps = 0) feasibility LP for the multiplier condition:
    some ystar in Y* with <ystar, h(xbar)> = 0 and
    0 in the subdifferential sum of the scalarized objective, the
    indicator of C, and ystar o h at xbar.

    Data outside the polyhedral fragment comes back as a non-holding
    result with an "unsupported data" reason, distinct from a genuinely
    infeasible multiplier system.
    """
    xbar = np.asarray(xbar, float).reshape(-1)
    if not feasible(prob, xbar):
        raise PointOutsideDomain("candidate point is not feasible")
    lam = np.ones(prob.m) if lam is None else np.asarray(lam, float).reshape(-1)
    lam = _check_lambda(lam, prob.m)
    try:
        nu, f_fns, w_fns = _objective_fns(prob, xbar, lam)
        f_polys = []
        for i, fn in enumerate(f_fns):
            fp = _poly_or_none(fn)
            if fp is None:
                raise ConjugateUnsupported(f"objective {i} numerator is not polyhedral")
            f_polys.append(fp)
        w_polys = []
        for i, fn in enumerate(w_fns):
            if is_zero_fn(fn):
                w_polys.append(None)
                continue
            wp = _poly_or_none(fn)
            if wp is None:
                raise ConjugateUnsupported(f"objective {i} denominator term is not polyhedral")
            w_polys.append(wp)
        h_polys = [as_polyhedral(h) for h in prob.hmap]
        if any(hp is None for hp in h_polys):
            raise ConjugateUnsupported("constraint components are not polyhedral")
        for hp in h_polys:
            if not hp.domain.is_full_space():
                raise UnsupportedDomain("composite encoding needs full-space h components")
        G = _generators(prob.cone)
    except (ConjugateUnsupported, UnsupportedDomain, GeneratorFormRequired, UnsupportedData) as exc:
        return KKTResult(holds=False, reason=f"unsupported data: {exc}")

    hbar = prob.h_values(xbar)
    lp = BlockLP()
    parts = [add_eps_subdiff_block(lp, fp, xbar, 0.0) for fp in f_polys]
    for wp in w_polys:
        if wp is not None:
            parts.append(add_eps_subdiff_block(lp, wp, xbar, 0.0))
    c_expr = add_eps_normal_block(lp, prob.C, xbar, 0.0)
    if c_expr.idx.size:
        parts.append(c_expr)
    y_expr = add_polar_member(lp, G, sign=1.0)
    add_inner_product_eq(lp, y_expr, hbar, 0.0)  # complementarity
    u_expr = add_composite_subdiff_block(lp, h_polys, xbar, 0.0, weights=y_expr)
    parts.append(u_expr)
    total = expr_sum(parts)
    for coord in range(prob.n):
        lp.add_eq(total.idx, total.M[coord], 0.0)
    out = lp.solve()
    if out.is_optimal:
        return KKTResult(holds=True, ystar=y_expr.value(out.x))
    return KKTResult(holds=False, reason="multiplier system infeasible")


def slater_check(prob: FractionalProblem, grid, strict_margin: float = 1e-6) -> bool:
    """Does some grid point of C map strictly inside -Y+?  Needs the
    inequality form of the cone: H h(a) <= -strict_margin componentwise."""
    if prob.cone.H is None:
        raise UnsupportedData("interior check needs the inequality form of the cone")
    X = grid.points()
    if X.shape[1] != prob.n:
        raise DimensionMismatch("grid dimension does not match problem")
    inC = prob.C.contains_batch(X)
    if not inC.any():
        return False
    hv = prob.h_values_batch(X[inC])
    finite = np.isfinite(hv).all(axis=1)
    if not finite.any():
        return False
    vals = hv[finite] @ prob.cone.H.T
    return bool((vals <= -strict_margin).all(axis=1).any())
