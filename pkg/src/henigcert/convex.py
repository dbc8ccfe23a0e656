"""Exact convex analysis for piecewise-affine functions on polyhedra.

Everything here reduces to small LPs solved by :mod:`henigcert.linprog`:
Fenchel conjugates, support functions, epigraph-of-conjugate membership,
eps-subdifferential and eps-normal membership (Young-Fenchel form), exact
subgradient selection, and the nearby-exact-pair search behind the
Brondsted-Rockafellar bounds.  Black-box functions from the builtin
whitelist can only be evaluated; asking for their conjugate raises.

Function values are extended reals: plain floats with ``numpy.inf`` for
points outside the domain.  A ``ScaledFn`` with coefficient zero is the
zero function on all of R^n regardless of its inner function's domain.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import max_affine_batch
from .errors import (
    BRSearchFailed,
    ConjugateUnsupported,
    DimensionMismatch,
    EmptyEffectiveGrid,
    EmptyPolyhedron,
    NumericalFailure,
    PointOutsideDomain,
    UnsupportedData,
    UnsupportedDomain,
)
from .grids import GridSpec
from .linprog import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, lp_solve

TOL_MEMBERSHIP = 1e-7
ZERO_FN_TOL = 1e-9
_ACTIVE_TOL = 1e-9
_PIECE_CAP = 512


# ---------------------------------------------------------------------------
# sets


class Polyhedron:
    """``{x : A x <= b, E x == d}``; nonempty, checked at construction."""

    def __init__(self, A=None, b=None, E=None, d=None, n: Optional[int] = None):
        if A is None and E is None and n is None:
            raise DimensionMismatch("need A, E, or an explicit dimension n")
        if n is None:
            n = np.shape(A)[1] if A is not None and np.size(A) else np.shape(E)[1]
        self.n = int(n)
        self.A = np.zeros((0, self.n)) if A is None else np.atleast_2d(np.asarray(A, float))
        self.b = np.zeros(0) if b is None else np.asarray(b, float).reshape(-1)
        self.E = np.zeros((0, self.n)) if E is None else np.atleast_2d(np.asarray(E, float))
        self.d = np.zeros(0) if d is None else np.asarray(d, float).reshape(-1)
        if self.A.size == 0:
            self.A = self.A.reshape(0, self.n)
        if self.E.size == 0:
            self.E = self.E.reshape(0, self.n)
        if self.A.shape[1] != self.n or self.E.shape[1] != self.n:
            raise DimensionMismatch("polyhedron rows do not match dimension")
        if self.A.shape[0] != self.b.shape[0] or self.E.shape[0] != self.d.shape[0]:
            raise DimensionMismatch("polyhedron rhs length does not match row count")
        if self.nrows:
            probe = lp_solve(
                LinearProgram(
                    c=np.zeros(self.n), A_ub=self.A, b_ub=self.b, A_eq=self.E, b_eq=self.d
                )
            )
            if probe.status == INFEASIBLE:
                raise EmptyPolyhedron("polyhedron has no feasible point")

    @property
    def nrows(self) -> int:
        return self.A.shape[0] + self.E.shape[0]

    @classmethod
    def full_space(cls, n: int) -> "Polyhedron":
        return cls(n=n)

    @classmethod
    def box(cls, lo, hi) -> "Polyhedron":
        lo = np.asarray(lo, float).reshape(-1)
        hi = np.asarray(hi, float).reshape(-1)
        n = lo.shape[0]
        rows, rhs = [], []
        for j in range(n):
            if np.isfinite(hi[j]):
                r = np.zeros(n)
                r[j] = 1.0
                rows.append(r)
                rhs.append(hi[j])
            if np.isfinite(lo[j]):
                r = np.zeros(n)
                r[j] = -1.0
                rows.append(r)
                rhs.append(-lo[j])
        if rows:
            return cls(A=np.array(rows), b=np.array(rhs), n=n)
        return cls(n=n)

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, float).reshape(-1)
        if x.shape[0] != self.n:
            raise DimensionMismatch("point dimension does not match polyhedron")
        if self.A.shape[0] and (self.A @ x - self.b).max() > tol:
            return False
        if self.E.shape[0] and np.abs(self.E @ x - self.d).max() > tol:
            return False
        return True

    def contains_batch(self, X, tol: float = 1e-9) -> np.ndarray:
        X = np.asarray(X, float)
        ok = np.ones(X.shape[0], dtype=bool)
        if self.A.shape[0]:
            ok &= (X @ self.A.T <= self.b + tol).all(axis=1)
        if self.E.shape[0]:
            ok &= (np.abs(X @ self.E.T - self.d) <= tol).all(axis=1)
        return ok

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        if other.n != self.n:
            raise DimensionMismatch("cannot intersect polyhedra of different dimension")
        return Polyhedron(
            A=np.vstack([self.A, other.A]),
            b=np.concatenate([self.b, other.b]),
            E=np.vstack([self.E, other.E]),
            d=np.concatenate([self.d, other.d]),
            n=self.n,
        )

    def is_full_space(self) -> bool:
        return self.nrows == 0


# ---------------------------------------------------------------------------
# functions


class ConvexFn:
    """Base class: a proper convex function on R^dim with extended-real values."""

    dim: int

    def eval(self, x) -> float:
        raise NotImplementedError

    def eval_batch(self, X) -> np.ndarray:
        X = np.asarray(X, float)
        return np.array([self.eval(row) for row in X])

    def __call__(self, x) -> float:
        return self.eval(x)


class PolyhedralFn(ConvexFn):
    """max-affine function max_k(<a_k,x> + b_k) plus the indicator of ``domain``.

    Parameters
    ----------
    A : array, shape (K, n)
        Piece gradients, one row per affine piece (K >= 1).
    b : array, shape (K,)
        Piece offsets.
    domain : Polyhedron, optional
        Effective domain; full space when omitted.
    """

    def __init__(self, A, b, domain: Optional[Polyhedron] = None):
        self.A = np.atleast_2d(np.asarray(A, float))
        self.b = np.asarray(b, float).reshape(-1)
        if self.A.shape[0] == 0:
            raise DimensionMismatch("max-affine function needs at least one piece")
        if self.A.shape[0] != self.b.shape[0]:
            raise DimensionMismatch("piece offsets do not match piece count")
        self.dim = self.A.shape[1]
        if domain is not None and domain.n != self.dim:
            raise DimensionMismatch("domain dimension does not match pieces")
        self.domain = domain if domain is not None else Polyhedron.full_space(self.dim)

    @property
    def npieces(self) -> int:
        return self.A.shape[0]

    def eval(self, x) -> float:
        x = np.asarray(x, float).reshape(-1)
        if x.shape[0] != self.dim:
            raise DimensionMismatch("point dimension does not match function")
        if not self.domain.contains(x):
            return np.inf
        return float((self.A @ x + self.b).max())

    def eval_batch(self, X) -> np.ndarray:
        X = np.asarray(X, float)
        vals = max_affine_batch(self.A, self.b, X)
        if not self.domain.is_full_space():
            vals = np.where(self.domain.contains_batch(X), vals, np.inf)
        return vals

    def piece_values(self, x) -> np.ndarray:
        x = np.asarray(x, float).reshape(-1)
        return self.A @ x + self.b

    def scale(self, alpha: float) -> "PolyhedralFn":
        if alpha <= 0:
            raise ValueError("scale expects a positive coefficient")
        return PolyhedralFn(alpha * self.A, alpha * self.b, self.domain)

    @classmethod
    def affine(cls, a, b: float = 0.0, domain: Optional[Polyhedron] = None):
        a = np.asarray(a, float).reshape(-1)
        return cls(a[None, :], [float(b)], domain)

    @classmethod
    def indicator(cls, C: Polyhedron) -> "PolyhedralFn":
        """delta_C as the zero max-affine piece restricted to C."""
        return cls(np.zeros((1, C.n)), [0.0], C)


def _relu_sq(x):
    return max(0.0, x[0]) ** 2


def _relu_sq_batch(X):
    return np.maximum(0.0, X[:, 0]) ** 2


def _eucl_minus_last(x):
    return float(np.linalg.norm(x) - x[-1])


def _eucl_minus_last_batch(X):
    return np.linalg.norm(X, axis=1) - X[:, -1]


def _neg_quad_plus_one(x):
    return x[1] ** 2 + 1.0


def _neg_quad_plus_one_batch(X):
    return X[:, 1] ** 2 + 1.0


def _const_plus_coord(x):
    return x[1] + 3.0


def _const_plus_coord_batch(X):
    return X[:, 1] + 3.0


# name -> (minimum dimension, pointwise eval, batch eval)
BUILTINS = {
    "relu_sq": (1, _relu_sq, _relu_sq_batch),
    "eucl_minus_last": (1, _eucl_minus_last, _eucl_minus_last_batch),
    "neg_quad_plus_one": (2, _neg_quad_plus_one, _neg_quad_plus_one_batch),
    "const_plus_coord": (2, _const_plus_coord, _const_plus_coord_batch),
}


class BlackBoxFn(ConvexFn):
    """A whitelisted builtin, evaluation only (no conjugate support)."""

    def __init__(self, name: str, dim: int):
        if name not in BUILTINS:
            raise UnsupportedData(f"unknown builtin {name!r}")
        min_dim, f, fb = BUILTINS[name]
        if dim < min_dim:
            raise DimensionMismatch(f"builtin {name!r} needs dim >= {min_dim}")
        self.name = name
        self.dim = int(dim)
        self._f = f
        self._fb = fb

    def eval(self, x) -> float:
        x = np.asarray(x, float).reshape(-1)
        if x.shape[0] != self.dim:
            raise DimensionMismatch("point dimension does not match function")
        return float(self._f(x))

    def eval_batch(self, X) -> np.ndarray:
        X = np.asarray(X, float)
        return np.asarray(self._fb(X), float)


class ScaledFn(ConvexFn):
    """``c * inner`` with c >= 0; c == 0 means the zero function on all of R^n."""

    def __init__(self, c: float, inner: ConvexFn):
        c = float(c)
        if c < 0:
            raise ValueError("scaled coefficient must be nonnegative")
        self.c = c
        self.inner = inner
        self.dim = inner.dim

    def eval(self, x) -> float:
        if self.c == 0.0:
            np.asarray(x, float).reshape(-1)  # still validate shape lazily
            return 0.0
        return self.c * self.inner.eval(x)

    def eval_batch(self, X) -> np.ndarray:
        X = np.asarray(X, float)
        if self.c == 0.0:
            return np.zeros(X.shape[0])
        return self.c * self.inner.eval_batch(X)


def collapse_scale(fn: ConvexFn):
    """Flatten nested ScaledFn wrappers to (coefficient, base function)."""
    coef = 1.0
    while isinstance(fn, ScaledFn):
        coef *= fn.c
        fn = fn.inner
    return coef, fn


def as_polyhedral(fn: ConvexFn) -> Optional[PolyhedralFn]:
    """Equivalent PolyhedralFn, or None when the function is a live black box.

    Zero-scaled functions collapse to the zero piece on full space (their
    inner function's domain is irrelevant by convention).
    """
    coef, base = collapse_scale(fn)
    if coef == 0.0:
        return PolyhedralFn(np.zeros((1, fn.dim)), [0.0])
    if isinstance(base, PolyhedralFn):
        return base.scale(coef) if coef != 1.0 else base
    return None


def is_zero_fn(fn: ConvexFn) -> bool:
    coef, _ = collapse_scale(fn)
    return coef == 0.0


def weighted_sum_polyhedral(weights, fns) -> PolyhedralFn:
    """Materialize sum_j w_j f_j (w_j >= 0, f_j max-affine) as one PolyhedralFn.

    Pieces are the cross-products of the component pieces; the count is
    capped at a desk-scale limit.  Zero-weight components drop out entirely
    (same convention as ScaledFn(0, .)).
    """
    weights = np.asarray(weights, float).reshape(-1)
    if len(fns) == 0:
        raise DimensionMismatch("weighted sum needs at least one function")
    if len(fns) != weights.shape[0]:
        raise DimensionMismatch("weights do not match function count")
    if (weights < 0).any():
        raise ValueError("weighted sum expects nonnegative weights")
    active = [(w, as_polyhedral(f)) for w, f in zip(weights, fns) if w > 0]
    for w, p in active:
        if p is None:
            raise ConjugateUnsupported("weighted sum needs polyhedral components")
    dim = fns[0].dim
    if not active:
        return PolyhedralFn(np.zeros((1, dim)), [0.0])
    total = 1
    for _, p in active:
        total *= p.npieces
    if total > _PIECE_CAP:
        raise UnsupportedData(f"weighted sum would have {total} pieces, cap {_PIECE_CAP}")
    A = np.zeros((1, dim))
    b = np.zeros(1)
    domain = Polyhedron.full_space(dim)
    for w, p in active:
        A = (A[:, None, :] + w * p.A[None, :, :]).reshape(-1, dim)
        b = (b[:, None] + w * p.b[None, :]).reshape(-1)
        if not p.domain.is_full_space():
            domain = domain.intersect(p.domain)
    return PolyhedralFn(A, b, domain)


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class Verdict:
    """Membership verdict carrying its slack (bound minus attained value).

    ``ok`` is equivalent to ``slack >= -tol`` for the tolerance the check
    ran with; a failing verdict reports how far it missed.
    """

    ok: bool
    slack: float

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# conjugation

def conjugate(fn: ConvexFn, xstar) -> float:
    """Fenchel conjugate f*(x*) = sup_x <x*,x> - f(x), exact via one LP.

    Supported: PolyhedralFn, ScaledFn chains over a PolyhedralFn, and
    zero-scaled functions (conjugate is the indicator of {0}, with a
    1e-9 snap on ||x*||_inf).  Black boxes raise ConjugateUnsupported.
    """
    xstar = np.asarray(xstar, float).reshape(-1)
    if xstar.shape[0] != fn.dim:
        raise DimensionMismatch("functional dimension does not match function")
    coef, base = collapse_scale(fn)
    if coef == 0.0:
        return 0.0 if np.abs(xstar).max(initial=0.0) <= ZERO_FN_TOL else np.inf
    if not isinstance(base, PolyhedralFn):
        raise ConjugateUnsupported(
            "conjugate needs a polyhedral (or zero-scaled) function"
        )
    poly = base.scale(coef) if coef != 1.0 else base
    n = poly.dim
    # variables (x, t): maximize <x*,x> - t  s.t. t >= pieces, x in domain
    K = poly.npieces
    dom = poly.domain
    A_ub = np.zeros((K + dom.A.shape[0], n + 1))
    b_ub = np.zeros(K + dom.A.shape[0])
    A_ub[:K, :n] = poly.A
    A_ub[:K, n] = -1.0
    b_ub[:K] = -poly.b
    if dom.A.shape[0]:
        A_ub[K:, :n] = dom.A
        b_ub[K:] = dom.b
    A_eq = None
    b_eq = None
    if dom.E.shape[0]:
        A_eq = np.hstack([dom.E, np.zeros((dom.E.shape[0], 1))])
        b_eq = dom.d
    out = lp_solve(
        LinearProgram(
            c=np.concatenate([xstar, [-1.0]]), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq
        )
    )
    if out.status == UNBOUNDED:
        return np.inf
    if out.status != OPTIMAL:
        raise NumericalFailure("conjugate LP reported infeasible on a nonempty domain")
    return out.value


def support_function(C: Polyhedron, xstar) -> float:
    """sigma_C(x*) = sup_{x in C} <x*,x> via one LP (+inf when unbounded)."""
    xstar = np.asarray(xstar, float).reshape(-1)
    if xstar.shape[0] != C.n:
        raise DimensionMismatch("functional dimension does not match set")
    out = lp_solve(LinearProgram(c=xstar, A_ub=C.A, b_ub=C.b, A_eq=C.E, b_eq=C.d))
    if out.status == UNBOUNDED:
        return np.inf
    if out.status != OPTIMAL:
        raise NumericalFailure("support LP reported infeasible on a nonempty set")
    return out.value


def epi_conjugate_contains(fn: ConvexFn, xstar, r: float, tol: float = TOL_MEMBERSHIP) -> Verdict:
    """Is (x*, r) in epi f*?  Verdict slack is r - f*(x*)."""
    val = conjugate(fn, xstar)
    slack = float(r) - val
    return Verdict(bool(slack >= -tol), float(slack))


def young_fenchel_gap(fn: ConvexFn, xbar, xstar) -> float:
    """f*(x*) + f(x̄) - <x*, x̄>; nonnegative, zero iff x* is an exact subgradient."""
    xbar = np.asarray(xbar, float).reshape(-1)
    xstar = np.asarray(xstar, float).reshape(-1)
    fval = fn.eval(xbar)
    if not np.isfinite(fval):
        raise PointOutsideDomain("base point is outside the function domain")
    cval = conjugate(fn, xstar)
    if not np.isfinite(cval):
        return np.inf
    return float(cval + fval - xstar @ xbar)


def eps_subdiff_contains(
    fn: ConvexFn, xbar, eps: float, xstar, tol: float = TOL_MEMBERSHIP
) -> Verdict:
    """Is x* in the eps-subdifferential of f at x̄ (Young-Fenchel form)?

    Membership holds iff f*(x*) + f(x̄) - <x*,x̄> <= eps; the verdict slack
    is eps minus that gap.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    gap = young_fenchel_gap(fn, xbar, xstar)
    slack = float(eps) - gap
    return Verdict(bool(slack >= -tol), float(slack))


def eps_normal_contains(
    C: Polyhedron, xbar, eps: float, xstar, tol: float = TOL_MEMBERSHIP
) -> Verdict:
    """Is x* an eps-normal of C at x̄, i.e. sigma_C(x*) - <x*,x̄> <= eps?"""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    xbar = np.asarray(xbar, float).reshape(-1)
    if not C.contains(xbar, tol=1e-7):
        raise PointOutsideDomain("base point is outside the set")
    xstar = np.asarray(xstar, float).reshape(-1)
    sval = support_function(C, xstar)
    if not np.isfinite(sval):
        return Verdict(False, -np.inf)
    slack = float(eps) - float(sval - xstar @ xbar)
    return Verdict(bool(slack >= -tol), float(slack))


# ---------------------------------------------------------------------------
# subgradient selection


def _active_pieces(poly: PolyhedralFn, x, tol: float = _ACTIVE_TOL) -> np.ndarray:
    vals = poly.piece_values(x)
    fval = vals.max()
    return np.where(vals >= fval - tol * (1.0 + abs(fval)))[0]


def subdiff_element(fn: ConvexFn, xbar) -> np.ndarray:
    """One exact subgradient of a polyhedral function at x̄, deterministically.

    Interior of the domain: the gradient of the lowest-index active piece.
    On the domain boundary the choice comes from the exactness LP
    (minimize the Young-Fenchel gap over the conjugate encoding), which is
    deterministic under Bland's rule.
    """
    coef, base = collapse_scale(fn)
    xbar = np.asarray(xbar, float).reshape(-1)
    if coef == 0.0:
        return np.zeros(fn.dim)
    if not isinstance(base, PolyhedralFn):
        raise ConjugateUnsupported("subdiff_element needs a polyhedral function")
    poly = base.scale(coef) if coef != 1.0 else base
    fval = poly.eval(xbar)
    if not np.isfinite(fval):
        raise PointOutsideDomain("base point is outside the function domain")
    dom = poly.domain
    ineq_active = (
        np.where(dom.A @ xbar >= dom.b - _ACTIVE_TOL * (1.0 + np.abs(dom.b)))[0]
        if dom.A.shape[0]
        else np.array([], dtype=int)
    )
    if ineq_active.size == 0 and dom.E.shape[0] == 0:
        k = int(_active_pieces(poly, xbar)[0])
        return poly.A[k].copy()
    xstar, gap = _exactness_lp(poly, xbar, target=None)
    if gap > 1e-6:
        raise NumericalFailure("exactness LP did not close the Young-Fenchel gap")
    return xstar


def _exactness_lp(poly: PolyhedralFn, x, target):
    """Pick x* in the subdifferential of ``poly`` at x.

    target None: minimize the Young-Fenchel gap itself (returns its optimum).
    target vector: restrict to active pieces / active domain rows (an exact
    description of the subdifferential) and minimize ||x* - target||_inf;
    returns (x*, gap) with the gap re-verified via the conjugate LP.
    """
    x = np.asarray(x, float).reshape(-1)
    n = poly.dim
    dom = poly.domain
    fval = poly.eval(x)
    if target is None:
        # variables: mu (K), eta (mA), zeta (mE); minimize YF gap
        K = poly.npieces
        mA, mE = dom.A.shape[0], dom.E.shape[0]
        nv = K + mA + 2 * mE  # zeta split into +/- parts
        c = np.zeros(nv)
        # gap = -sum mu b + b_D eta + d_D zeta + f(x) - <xstar, x>
        # xstar = A^T mu + A_D^T eta + E_D^T zeta
        c[:K] = poly.b + poly.A @ x
        if mA:
            # x in dom, so the slack is nonnegative up to noise; snap it
            c[K:K + mA] = -np.maximum(dom.b - dom.A @ x, 0.0)
        if mE:
            resid = dom.d - dom.E @ x
            resid[np.abs(resid) <= 1e-9 * (1.0 + np.abs(dom.d))] = 0.0
            c[K + mA:K + mA + mE] = -resid
            c[K + mA + mE:] = resid
        A_eq = np.zeros((1, nv))
        A_eq[0, :K] = 1.0
        out = lp_solve(
            LinearProgram(c=c, A_eq=A_eq, b_eq=[1.0], lb=np.zeros(nv))
        )
        if out.status != OPTIMAL:
            raise NumericalFailure("subgradient exactness LP failed")
        mu = out.x[:K]
        xstar = poly.A.T @ mu
        if mA:
            xstar = xstar + dom.A.T @ out.x[K:K + mA]
        if mE:
            zeta = out.x[K + mA:K + mA + mE] - out.x[K + mA + mE:]
            xstar = xstar + dom.E.T @ zeta
        gap = young_fenchel_gap(poly, x, xstar)
        return xstar, gap
    # active-set form with a min-distance objective
    act = _active_pieces(poly, x)
    Aact = poly.A[act]
    ineq_act = (
        np.where(dom.A @ x >= dom.b - _ACTIVE_TOL * (1.0 + np.abs(dom.b)))[0]
        if dom.A.shape[0]
        else np.array([], dtype=int)
    )
    Din = dom.A[ineq_act]
    mE = dom.E.shape[0]
    Ka, mI = Aact.shape[0], Din.shape[0]
    target = np.asarray(target, float).reshape(-1)
    # variables: mu (Ka), eta (mI), zeta+ (mE), zeta- (mE), t
    nv = Ka + mI + 2 * mE + 1
    c = np.zeros(nv)
    c[-1] = -1.0  # maximize -t  == minimize t
    rows = []
    rhs = []
    for sign in (1.0, -1.0):
        # sign*(xstar_c - target_c) <= t  for each coordinate c
        block = np.zeros((n, nv))
        block[:, :Ka] = sign * Aact.T
        if mI:
            block[:, Ka:Ka + mI] = sign * Din.T
        if mE:
            block[:, Ka + mI:Ka + mI + mE] = sign * dom.E.T
            block[:, Ka + mI + mE:Ka + mI + 2 * mE] = -sign * dom.E.T
        block[:, -1] = -1.0
        rows.append(block)
        rhs.append(sign * target)
    A_ub = np.vstack(rows)
    b_ub = np.concatenate(rhs)
    A_eq = np.zeros((1, nv))
    A_eq[0, :Ka] = 1.0
    lb = np.zeros(nv)
    out = lp_solve(LinearProgram(c=c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], lb=lb))
    if out.status != OPTIMAL:
        raise NumericalFailure("min-distance subgradient LP failed")
    mu = out.x[:Ka]
    xstar = Aact.T @ mu
    if mI:
        xstar = xstar + Din.T @ out.x[Ka:Ka + mI]
    if mE:
        zeta = out.x[Ka + mI:Ka + mI + mE] - out.x[Ka + mI + mE:Ka + mI + 2 * mE]
        xstar = xstar + dom.E.T @ zeta
    gap = young_fenchel_gap(poly, x, xstar)
    return xstar, gap


@dataclass(frozen=True)
class SubdiffPolytope:
    """LP description of the eps-subdifferential of a full-domain max-affine f.

    The set is { A^T mu : mu >= 0, sum mu = 1, fval - mu @ vals <= eps },
    where vals[k] is piece k evaluated at the base point.  ``interval``
    projects the set onto a direction (two LPs); ``contains`` solves the
    membership LP directly.
    """

    A: np.ndarray       # (K, n) piece gradients
    vals: np.ndarray    # (K,) piece values at the base point
    fval: float
    eps: float

    @property
    def npieces(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def _constraints(self):
        K = self.npieces
        A_ub = np.zeros((1, K))
        A_ub[0] = -self.vals
        b_ub = np.array([self.eps - self.fval])
        A_eq = np.ones((1, K))
        b_eq = np.array([1.0])
        return A_ub, b_ub, A_eq, b_eq

    def interval(self, direction) -> tuple:
        direction = np.asarray(direction, float).reshape(-1)
        A_ub, b_ub, A_eq, b_eq = self._constraints()
        K = self.npieces
        proj = self.A @ direction
        hi = lp_solve(LinearProgram(c=proj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, lb=np.zeros(K)))
        lo = lp_solve(LinearProgram(c=-proj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, lb=np.zeros(K)))
        if not (hi.is_optimal and lo.is_optimal):
            raise NumericalFailure("projection LP failed")
        return (-lo.value, hi.value)

    def contains(self, xstar, tol: float = TOL_MEMBERSHIP) -> Verdict:
        xstar = np.asarray(xstar, float).reshape(-1)
        K = self.npieces
        n = self.dim
        # feasibility with an l_inf elastic: minimize t s.t. |A^T mu - x*| <= t
        nv = K + 1
        A_ub, b_ub, A_eq, b_eq = self._constraints()
        A_ub = np.hstack([A_ub, np.zeros((A_ub.shape[0], 1))])
        blocks = []
        rhs = []
        for sign in (1.0, -1.0):
            blk = np.zeros((n, nv))
            blk[:, :K] = sign * self.A.T
            blk[:, -1] = -1.0
            blocks.append(blk)
            rhs.append(sign * xstar)
        A_ub = np.vstack([A_ub] + blocks)
        b_ub = np.concatenate([b_ub] + rhs)
        A_eq = np.hstack([A_eq, np.zeros((1, 1))])
        out = lp_solve(
            LinearProgram(c=-np.eye(nv)[-1], A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, lb=np.zeros(nv))
        )
        if not out.is_optimal:
            raise NumericalFailure("membership LP failed")
        dist = -out.value
        return Verdict(bool(dist <= tol), float(-dist))


def eps_subdiff_polytope(fn: ConvexFn, xbar, eps: float) -> SubdiffPolytope:
    """Exact polytope description of the eps-subdifferential at x̄.

    Requires a full-space domain (UnsupportedDomain otherwise); zero-scaled
    functions yield the singleton {0} via the single zero piece.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    xbar = np.asarray(xbar, float).reshape(-1)
    poly = as_polyhedral(fn)
    if poly is None:
        raise ConjugateUnsupported("eps_subdiff_polytope needs a polyhedral function")
    if not poly.domain.is_full_space():
        raise UnsupportedDomain(
            "eps_subdiff_polytope supports full-space domains only"
        )
    vals = poly.piece_values(xbar)
    return SubdiffPolytope(A=poly.A.copy(), vals=vals, fval=float(vals.max()), eps=float(eps))


# ---------------------------------------------------------------------------
# Brondsted-Rockafellar regularization


@dataclass(frozen=True)
class BRResult:
    """Nearby exact pair (x, x*) with its three measured bound values."""

    x: np.ndarray
    xstar: np.ndarray
    dist_x: float       # ||x - x̄||_2          (bound: sqrt(eps))
    dist_xstar: float   # ||x* - x̄*||_2        (bound: sqrt(eps))
    value_gap: float    # |f(x)-f(x̄)-<x*,x-x̄>| (bound: 2 eps)


def _ball_directions(n: int, count: int) -> np.ndarray:
    """Deterministic unit directions: axes first, then a seeded spread."""
    dirs = [np.eye(n)[j] * s for j in range(n) for s in (1.0, -1.0)]
    if n == 1:
        return np.array(dirs[:2])
    if n == 2:
        extra = max(count - len(dirs), 0)
        ang = 2.0 * np.pi * (np.arange(extra) + 0.5) / max(extra, 1)
        dirs += [np.array([np.cos(a), np.sin(a)]) for a in ang[:extra]]
    else:
        rng = np.random.default_rng(1234)
        while len(dirs) < count:
            v = rng.normal(size=n)
            nv = np.linalg.norm(v)
            if nv > 1e-9:
                dirs.append(v / nv)
    return np.array(dirs)


def _br_check(poly, xbar, eps, xbarstar, x, xstar, tol):
    fx = poly.eval(x)
    fb = poly.eval(xbar)
    if not (np.isfinite(fx) and np.isfinite(fb)):
        return None
    if young_fenchel_gap(poly, x, xstar) > tol:
        return None
    # the three distance bounds are checked strictly: a returned pair
    # satisfies them in exact float comparison, true Euclidean norm
    d_x = float(np.linalg.norm(x - xbar))
    d_s = float(np.linalg.norm(xstar - xbarstar))
    v_g = float(abs(fx - fb - xstar @ (x - xbar)))
    root = np.sqrt(max(eps, 0.0))
    if d_x <= root and d_s <= root and v_g <= 2.0 * eps:
        return BRResult(x=np.asarray(x, float), xstar=np.asarray(xstar, float),
                        dist_x=d_x, dist_xstar=d_s, value_gap=v_g)
    return None


def br_regularize(
    fn: ConvexFn,
    xbar,
    eps: float,
    xbarstar,
    facets: int = 16,
    max_doublings: int = 4,
    tol: float = TOL_MEMBERSHIP,
) -> BRResult:
    """Find (x, x*) with x* an exact subgradient at x and the three
    Brondsted-Rockafellar bounds: ||x-x̄|| <= sqrt(eps),
    ||x*-x̄*|| <= sqrt(eps), |f(x)-f(x̄)-<x*,x-x̄>| <= 2 eps.

    Given x̄* in the eps-subdifferential at x̄, such a pair exists; the
    search tries the base point itself, then minimizes f - <x̄*, .> over a
    circumscribed polyhedral ball of radius sqrt(eps) (clamping the result
    onto the true Euclidean ball), doubling the facet count on failure,
    with a penalty-form sweep as the last fallback.  Bounds are verified
    with the true Euclidean norm before returning; BRSearchFailed otherwise.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    xbar = np.asarray(xbar, float).reshape(-1)
    xbarstar = np.asarray(xbarstar, float).reshape(-1)
    if is_zero_fn(fn):
        res = _br_check(as_polyhedral(fn), xbar, eps, xbarstar, xbar, np.zeros(fn.dim), tol)
        if res is None:
            raise BRSearchFailed("zero function: x̄* is not within sqrt(eps) of 0")
        return res
    poly = as_polyhedral(fn)
    if poly is None:
        raise ConjugateUnsupported("br_regularize needs a polyhedral function")
    fb = poly.eval(xbar)
    if not np.isfinite(fb):
        raise PointOutsideDomain("base point is outside the function domain")

    # already exact at the base point?
    if young_fenchel_gap(poly, xbar, xbarstar) <= tol:
        return BRResult(x=xbar, xstar=xbarstar, dist_x=0.0, dist_xstar=0.0, value_gap=0.0)
    # nearest exact subgradient at the base point
    xstar0, gap0 = _exactness_lp(poly, xbar, target=xbarstar)
    if gap0 <= tol:
        res = _br_check(poly, xbar, eps, xbarstar, xbar, xstar0, tol)
        if res is not None:
            return res

    root = np.sqrt(eps)
    n = poly.dim
    dom = poly.domain

    def try_point(y):
        d = y - xbar
        nd = np.linalg.norm(d)
        if nd > root:
            y = xbar + d * (root / nd) * (1.0 - 1e-14)
        if not np.isfinite(poly.eval(y)):
            return None
        xs, g = _exactness_lp(poly, y, target=xbarstar)
        if g > tol:
            return None
        return _br_check(poly, xbar, eps, xbarstar, y, xs, tol)

    count = facets
    for _ in range(max_doublings + 1):
        dirs = _ball_directions(n, count)
        # trust region: minimize f(y) - <x̄*, y> over dom ∩ {<u_j, y-x̄> <= root}
        K = poly.npieces
        A_ub = np.vstack(
            [
                np.hstack([poly.A, -np.ones((K, 1))]),
                np.hstack([dom.A, np.zeros((dom.A.shape[0], 1))]),
                np.hstack([dirs, np.zeros((dirs.shape[0], 1))]),
            ]
        )
        b_ub = np.concatenate([-poly.b, dom.b, dirs @ xbar + root])
        A_eq = b_eq = None
        if dom.E.shape[0]:
            A_eq = np.hstack([dom.E, np.zeros((dom.E.shape[0], 1))])
            b_eq = dom.d
        out = lp_solve(
            LinearProgram(
                c=np.concatenate([xbarstar, [-1.0]]),
                A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
            )
        )
        if out.is_optimal:
            res = try_point(out.x[:n])
            if res is not None:
                return res
        count *= 2

    # penalty sweep: minimize f(y) - <x̄*,y> + lam * gauge(y - x̄)
    dirs = _ball_directions(n, count)
    for frac in (1.0, 0.75, 0.5, 0.25):
        lam = root * frac if root > 0 else frac
        K = poly.npieces
        A_ub = np.vstack(
            [
                np.hstack([poly.A, -np.ones((K, 1)), np.zeros((K, 1))]),
                np.hstack([dom.A, np.zeros((dom.A.shape[0], 2))]),
                np.hstack([dirs, np.zeros((dirs.shape[0], 1)), -np.ones((dirs.shape[0], 1))]),
            ]
        )
        b_ub = np.concatenate([-poly.b, dom.b, dirs @ xbar])
        A_eq = b_eq = None
        if dom.E.shape[0]:
            A_eq = np.hstack([dom.E, np.zeros((dom.E.shape[0], 2))])
            b_eq = dom.d
        out = lp_solve(
            LinearProgram(
                c=np.concatenate([xbarstar, [-1.0], [-lam]]),
                A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                lb=np.concatenate([np.full(n + 1, -np.inf), [0.0]]),
            )
        )
        if out.is_optimal:
            res = try_point(out.x[:n])
            if res is not None:
                return res
    raise BRSearchFailed(
        "no nearby exact pair satisfied the distance bounds "
        f"(eps={eps:g}, facets up to {count})"
    )


# ---------------------------------------------------------------------------
# grid oracle


def brute_conjugate(fn: ConvexFn, xstar, grid: GridSpec) -> float:
    """Grid lower bound for f*(x*): max over lattice points of <x*,x> - f(x).

    This is an oracle for tests, not an exact conjugate: it underestimates
    whenever the supremum lies off the lattice (or escapes the grid box).
    """
    xstar = np.asarray(xstar, float).reshape(-1)
    if xstar.shape[0] != fn.dim:
        raise DimensionMismatch("functional dimension does not match function")
    X = grid.points()
    vals = fn.eval_batch(X)
    finite = np.isfinite(vals)
    if not finite.any():
        raise EmptyEffectiveGrid("no lattice point lies in the function domain")
    scores = X[finite] @ xstar - vals[finite]
    return float(scores.max())
