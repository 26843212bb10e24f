"""Matrix kernel for SO(n) and its algebra of skew-symmetric matrices.

Conventions used throughout the package:

* group elements are n x n special-orthogonal ndarrays,
* algebra elements and momenta are n x n skew-symmetric ndarrays,
* the duality pairing is <mu, xi> = trace(mu^T xi), so momenta are stored
  as skew matrices as well,
* coordinates on the algebra use the basis E_ij = e_i e_j^T - e_j e_i^T
  for i < j in lexicographic order (Gram matrix of the pairing in this
  basis is 2*I); the coordinate vector of xi is just its strict upper
  triangle read row by row.

All sign conventions for the dual actions (coAd, coad) are derived from
the trace pairing, not assumed:

    coAd(g, mu) = g^T mu g          <coAd(g,mu), xi> = <mu, Ad(g,xi)>
    coad(xi, mu) = mu xi - xi mu    <coad(xi,mu), eta> = <mu, ad(xi,eta)>
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import (
    BranchCutError,
    SingularMatrixError,
    SingularOperatorError,
    ValidationError,
)

ORTH_TOL = 1e-10
BRANCH_MARGIN = 0.1


def dim_so(n: int) -> int:
    """Dimension of the algebra of n x n skew matrices."""
    return n * (n - 1) // 2


def skew_part(m: np.ndarray) -> np.ndarray:
    """Canonical skew-symmetrization (m - m^T)/2; makes skewness exact."""
    return 0.5 * (m - m.T)


def is_skew(m: np.ndarray) -> bool:
    return bool(np.array_equal(m, -m.T))


def require_skew(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Return m skew-canonicalized; reject inputs that are not nearly skew."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {m.shape}")
    sym = 0.5 * np.linalg.norm(m + m.T)
    scale = max(1.0, np.linalg.norm(m))
    if sym > 1e-8 * scale:
        raise ValidationError(f"{name} is not skew-symmetric (symmetric part {sym:.3g})")
    return skew_part(m)


def as_rotation(m: np.ndarray, tol: float = ORTH_TOL, name: str = "matrix") -> np.ndarray:
    """Validate that m is special-orthogonal within tol and return it.

    Checks ||m m^T - I||_F <= tol and det(m) = +1 within tol.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n < 2:
        raise ValidationError(f"{name} must be at least 2x2")
    err = np.linalg.norm(m @ m.T - np.eye(n))
    if not np.isfinite(err) or err > tol:
        raise ValidationError(f"{name} is not orthogonal within {tol:g}: residual {err:.3g}")
    det = np.linalg.det(m)
    if abs(det - 1.0) > max(tol, 1e-9):
        raise ValidationError(f"{name} has det {det:.6g}, expected +1")
    return m


# ---------------------------------------------------------------------------
# so(3) vector maps and the fixed basis of so(n)
# ---------------------------------------------------------------------------

def hat(v) -> np.ndarray:
    """so(3) hat map: hat(v) w = v x w."""
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(xi: np.ndarray) -> np.ndarray:
    """Inverse of hat (so(3) only)."""
    return np.array([xi[2, 1], xi[0, 2], xi[1, 0]])


@lru_cache(maxsize=None)
def _basis_and_index(n: int):
    d = dim_so(n)
    basis = np.zeros((d, n, n))
    rows = np.empty(d, dtype=int)
    cols = np.empty(d, dtype=int)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            basis[k, i, j] = 1.0
            basis[k, j, i] = -1.0
            rows[k] = i
            cols[k] = j
            k += 1
    basis.setflags(write=False)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return basis, rows, cols


def so_basis(n: int) -> np.ndarray:
    """Stacked basis E_ij (i<j lexicographic) as a (d, n, n) array."""
    return _basis_and_index(n)[0]


def coords(xi: np.ndarray) -> np.ndarray:
    """Coordinates of a skew matrix in the fixed basis (upper triangle)."""
    n = xi.shape[0]
    _, rows, cols = _basis_and_index(n)
    return np.asarray(xi)[rows, cols]


def from_coords(v: np.ndarray, n: int) -> np.ndarray:
    """Skew matrix with the given upper-triangle coordinates."""
    v = np.asarray(v, dtype=float)
    if v.shape != (dim_so(n),):
        raise ValidationError(f"expected {dim_so(n)} coordinates for so({n}), got {v.shape}")
    _, rows, cols = _basis_and_index(n)
    xi = np.zeros((n, n))
    xi[rows, cols] = v
    xi[cols, rows] = -v
    return xi


def pairing(mu: np.ndarray, xi: np.ndarray) -> float:
    """Duality pairing trace(mu^T xi)."""
    return float(np.sum(mu * xi))


# ---------------------------------------------------------------------------
# exponential and principal logarithm
# ---------------------------------------------------------------------------

def _exp_so3(xi: np.ndarray) -> np.ndarray:
    v = np.array([xi[2, 1], xi[0, 2], xi[1, 0]])
    th2 = v @ v
    th = np.sqrt(th2)
    if th < 1e-4:
        # series for sin(t)/t and (1-cos t)/t^2
        a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0
        b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0
    else:
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / th2
    return np.eye(3) + a * xi + b * (xi @ xi)


@lru_cache(maxsize=1)
def _pade6_coeffs():
    m = 6
    c = [1.0]
    for k in range(1, m + 1):
        c.append(c[-1] * (m - k + 1) / ((2 * m - k + 1) * k))
    return tuple(c)


def _exp_pade(a: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring with the diagonal order-6 rational approximant."""
    n = a.shape[0]
    nrm = np.linalg.norm(a, 1)
    s = 0
    if nrm > 0.5:
        s = int(np.ceil(np.log2(nrm / 0.5)))
    a = a / (2 ** s)
    c = _pade6_coeffs()
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    ident = np.eye(n)
    # even and odd parts of the numerator polynomial
    even = c[0] * ident + c[2] * a2 + c[4] * a4 + c[6] * a6
    odd = a @ (c[1] * ident + c[3] * a2 + c[5] * a4)
    r = np.linalg.solve(even - odd, even + odd)
    for _ in range(s):
        r = r @ r
    return r


def exp(xi: np.ndarray) -> np.ndarray:
    """Group exponential of a skew matrix; result is special-orthogonal."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[0] == 3:
        return _exp_so3(xi)
    return _exp_pade(xi)


def rotation_angles(g: np.ndarray) -> np.ndarray:
    """Rotation angles of g in [0, pi], one per complex eigenvalue pair."""
    ev = np.linalg.eigvals(g)
    ang = np.abs(np.angle(ev))
    return np.sort(ang)[::-1]


def max_rotation_angle(g: np.ndarray) -> float:
    return float(rotation_angles(g)[0])


def _log_so3(g: np.ndarray) -> np.ndarray:
    c = 0.5 * (np.trace(g) - 1.0)
    c = min(1.0, max(-1.0, c))
    th = np.arccos(c)
    if th < 1e-4:
        f = 1.0 + th * th / 6.0 + 7.0 * th ** 4 / 360.0
        return 0.5 * f * (g - g.T)
    return th / (2.0 * np.sin(th)) * (g - g.T)


def _sqrtm_db(a: np.ndarray, iters: int = 30) -> np.ndarray:
    """Principal square root via the Denman-Beavers iteration."""
    y = a
    z = np.eye(a.shape[0])
    err_prev = np.inf
    for _ in range(iters):
        y_next = 0.5 * (y + np.linalg.inv(z))
        z_next = 0.5 * (z + np.linalg.inv(y))
        y, z = y_next, z_next
        err = np.linalg.norm(y @ y - a)
        if err < 1e-15 or err >= err_prev:
            break
        err_prev = err
    return y


def _log_near_identity(r: np.ndarray) -> np.ndarray:
    """Mercator series log(I + X), valid for small ||X||."""
    x = r - np.eye(r.shape[0])
    term = x.copy()
    out = x.copy()
    for k in range(2, 60):
        term = term @ x
        inc = ((-1) ** (k + 1)) * term / k
        out = out + inc
        if np.linalg.norm(inc) < 1e-18:
            break
    return out


def log(g: np.ndarray, branch_margin: float = BRANCH_MARGIN) -> np.ndarray:
    """Principal logarithm of a rotation; raises BranchCutError near angle pi.

    For n = 3 uses the inverse Rodrigues formula; for larger n inverse
    scaling-and-squaring (repeated principal square roots, then a series).
    """
    g = np.asarray(g, dtype=float)
    theta = max_rotation_angle(g)
    if theta > np.pi - branch_margin:
        raise BranchCutError(
            f"rotation angle {theta:.6g} exceeds pi - {branch_margin:g}; "
            "the principal-log chart does not cover this element")
    if g.shape[0] == 3:
        return _log_so3(g)
    r = g
    s = 0
    while np.linalg.norm(r - np.eye(g.shape[0])) > 0.25 and s < 20:
        r = _sqrtm_db(r)
        s += 1
    return skew_part((2 ** s) * _log_near_identity(r))


# ---------------------------------------------------------------------------
# adjoint / coadjoint actions and the algebra bracket
# ---------------------------------------------------------------------------

def Ad(g: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Adjoint action g xi g^{-1} (= g xi g^T on the orthogonal group)."""
    return skew_part(g @ xi @ g.T)


def coAd(g: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Coadjoint action Ad*_g mu = g^T mu g under the trace pairing."""
    return skew_part(g.T @ mu @ g)


def ad(eta: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Commutator [eta, xi]."""
    return eta @ xi - xi @ eta


def coad(xi: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """ad*_xi mu = mu xi - xi mu, the dual of ad under the trace pairing."""
    return mu @ xi - xi @ mu


def Ad_op(g: np.ndarray) -> np.ndarray:
    """Matrix of Ad(g, .) on algebra coordinates (d x d)."""
    n = g.shape[0]
    basis, rows, cols = _basis_and_index(n)
    stacked = np.einsum("ij,bjk,lk->bil", g, basis, g)
    return stacked[:, rows, cols].T


def ad_op(eta: np.ndarray) -> np.ndarray:
    """Matrix of ad(eta, .) on algebra coordinates (d x d)."""
    n = eta.shape[0]
    basis, rows, cols = _basis_and_index(n)
    stacked = np.einsum("ij,bjk->bik", eta, basis) - np.einsum("bij,jk->bik", basis, eta)
    return stacked[:, rows, cols].T


def _entire_series(a: np.ndarray, tol: float = 1e-16, max_terms: int = 300) -> np.ndarray:
    """Evaluate sum_k a^k / (k+1)! by direct summation.

    Entire function; the tail is truncated once the next term drops
    below tol in Frobenius norm.
    """
    d = a.shape[0]
    term = np.eye(d)
    total = np.eye(d)
    for k in range(1, max_terms):
        term = term @ a / (k + 1)
        total = total + term
        if np.linalg.norm(term) < tol:
            break
    return total


def iex_op(eta: np.ndarray) -> np.ndarray:
    """Operator sum_k (-ad_eta)^k / (k+1)! as a d x d coordinate matrix.

    This is the left-trivialized derivative of the exponential:
    d/dt exp(eta + t*delta) | t=0  =  exp(eta) @ apply(iex_op(eta), delta).
    """
    return _entire_series(-ad_op(eta))


def chi_op(xi: np.ndarray) -> np.ndarray:
    """Operator inverse of iex_op(xi), by direct linear solve.

    The operator has zero eigenvalues when some pair of rotation angles
    of xi sums to a multiple of 2*pi (chart breakdown); this is reported
    as SingularOperatorError rather than returned as garbage.
    """
    m = iex_op(xi)
    d = m.shape[0]
    try:
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > 1e14:
            raise SingularOperatorError(
                f"iex operator is numerically singular (cond {cond:.3g}); "
                "the argument is outside the usable chart")
        out = np.linalg.solve(m, np.eye(d))
    except np.linalg.LinAlgError as e:
        raise SingularOperatorError(f"iex operator is singular: {e}") from e
    if not np.all(np.isfinite(out)):
        raise SingularOperatorError("iex operator inverse is not finite")
    return out


def apply_op(op: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Apply a d x d coordinate operator to a skew matrix."""
    return from_coords(op @ coords(xi), xi.shape[0])


# ---------------------------------------------------------------------------
# Cayley transform and projection to the group
# ---------------------------------------------------------------------------

def cayley(xi: np.ndarray) -> np.ndarray:
    """Cayley transform (I + xi/2)(I - xi/2)^{-1}; special-orthogonal for skew xi."""
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[0]
    if n == 3:
        v = np.array([xi[2, 1], xi[0, 2], xi[1, 0]])
        scale = 1.0 / (1.0 + 0.25 * (v @ v))
        return np.eye(3) + scale * (xi + 0.5 * (xi @ xi))
    ident = np.eye(n)
    return np.linalg.solve(ident - 0.5 * xi, ident + 0.5 * xi)


def cayley_inv(f: np.ndarray) -> np.ndarray:
    """Inverse Cayley transform 2(I + f)^{-1}(f - I).

    Defined for rotations with no angle at pi; raises BranchCutError there.
    """
    n = f.shape[0]
    ident = np.eye(n)
    a = ident + f
    if abs(np.linalg.det(a)) < 1e-12:
        raise BranchCutError("rotation angle at pi: Cayley chart does not cover this element")
    return skew_part(2.0 * np.linalg.solve(a, f - ident))


def project_group(m: np.ndarray) -> np.ndarray:
    """Nearest special-orthogonal matrix in the Frobenius norm.

    Polar factor via SVD; if the orthogonal factor has det -1, the
    singular direction with smallest singular value is flipped.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise SingularMatrixError("matrix has non-finite entries")
    try:
        u, s, vt = np.linalg.svd(m)
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(f"SVD failed: {e}") from e
    if s[-1] <= 1e-13 * max(s[0], 1.0):
        raise SingularMatrixError("matrix is singular; polar factor undefined")
    r = u @ vt
    if np.linalg.det(r) < 0:
        u = u.copy()
        u[:, -1] *= -1.0
        r = u @ vt
    return r
