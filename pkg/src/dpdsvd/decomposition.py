"""Multi-layer robust SVD by successive orthogonalized rank-one fits.

Each layer solves the rank-one problem on the running residual (the data
minus all previously fitted layers) with its singular vectors constrained
orthogonal to those of the previous layers; the constraint is enforced by
projecting every candidate update onto the orthogonal complement before
normalization. Layers are returned in fit order (no sorting);
sorted_by_lambda reorders on request.
"""
from dataclasses import dataclass

import numpy as np

from .errors import RankTooLarge
from .rank1 import Rank1Fit, SolverOptions, _check_input, _solve


@dataclass
class RobustSvd:
    """Rank-r robust decomposition: X ~ U diag(lambdas) V'.

    U is (n, r) and V is (p, r) with orthonormal columns, lambdas and
    sigma2s are (r,), diagnostics holds the per-layer Rank1Fit records
    in fit order.
    """
    rank: int
    lambdas: np.ndarray
    U: np.ndarray
    V: np.ndarray
    sigma2s: np.ndarray
    diagnostics: list


def fit_svd(X, rank, opts=None):
    """Fit a rank-`rank` robust SVD of X.

    Parameters
    ----------
    X : (n, p) array, finite, min(n, p) >= 2
    rank : int, 1 <= rank <= min(n, p)
    opts : SolverOptions, default SolverOptions()

    Raises RankTooLarge when rank exceeds min(n, p). Errors raised while
    fitting layer k are re-raised with a "layer k:" prefix.
    """
    X = _check_input(X)
    n, p = X.shape
    rank = int(rank)
    if rank < 1:
        raise ValueError("rank must be at least 1")
    if rank > min(n, p):
        raise RankTooLarge(f"rank {rank} exceeds min(n, p) = {min(n, p)}")
    if opts is None:
        opts = SolverOptions()
    E = X.copy()
    us, vs, lams, s2s, diags = [], [], [], [], []
    for k in range(rank):
        ortho_u = np.column_stack(us) if us else None
        ortho_v = np.column_stack(vs) if vs else None
        # constrained layers stay Newton-polished only in the least squares
        # case, where the projected fixpoint and the constrained stationary
        # point coincide; the first (free) layer is always polished
        do_polish = k == 0 or opts.alpha == 0.0
        try:
            f = _solve(E, opts, ortho_u, ortho_v, polish=do_polish)
        except (FloatingPointError, ValueError) as exc:
            raise type(exc)(f"layer {k}: {exc}") from exc
        us.append(f["u"])
        vs.append(f["v"])
        lams.append(f["lam"])
        s2s.append(f["s2"])
        diags.append(Rank1Fit(lambda_=f["lam"], u=f["u"], v=f["v"],
                              sigma2=f["s2"], iterations=f["it"],
                              converged=f["conv"], trace=f["trace"]))
        E = E - f["lam"] * np.outer(f["u"], f["v"])
    return RobustSvd(rank=rank, lambdas=np.array(lams), U=np.column_stack(us),
                     V=np.column_stack(vs), sigma2s=np.array(s2s),
                     diagnostics=diags)


def reconstruct(decomp):
    """U diag(lambdas) V' as an (n, p) matrix."""
    return (decomp.U * decomp.lambdas) @ decomp.V.T


def orthogonality_report(decomp):
    """Largest absolute off-diagonal inner product among the U columns
    and among the V columns, as a (row, column) pair. A rank-1
    decomposition reports (0.0, 0.0)."""
    def offdiag(A):
        G = A.T @ A
        G = G - np.diag(np.diag(G))
        return float(np.max(np.abs(G))) if G.size else 0.0

    return offdiag(decomp.U), offdiag(decomp.V)


def sorted_by_lambda(decomp):
    """A copy of the decomposition with layers in descending lambda order."""
    order = np.argsort(-decomp.lambdas, kind="stable")
    return RobustSvd(rank=decomp.rank,
                     lambdas=decomp.lambdas[order],
                     U=decomp.U[:, order],
                     V=decomp.V[:, order],
                     sigma2s=decomp.sigma2s[order],
                     diagnostics=[decomp.diagnostics[i] for i in order])
