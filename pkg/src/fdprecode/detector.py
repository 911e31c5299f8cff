"""Exact maximum-likelihood detection for the precoded system.

Two equivalent paths: an exhaustive search over the full codebook (the
oracle, cost O(N * nt * nr) per decode) and a fast decoder over the sum
constellation. Because F x = a * sum(x), the metric ||y - H F x||^2 depends
on x only through s = sum(x), so the fast path scans |s - s_mf| for the
matched-filter reduction s_mf = (h_eff^H y) / ||h_eff||^2 -- the same argmin.
Both break ties toward the smallest codeword index.
"""

import numpy as np

from .constellation import ConstellationSets, SumConstellation, _min_pairwise
from .errors import ConfigurationError, EnumerationBudgetError
from .precoder import precoder_matrix

BRUTEFORCE_BUDGET = 1 << 16


def codeword_matrix(cs: ConstellationSets, budget: int = BRUTEFORCE_BUDGET) -> np.ndarray:
    """All codewords as an (N, nt) array in lexicographic index order."""
    n = cs.codebook_size
    if n > budget:
        raise EnumerationBudgetError(
            f"enumeration infeasible: {n} codewords exceed the budget {budget}; "
            "use the sum-constellation decoder")
    cols = []
    before, after = 1, n
    for c in cs.sets:
        after //= c.size
        cols.append(np.tile(np.repeat(c, after), before))
        before *= c.size
    return np.stack(cols, axis=1)


def exhaustive_ml(y: np.ndarray, transfer: np.ndarray, codewords: np.ndarray) -> int:
    """argmin_k ||y - transfer @ x_k||^2 over the rows of `codewords`."""
    cand = codewords @ transfer.T
    metrics = np.sum(np.abs(np.asarray(y)[None, :] - cand) ** 2, axis=1)
    return int(np.argmin(metrics))


def ml_decode_bruteforce(y: np.ndarray, h: np.ndarray, a: np.ndarray,
                         cs: ConstellationSets, budget: int = BRUTEFORCE_BUDGET) -> int:
    """Exhaustive ML decode of y = H F x + n; returns the codeword index."""
    hf = np.asarray(h, dtype=complex) @ precoder_matrix(a)
    return exhaustive_ml(np.asarray(y, dtype=complex), hf, codeword_matrix(cs, budget=budget))


class FastMLDecoder:
    """Sum-constellation ML decoder with the table precomputed once.

    Refuses a non-injective sum constellation at construction: with colliding
    sums the decision would be ambiguous.
    """

    def __init__(self, sc: SumConstellation, tol: float = 1e-12):
        d, _, _ = _min_pairwise(sc.points)
        if not d > tol:
            raise ConfigurationError(
                f"sum constellation is not injective (minimum spacing {d:g}); "
                "decisions would be ambiguous")
        self.sums = sc.points
        self.index_map = sc.index_map

    def decode(self, y: np.ndarray, h_eff: np.ndarray) -> int:
        return int(self.decode_batch(np.asarray(y, dtype=complex)[None, :],
                                     np.asarray(h_eff, dtype=complex)[None, :])[0])

    def decode_batch(self, y: np.ndarray, h_eff: np.ndarray) -> np.ndarray:
        """Vectorized decode of (B, nr) receptions against (B, nr) effective channels."""
        s_mf = np.sum(h_eff.conj() * y, axis=1) / np.sum(np.abs(h_eff) ** 2, axis=1)
        # chunk so the (chunk, N) distance table stays within ~32 MB
        out = np.empty(y.shape[0], dtype=np.int64)
        chunk = max(1, (1 << 21) // max(1, self.sums.size))
        for lo in range(0, y.shape[0], chunk):
            hi = min(lo + chunk, y.shape[0])
            out[lo:hi] = np.argmin(np.abs(s_mf[lo:hi, None] - self.sums[None, :]), axis=1)
        return out


def ml_decode_fast(y: np.ndarray, h_eff: np.ndarray, sc: SumConstellation) -> int:
    """One-shot fast decode; build a FastMLDecoder once for hot loops."""
    return FastMLDecoder(sc).decode(y, h_eff)
