"""Rayleigh MIMO channel, receiver cross-correlation statistics, and AWGN.

A channel matrix is a complex ndarray of shape (nr, nt): row = receive
antenna, column = transmit antenna, entries i.i.d. CN(0, 1) with total unit
variance split equally between real and imaginary parts, so that the
expected squared Frobenius norm is nt * nr.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


def sample_channel(nt: int, nr: int, stream: np.random.Generator) -> np.ndarray:
    """Draw an (nr, nt) matrix of i.i.d. CN(0, 1) gains from `stream`."""
    if nt < 1 or nr < 1:
        raise ConfigurationError(f"antenna counts must be >= 1, got nt={nt}, nr={nr}")
    g = stream.standard_normal((2, nr, nt))
    return (g[0] + 1j * g[1]) / np.sqrt(2.0)


def sample_noise(nr: int, sigma2: float, stream: np.random.Generator) -> np.ndarray:
    """Draw an (nr,) CN(0, sigma2) noise vector; sigma2 is the total per-entry variance."""
    if nr < 1:
        raise ConfigurationError(f"nr must be >= 1, got nr={nr}")
    if sigma2 <= 0:
        raise ConfigurationError(f"noise variance must be positive, got {sigma2}")
    g = stream.standard_normal((2, nr))
    return (g[0] + 1j * g[1]) * np.sqrt(sigma2 / 2.0)


@dataclass(frozen=True)
class CrossTerms:
    """Polar form of the column cross-correlations the receiver feeds back from.

    For transmit-antenna pairs n > m (0-based indices),
    ``rho[n, m] * exp(1j * alpha[n, m])`` equals sum_o conj(H[o, n]) * H[o, m].
    rho is nonnegative, alpha is the principal value in (-pi, pi], and
    alpha is fixed to 0 wherever rho vanishes. Entries with n <= m are zero.
    """

    rho: np.ndarray
    alpha: np.ndarray

    @property
    def nt(self) -> int:
        return self.rho.shape[0]


def gram_polar(h_batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized cross-terms for a (B, nr, nt) channel batch.

    Returns (rho, alpha) of shape (B, nt, nt); only the strict lower
    triangle (n > m) is meaningful downstream, the full Gram product is
    returned as computed.
    """
    g = np.einsum("bon,bom->bnm", h_batch.conj(), h_batch)
    rho = np.abs(g)
    # adding +0j normalizes -0.0 imaginary parts so negative reals map to +pi
    alpha = np.where(rho == 0.0, 0.0, np.angle(g + 0j))
    return rho, alpha


def gram_cross_terms(h: np.ndarray) -> CrossTerms:
    """Cross-correlation magnitudes and phases of a single (nr, nt) channel."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2:
        raise ConfigurationError(f"channel matrix must be 2-D, got shape {h.shape}")
    rho, alpha = gram_polar(h[None])
    tril = np.tri(h.shape[1], k=-1, dtype=bool)
    return CrossTerms(rho=np.where(tril, rho[0], 0.0), alpha=np.where(tril, alpha[0], 0.0))
