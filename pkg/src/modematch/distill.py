"""Fidelity improvement from mode-selective filtering.

A state shared between a clean fundamental mode and orthogonal noise
modes has fidelity F to the ideal pair. Passing both photons through a
filter that transmits the fundamental with probability |o|^2 relative to
the noise rescales the noise weight, giving

    F' = 1 / (1 + (1/F - 1) |o|^2)

when the filter passes the fundamental mode perfectly and attenuates the
noise admixture by |o|^2. The same expression applies to a filter aimed
orthogonally to the noise if the caller supplies the reduced pass
probability of the noise component as overlap_sq.
"""

from __future__ import annotations

from .errors import DomainError


def purified_fidelity(fidelity, overlap_sq):
    """Fidelity after filtering, from input fidelity and noise passage.

    overlap_sq is the surviving fraction of the unwanted admixture
    relative to the wanted mode; 1 leaves the state unchanged, 0 removes
    the noise entirely.

    >>> purified_fidelity(0.5, 1.0)
    0.5
    >>> purified_fidelity(0.5, 0.0)
    1.0
    """
    if not (0.0 < fidelity <= 1.0):
        raise DomainError("input fidelity must lie in (0, 1]")
    if not (0.0 <= overlap_sq <= 1.0):
        raise DomainError("pass probability must lie in [0, 1]")
    return 1.0 / (1.0 + (1.0 / fidelity - 1.0) * overlap_sq)
