"""Shared numerical tolerances.

Every routine that needs a cutoff reads it from a :class:`Numerics` record so a
run can be re-tuned from one place.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Numerics:
    # relative to the norm of the state being decomposed
    svd_discard: float = 1e-12
    norm_tolerance: float = 1e-10
    hermitian_tol: float = 1e-12
    normalized_tol: float = 1e-8
    gram_threshold: float = 1e-10
    zero_norm: float = 1e-12
    dense_cap_qubit: int = 14
    dense_cap_qutrit: int = 9

    def dense_cap(self, d: int) -> int:
        """Largest chain length handled by dense vectors for local dimension ``d``."""
        if d <= 2:
            return self.dense_cap_qubit
        if d == 3:
            return self.dense_cap_qutrit
        # keep d**n at or below 2**14
        cap = 0
        while d ** (cap + 1) <= 2**self.dense_cap_qubit:
            cap += 1
        return cap


DEFAULT = Numerics()
