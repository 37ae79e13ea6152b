"""Flattened evaluation context for the worst-case rate kernels.

Everything that does not depend on the scanned vacuum-yield point is
precomputed once per (protocol, statistics, config) and stored as plain
floats, so both kernel backends evaluate straight-line arithmetic per
point. ``pack`` serializes the context into one float64 vector for the
compiled backend.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RateContext:
    lam: float                 # deviation scale; 0 in fluctuation-free mode
    log_eps: float             # ln(epsilon)
    theta_on: bool             # sampling deviation applied to phase errors
    rx2_literal: bool          # X-basis key terms reuse the Z-side phase error
    need_pz: bool
    need_px: bool
    pairs_z: np.ndarray        # (n_pairs, 3): [numerator const, A02, A12]
    pairs_x: np.ndarray
    terms: np.ndarray          # (n_terms, 5): [is_z, weight, a1, n1, ec_term]
    test_x: np.ndarray         # [a0, a1, n0, n1, T_eff] of the X-side error-test source
    test_z: np.ndarray
    theta_z: np.ndarray        # [n_x, n_z] single-photon counts for the Z-side phase error
    theta_x: np.ndarray
    _packed: np.ndarray | None = field(default=None, repr=False, compare=False)

    def pack(self) -> np.ndarray:
        if self._packed is not None:
            return self._packed
        head = np.array(
            [
                self.lam,
                self.log_eps,
                float(self.theta_on),
                float(self.rx2_literal),
                float(self.need_pz),
                float(self.need_px),
                float(len(self.pairs_z)),
                float(len(self.pairs_x)),
                float(len(self.terms)),
            ]
        )
        self._packed = np.concatenate(
            [
                head,
                np.asarray(self.test_x, dtype=float),
                np.asarray(self.test_z, dtype=float),
                np.asarray(self.theta_z, dtype=float),
                np.asarray(self.theta_x, dtype=float),
                np.asarray(self.pairs_z, dtype=float).ravel(),
                np.asarray(self.pairs_x, dtype=float).ravel(),
                np.asarray(self.terms, dtype=float).ravel(),
            ]
        )
        return self._packed
