"""Pointwise fifth-order WENO reconstruction.

Every function takes the five stencil values as separate arguments (or a
5-tuple) so the same code evaluates a single interface, a whole row of
interfaces held in numpy arrays, or tape Variables during training.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

from . import autodiff as ad

IDEAL_WEIGHTS = (0.1, 0.6, 0.3)
DEFAULT_EPSILON = 1e-13
DEFAULT_C = 0.1

Triple = Tuple[object, object, object]

class Weighting(str, Enum):
    """Nonlinear weighting used to blend the three candidate fluxes."""
    JS = "js"
    Z = "z"
    DS = "ds"

@dataclass(frozen=True)
class SchemeConfig:
    """Scheme selection and its constants.

    Attributes:
        weighting: JS, Z or DS weights
        epsilon: Regularization added to the smoothness indicators
        C: Offset added to the learned multipliers in DS mode
    """
    weighting: Weighting = Weighting.Z
    epsilon: float = DEFAULT_EPSILON
    C: float = DEFAULT_C

    def __post_init__(self) -> None:
        object.__setattr__(self, "weighting", Weighting(self.weighting))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")

    @property
    def ideal_weights(self) -> Tuple[float, float, float]:
        return IDEAL_WEIGHTS

def candidate_fluxes(w: Sequence) -> Triple:
    """Third-order candidate values at x_{i+1/2} from (f_{i-2}, ..., f_{i+2})."""
    w0, w1, w2, w3, w4 = w
    return ((2.0 * w0 - 7.0 * w1 + 11.0 * w2) / 6.0,
            (-w1 + 5.0 * w2 + 2.0 * w3) / 6.0,
            (2.0 * w2 + 5.0 * w3 - w4) / 6.0)

def smoothness_indicators(w: Sequence) -> Triple:
    w0, w1, w2, w3, w4 = w
    beta0 = 13.0 / 12.0 * (w0 - 2.0 * w1 + w2) ** 2 + 0.25 * (w0 - 4.0 * w1 + 3.0 * w2) ** 2
    beta1 = 13.0 / 12.0 * (w1 - 2.0 * w2 + w3) ** 2 + 0.25 * (w1 - w3) ** 2
    beta2 = 13.0 / 12.0 * (w2 - 2.0 * w3 + w4) ** 2 + 0.25 * (3.0 * w2 - 4.0 * w3 + w4) ** 2
    return beta0, beta1, beta2

def _normalize(alpha: Triple) -> Triple:
    total = alpha[0] + alpha[1] + alpha[2]
    return alpha[0] / total, alpha[1] / total, alpha[2] / total

def weights_js(beta: Triple, cfg: SchemeConfig) -> Triple:
    eps = cfg.epsilon
    return _normalize(tuple(d / (eps + b) ** 2 for d, b in zip(IDEAL_WEIGHTS, beta)))

def tau5(beta: Triple):
    return ad.absolute(beta[0] - beta[2])

def weights_z(beta: Triple, cfg: SchemeConfig) -> Triple:
    eps = cfg.epsilon
    tau = tau5(beta)
    return _normalize(tuple(d * (1.0 + (tau / (b + eps)) ** 2)
                            for d, b in zip(IDEAL_WEIGHTS, beta)))

def ds_indicators(beta: Triple, delta: Triple, cfg: SchemeConfig) -> Triple:
    """Scale each indicator by its multiplier plus the offset C."""
    return tuple(b * (d + cfg.C) for b, d in zip(beta, delta))

def interface_flux(w: Sequence, cfg: SchemeConfig, delta: Optional[Triple] = None):
    """Reconstructed flux at x_{i+1/2} for the positive branch.

    Args:
        w: Stencil values (f_{i-2}, ..., f_{i+2})
        cfg: Scheme selection
        delta: Multiplier triple (delta_{i-1}, delta_i, delta_{i+1}), DS only

    Raises:
        ValueError: If delta is missing in DS mode or given otherwise.
    """
    fluxes = candidate_fluxes(w)
    beta = smoothness_indicators(w)
    if cfg.weighting is Weighting.DS:
        if delta is None:
            raise ValueError("WENO-DS reconstruction needs a multiplier triple")
        omega = weights_z(ds_indicators(beta, delta, cfg), cfg)
    elif delta is not None:
        raise ValueError(f"Multipliers are only used by WENO-DS, not {cfg.weighting.value}")
    elif cfg.weighting is Weighting.JS:
        omega = weights_js(beta, cfg)
    else:
        omega = weights_z(beta, cfg)
    return omega[0] * fluxes[0] + omega[1] * fluxes[1] + omega[2] * fluxes[2]

def negative_branch_reconstruct(w: Sequence, cfg: SchemeConfig, delta: Optional[Triple] = None):
    """Reconstruct f^- at x_{i+1/2} from (f_{i-1}, ..., f_{i+3}) in grid order.

    The stencil is mirrored about the interface and handed to the positive
    branch, so ``delta`` is given in mirrored order as well.
    """
    return interface_flux(tuple(reversed(tuple(w))), cfg, delta)
