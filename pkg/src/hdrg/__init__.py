"""HDRG decoders for qudit toric codes.

Subpackages: `toric` (code geometry and homology), `noise` (error models
and adversarial bundles), `clustering` (classic HDRG decoders and the
wormhole distance oracle), `matching` (exact minimum-weight matching),
`mwm_decoder` (the matching-based decoder), `nonabelian` (the Phi-Lambda
model via D(Z_6)) and `bench` (Monte Carlo harness and analysis).
"""

from .toric import CodeParams
from .noise import NoiseParams
from .mwm_decoder import DecoderConfig

__all__ = ["CodeParams", "NoiseParams", "DecoderConfig"]
__version__ = "0.1.0"
