"""Sequential Kronecker-sum channel estimation (SALSA) for MIMO-OFDM uplinks."""

from .channel import (ArrayGeometry, ChannelProfile, ChannelRealization, ClusterParams,
                      assemble_total, default_profile, generate_channel, load_profile,
                      steering_vector, to_frequency)
from .estimators import (EstimateReport, IdentifiabilityError, SalsaConfig, SalsaError,
                         als_fit_term, check_identifiability, ls_estimate, nmse,
                         salsa_estimate)
from .kron_factor import (FactorShape, KroneckerTerm, nearest_kronecker, rearrange,
                          reconstruct, sequential_factorize)
from .measurement import (AnalogCombiner, MeasurementSet, SystemConfig, calibrate_noise,
                          fold_measurement, generate_combiner, generate_precoders, simulate)
from .tensor_core import core_tensor, fold, kronecker, mode_product, unfold, unvec, vec

__version__ = "0.1.0"
