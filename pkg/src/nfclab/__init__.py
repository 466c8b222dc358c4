"""Near-field large-array channel laboratory.

Synthesizes spherical-wave multipath channels for a virtual linear array
over a swept band, extracts per-element channel statistics, partitions the
array into stationary intervals, and quantifies the multiplanar-wave
approximation against the spherical ground truth.
"""

from .analysis import (ChannelStats, PowerDelayProfile, compute_pdp,
                       compute_stats, estimate_aod, los_phase, received_power,
                       received_power_db, rms_delay_spread)
from .multiplanar import (MultiplanarError, PlanarPatch,
                          build_multiplanar_model, multiplanar_error,
                          synthesize_multiplanar_cfr)
from .scene import (ArraySpec, Blocker, Scatterer, Scene, SceneError,
                    SceneParseError, SceneValidationError, Sweep, Wall,
                    element_position, element_positions, load_preset,
                    load_scene, loads_scene, occludes, save_scene,
                    serialize_scene, true_geometry, PRESET_NAMES)
from .stationarity import (CorrelationMatrix, StationaryPartition,
                           characteristic_slope, cmd_map, correlation_matrix,
                           correlation_matrix_distance, partition_by_cmd,
                           partition_by_slope, pearson_profiles,
                           singleton_partition, uniform_partition)
from .synth import (ChannelFrequencyResponse, PropagationPath, add_noise,
                    enumerate_paths, knife_edge_loss, los_path, make_cfr,
                    synthesize_cfr, synthesize_los_cfr)
from .wavefront import (PhaseModelInput, exact_relative_phase, far_field_phase,
                        near_field_phase, path_difference, rayleigh_distance)

__version__ = "0.1.0"
