"""Discrete-event simulator for static wireless sensor grids: two-ray link
budget, CSMA channel with capture, energy metering, and reactive route
discovery in two flavors (min-hop vs. min-hop + max residual energy)."""

from .config import (ConfigError, LadderSpec, PRESETS, RoutingParams,
                     SimConfig, SimParams, TopologyParams, parse_config,
                     parse_text, preset_config, serialize, with_overrides)
from .energy import (EnergyMeter, EnergyParams, PacketSpec, battery_energy,
                     packet_energy, packet_tx_time, power_from_current)
from .linkbudget import (RadioParams, Reception, SPEED_OF_LIGHT, dbm_to_watts,
                         max_range, quarter_wave_height, reception_decision,
                         two_ray_rx_power, watts_to_dbm, wavelength)
from .routing import (MODE_AODV, MODE_NEWAODV, Rerr, RouteEntry, Router, Rrep,
                      Rreq, rebroadcast_delay)
from .simcore import (RouteRecord, RunStats, Simulation, SimulationError, run)
from .topology import (EnergyAssignment, Topology, ValidationError,
                       assign_energies, bottom_to_top_left_to_right,
                       hexagonal, jitter, neighbors, square_grid, validate)

__version__ = "1.0.0"
