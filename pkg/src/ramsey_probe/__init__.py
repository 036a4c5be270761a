"""Probe-qubit resonance simulation for two-colour Ramsey numbers."""

__version__ = "0.1.0"

from .decision import (DecisionConfig, Verdict, classify_trace, decide_n, ramsey_search,
                       readout_ground_states, scan_ground_energy)
from .dynamics import (DynamicsTrace, ModelParams, apply_H, evolve, fwht, init_state,
                       survival_probability, trace_dynamics)
from .graphs import (CountTriple, GraphCode, bound_v, complement, count_cliques,
                     count_independent, edge_index, energy_h)
from .models import (multilevel_trace, nonres_probability, readout_time,
                     res_probability_perturbative, three_level_trace)
from .spectrum import (DiagonalTable, Spectrum, build_diagonal, classical_decide,
                       extract_levels, load_table, lower_bound_start, save_table)
