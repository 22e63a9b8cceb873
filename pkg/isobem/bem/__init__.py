from .kernels import kernel, layer_kernel
from .quadrature import QuadConfig, common_edge_rule, common_vertex_rule, identical_rule
from .panels import ContactKind, Panel, PanelTopology
from .assembly import assemble, assemble_rhs, near_pairs, panel_pair_integral
from .potentials import (
    LayerPotential,
    Targets,
    double_layer_potential,
    eval_double_layer,
    eval_single_layer,
    single_layer_potential,
)
from .system import Density, GalerkinSystem, build_system, solve
from .problems import ShiftedFundamentalSolution, TraceRhs, constant_rhs, rhs_factory
