"""egqft: symbolic + numeric workbench for causal perturbation theory.

Layers: exact field algebra (symbolic_fields), model definitions
(model_registry), power counting (power_counting), Wick/pairing
combinatorics (wick_pairing), two-point numerics (propagators_kinematics),
dispersion splitting (causal_splitting), adiabatic limits
(adiabatic_limits), and the CLI (cli).
"""

__version__ = "0.1.0"

from .exact import QRat
from .symbolic_fields import (
    FieldTable,
    Generator,
    Polynomial,
    QuantumNumbers,
    SuperQuadriIndex,
    adjoint,
    canonical_dim,
    derive,
    permutation_sign,
    subpolynomials,
)
from .model_registry import ModelSpec, ModelVerdict, builtin, parse_model_spec, validate
from .power_counting import (
    VANISHING_SECTOR,
    IrIndex,
    SList,
    classify,
    der,
    ext,
    ir_index_product,
    ir_index_split,
    omega_general,
    omega_massless,
    sd_bound,
)
from .wick_pairing import (
    OpProductExpansion,
    PairingTerm,
    WickTerm,
    complete_pairings,
    expand_aT,
    expand_adv,
    expand_dif,
    expand_dif_commutator,
    expand_ret,
    isserlis_oracle,
    momentum_support_vanishes,
    wick_expand,
)
from .propagators_kinematics import (
    MassShellMeasure,
    TwoPointKey,
    feynman_propagator,
    gamma_trace,
    riesz_check,
    riesz_s,
    two_body_phase_space,
    two_point,
)
from .causal_splitting import (
    FreedomBasis,
    SelfEnergy,
    SpectralDensity,
    bubble_density,
    central_normalize,
    dispersion_eval,
    freedom_basis,
    scaling_degree_estimate,
)
from .adiabatic_limits import (
    LimitReport,
    ScaledTestFamily,
    SplittingTheta,
    appendix_c_demo,
    cone_contains,
    gamma_cone_member,
    gl_vs_eg_second_order,
    lemma51_check,
    lojasiewicz_value,
    theta_eval,
)
