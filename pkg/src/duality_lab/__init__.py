"""Finite-model workbench for relational dualities between frames and powerset algebras."""

from __future__ import annotations

from .duality import (
    SurjectivityWitness,
    j_embed,
    surjectivity_witness,
    verify_full_faithful,
    verify_functor_laws,
    verify_square_tarski,
    verify_square_thomason,
)
from .dsl import Workspace, parse_workspace, serialize_workspace
from .errors import *  # noqa: F401,F403
from .fixtures import buffer_fixture, buffer_quotient
from .lattice import (
    AdjointTriple,
    Caba,
    CabaElement,
    Carrier,
    FiniteFunction,
    adjoint_triple,
    boolean_ops,
    validate_caba,
)
from .logic import (
    CheckReport,
    Derivation,
    Entailment,
    Judgment,
    Models,
    Theory,
    check_derivation,
    eval_formula,
    holds_entailment,
    holds_judgment,
)
from .modal import (
    Cabao,
    Frame,
    check_simulatory,
    classify_frame_map,
    classify_sim,
    graph,
    greatest_fixpoint,
    modal_operators,
)
from .relations import (
    CabaRel,
    FinRel,
    atom_base,
    check_directionally_atomic,
    compose,
    compose_caba,
    dagger,
    lower_lift,
    upper_lift,
    variant,
)

__version__ = "0.1.0"
