"""Schreier graphs, permutation wreath products, and their walk/profile
machinery: dihedral lines and rays, bubble graphs, cyclic Neumann-Segal
graphs, inverted orbits, local embeddings, isoperimetric profiles,
effective resistance, and the closed-form asymptotic envelopes."""

from .families import build_graph, diameter, lazy_action, region
from .graphs import FiniteSchreierGraph, GeneratorSet, LazyAction, Region, ball
from .words import Word, OmegaSpec, act_word, enumerate_omega, in_omega, \
    inverted_orbit, orbit_lemma_check
from .treeauto import word_automorphism, dinfty_generators, ns_generators, \
    activity, section_at, rigid_stabilizer_witness, ns_ball_witness, \
    bubble_distinct_words
from .wreath import ResourceRefusal, make_measure, simulate_left_walk, \
    return_probability_mc, return_probability_exact, controls_inverted_check
from .profiles import profile_exact, profile_candidate, cheeger_check, \
    harper_check, lattice_box_check, lambda_dirichlet, ns_mirror_candidate, \
    ns_mirror_profile
from .resistance import effective_resistance, xi, fh_rayleigh_closed, \
    fh_bruteforce, AdmissibleFunction, admissible_from_h, bubble_tent_F, \
    ns_resistance_measured
from .embeddings import theta_map, omega_hom_check, omega_image_closure, \
    component_pair, theta_isomorphism_check, assemble_phi, \
    dinfty_worked_example
from .asymptotics import EnvelopeSpec, closed_forms, compare, \
    envelope_order_check, exponents, predicted

__all__ = [
    "build_graph", "diameter", "lazy_action", "region",
    "FiniteSchreierGraph", "GeneratorSet", "LazyAction", "Region", "ball",
    "Word", "OmegaSpec", "act_word", "enumerate_omega", "in_omega",
    "inverted_orbit", "orbit_lemma_check",
    "word_automorphism", "dinfty_generators", "ns_generators", "activity",
    "section_at", "rigid_stabilizer_witness", "ns_ball_witness",
    "bubble_distinct_words",
    "ResourceRefusal", "make_measure", "simulate_left_walk",
    "return_probability_mc", "return_probability_exact",
    "controls_inverted_check",
    "profile_exact", "profile_candidate", "cheeger_check", "harper_check",
    "lattice_box_check", "lambda_dirichlet", "ns_mirror_candidate",
    "ns_mirror_profile",
    "effective_resistance", "xi", "fh_rayleigh_closed", "fh_bruteforce",
    "AdmissibleFunction", "admissible_from_h", "bubble_tent_F",
    "ns_resistance_measured",
    "theta_map", "omega_hom_check", "omega_image_closure", "component_pair",
    "theta_isomorphism_check", "assemble_phi", "dinfty_worked_example",
    "EnvelopeSpec", "closed_forms", "compare", "envelope_order_check",
    "exponents", "predicted",
]
