"""Holonomies of flat ℤ-graded superconnections on simplices.

Iterated integrals along Igusa's path families turn Maurer-Cartan forms on
simplices into representations up to homotopy of finite simplicial sets.
The subpackages are layered:

``graded_core``      graded vector spaces, graded maps, Koszul signs
``simplex_geom``     simplices, cubes, Igusa's maps and path families
``poly_forms``       polynomial forms with values in graded endomorphisms
``chen_engine``      iterated integrals, ψ and ψ̄, holonomy cochains
``holonomy``         object and morphism-chain holonomies, scene integration
``simplicial_reps``  simplicial sets, cochains, reps up to homotopy, cohomology
``ainfty_core``      finite A∞ algebras and morphisms, twisting, tensoring
``oracles``          independent reference computations
``cli``              scenario files and the ``artifact`` command
"""

from .chen_engine import ChenConfig, holonomy_series
from .graded_core import GradedMap, GradedVectorSpace
from .holonomy import FormValuedComplex, MorphismChainDatum, hol_morphism_chain, hol_object, integrate_rep
from .poly_forms import GaugeElement, PolyForm, SuperconnectionMC
from .simplicial_reps import FiniteSimplicialSet, SimplicialRep, structure_residual, twisted_cohomology

__version__ = "0.1.0"

__all__ = [
    "ChenConfig",
    "holonomy_series",
    "GradedMap",
    "GradedVectorSpace",
    "FormValuedComplex",
    "MorphismChainDatum",
    "hol_morphism_chain",
    "hol_object",
    "integrate_rep",
    "GaugeElement",
    "PolyForm",
    "SuperconnectionMC",
    "FiniteSimplicialSet",
    "SimplicialRep",
    "structure_residual",
    "twisted_cohomology",
]
