"""Workbench for finite Maltsev algebras.

Core layers:

- :mod:`maltsev.algebra` -- operation tables, circuits, polynomial clones
- :mod:`maltsev.congruence` -- congruence generation, lattices, quotients
- :mod:`maltsev.commutator` -- higher commutators, centralizers, Fitting series
- :mod:`maltsev.wreath` -- wreath-product decompositions and loop arithmetic
- :mod:`maltsev.clonoid` -- two-group polynomial clonoids and conjunction families
- :mod:`maltsev.reductions` -- coloring/3-SAT to circuit-satisfiability instances
- :mod:`maltsev.catalog` -- bundled example algebras
- :mod:`maltsev.cli` -- the ``maltsev`` command line front end
"""

__version__ = "0.1.0"

from .algebra import (
    Circuit,
    FiniteAlgebra,
    KAryFunction,
    OperationTable,
    circuit_to_function,
    eval_circuit,
    find_maltsev,
    generate_polynomial_clone,
    verify_maltsev,
)
from .congruence import (
    Congruence,
    CongruenceLattice,
    cg,
    congruence_lattice,
    join,
    meet,
    quotient,
)
from .commutator import (
    absorbing_at,
    central_series,
    check_centralizes,
    commutator_class_generators,
    derived_series,
    fitting,
    higher_commutator,
    is_supernilpotent,
    supernilpotent_series,
)
from .wreath import (
    AffineLevel,
    WreathPresentation,
    build_wreath,
    decompose_central,
    decompose_series,
    dependence_matrix,
    elementary_refinement,
    loop_ops,
    r_prime,
    u_power,
)
from .clonoid import (
    ClonoidContext,
    ConjunctionFamily,
    Hyperplane,
    build_tn,
    hyperplanes,
    interpolate,
    normalize_unary,
)
from .reductions import (
    AbsorbingTower,
    Cnf,
    CsatInstance,
    Graph,
    brute_ceqv,
    brute_csat,
    build_absorbing_tower,
    build_h,
    ceqv_companion,
    color_to_csat,
    prepare_reduction,
    sat3_to_csat,
    size_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
