"""cartcube: a finite computational kernel for Cartesian cubical sets.

Core layers: the truncated cube site (cube), a general finite-presheaf
engine (presheaf), the interval kit and root functor (interval), the
cofibration and fibration weak factorization systems (cofib, fib),
homotopy invariants (homotopy), nerves and small universes (nerve), and
a check-running CLI (cli) with JSON reports and replayable certificates.
"""

__version__ = "0.1.0"
