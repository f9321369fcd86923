"""Bundled QF_BV solver: SMT-LIB2 front end, bit-blasting, CDCL SAT.

Runs as the ``minicpa-solve`` console script.  The verifier talks to it over
stdin/stdout exactly like it would to any external SMT-LIB2 solver, so a real
solver can be substituted via the ``solver.command`` configuration key.
"""
