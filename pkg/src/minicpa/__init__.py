"""minicpa: a configurable software verifier for a mini-C subset.

The package is organized around configurable program analysis (CPA): a common
reached-set/waitlist engine (`minicpa.engine`) parameterized by abstract
domains (`minicpa.value`, `minicpa.intervals`, `minicpa.symexec`,
`minicpa.predicate`), plus bounded model checking and k-induction
(`minicpa.bmc`), verification witnesses (`minicpa.witness`) and test
generation (`minicpa.testgen`).  `minicpa.cli` ties everything together.
"""

__version__ = "0.1.0"
