"""Finite relational structures, Fraisse classes and their lazy limits."""

__version__ = "0.1.0"

from .structures import FiniteStructure, Signature, StructureError  # noqa: E402
from .classes import get_class  # noqa: E402
from .limits import LazyLimit, build, verify_extension_property  # noqa: E402
from .independence import audit_axioms, get_predicate  # noqa: E402

__all__ = ["FiniteStructure", "Signature", "StructureError", "get_class", "LazyLimit", "build",
           "verify_extension_property", "audit_axioms", "get_predicate", "__version__"]
