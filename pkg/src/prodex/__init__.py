"""Knowledge-driven executive: forward-chaining rule engine, managed
environments with plugins, an in-process typed message bus, PDDL planning
and partial-order plan dispatch to heterogeneous workers."""

__version__ = "0.1.0"
