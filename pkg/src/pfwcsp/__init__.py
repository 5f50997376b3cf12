"""pfwcsp: predicate constraint solving with well-founded and functional
predicate variables, plus relational-verification encoders."""

__version__ = "0.1.0"
