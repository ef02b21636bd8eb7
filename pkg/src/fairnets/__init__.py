"""Extract Keras network architectures from source code and publish them as a FAIR knowledge graph."""

__version__ = "0.1.0"

# grammar version used to parse analyzed source files
SUBJECT_GRAMMAR = (3, 10)
