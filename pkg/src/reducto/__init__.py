"""reducto: a slice-accelerated program-repair workbench for SLANG.

The pipeline reduces a buggy program by observation-based line deletion,
reduces its test suite against the slice, localizes the fault spectrally,
generates and validates template patches, and measures each reduction's
effect across an eight-point configuration lattice.
"""

__version__ = "0.1.0"
