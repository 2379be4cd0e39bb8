"""qbrush: variational quantum brushes for image effects.

Two effects are provided on top of an exact small-register simulator:

* Steerable -- drives the SVD color encoding of one image region into
  another's by training neural-network control amplitudes for a bilinear
  quantum system (Heisenberg drift + single-qubit Pauli controls).
* Chemical -- replays the parameter trajectory of a VQE run on the H2
  molecule along a brush stroke, evolving hue/lightness qubit encodings.
"""

__version__ = "0.1.0"
