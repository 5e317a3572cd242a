"""Near-field integrated sensing and communication beamforming.

Modules
-------
geometry   planar array construction and Rayleigh distance
channel    near-field and far-field channel vectors, round-trip echoes
metrics    beampattern gain, cross-correlation, SINR and rate helpers
optimizer  max-min beampattern SDP, rank-one recovery, constraint audit
signalsim  transmit blocks and noisy echoes
capon      Capon spectrum over a yz grid and peak picking
cli        ``nfisac`` command-line entry point
"""

__version__ = "0.1.0"
