"""Limited-feedback network MIMO simulation library.

Per-cell product codebook quantization of downlink channel directions,
restricted (sub-codebook) index search, block-diagonalization precoding from
quantized channel state, and Monte Carlo verification of the associated
distortion / throughput scaling laws.
"""

__version__ = "0.1.0"
