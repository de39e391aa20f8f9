# Full-duplex ambient backscatter OFDM resource allocation
__version__ = "1.0.0"
