"""Linear stability of compressible channel flow near the lower branch."""
