# Wigner semi-spectral solver
