"""Morse-Novikov counting, Witten-Laplacian spectra and torsion at desk scale."""
