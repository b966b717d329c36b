"""Numerical modules: Fock bases, symbols, quantization, Yang-Mills energy, dynamics, spectra."""
