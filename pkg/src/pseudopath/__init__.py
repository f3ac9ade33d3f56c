"""Pseudo-differential path integrals: kernels, projective systems and oscillatory integrals."""
