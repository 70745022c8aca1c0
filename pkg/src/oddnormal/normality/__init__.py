"""Weyl sums, even-base non-normality certificates and DEL sums."""
