"""Presheaves, the sheaf condition and cartesian functors"""
