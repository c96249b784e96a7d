"""Finite sites, antecedent topologies and points of over-toposes"""
