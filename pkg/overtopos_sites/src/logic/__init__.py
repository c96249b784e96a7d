"""Coherent logic, finite models and fragment sites"""
