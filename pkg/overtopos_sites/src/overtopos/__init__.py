"""Antecedent sites and their points"""
