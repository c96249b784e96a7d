"""Finite categories, limits and functor enumeration"""
