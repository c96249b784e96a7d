"""Indexed categories, the Grothendieck construction and descent"""
