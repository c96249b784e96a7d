"""Source code for the site constructions"""
