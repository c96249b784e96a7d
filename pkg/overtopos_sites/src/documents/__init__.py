"""Workspace documents, commands and reports"""
