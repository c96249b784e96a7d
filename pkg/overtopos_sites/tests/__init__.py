"""Tests for the site checker"""
