"""
Tests for the bolic metric toolkit
"""
