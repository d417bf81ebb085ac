"""
Command-line surface: eval, estimate, verify, export-ball and cache
"""
