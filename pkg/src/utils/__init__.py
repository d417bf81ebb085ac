"""
Settings, logging, word and group-spec parsing, sampling and report rendering
"""
