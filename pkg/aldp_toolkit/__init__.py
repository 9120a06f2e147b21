"""ALDP Toolkit - approximate local differential privacy mechanisms and benchmarks"""
__version__ = "1.0.0"
