"""Kawasaki hopping dynamics, its Vlasov limit, and generating-functional checks."""
__version__ = "0.1.0"
