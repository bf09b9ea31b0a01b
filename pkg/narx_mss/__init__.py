"""
narx_mss - Structure selection for polynomial NARX models with a binary hybrid
PSO-GSA search, t-test pruning and a complexity penalty, plus a FROLS baseline,
logistic NARX classification and a Monte-Carlo benchmark on simulated systems.
"""
__version__ = "0.1.0"
