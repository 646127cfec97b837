"""Multiview Hessian-regularized semi-supervised learning"""

__version__ = "1.0.0"
__author__ = "mhrlearn developers"
