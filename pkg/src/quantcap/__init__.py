"""Capacity of discrete-time channels with uniform output quantization.

Submodules: quantizer, info, capacity, qerror, ihara, cli.
"""
