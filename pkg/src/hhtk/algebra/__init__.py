"""
Exact symbolic kernel: Laurent expressions, the expression grammar, the
sl(2,R) + h3 Poisson algebra and the lift of canonical pairs into it.
"""
