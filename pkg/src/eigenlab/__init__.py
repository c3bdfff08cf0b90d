"""eigenlab: eigenfunction growth vs phase-space concentration, numerically.

Closed-form eigenfunction families on model surfaces, coherent-state lifts
as numerical defect measures, geodesic flow-outs with box-counting
Hausdorff proxies, and the sup-norm inequalities tying them together.
"""

__version__ = "0.1.0"
