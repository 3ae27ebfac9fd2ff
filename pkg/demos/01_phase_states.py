"""
Phase states and the visibility table
=====================================

The dealer hides one bit in the relative phase of a polarization-entangled
pair. Four phases form two mutually unbiased pairs of states; here we look at
their correlations and turn a table of measured visibilities into error rates.
"""

import math

import numpy as np

from fsqss import qstate
from fsqss.config import TABLE1_VISIBILITIES

X, Y, Z = qstate.MeasBasis.X, qstate.MeasBasis.Y, qstate.MeasBasis.Z

# The four encoding states and their phases.
for label in qstate.ALL_LABELS:
    print(f"{str(label):8s} theta = {qstate.phase_of(label) / math.pi:.1f} pi")

# Ideal correlations. The phi pair lives on XX and YY, the varphi pair on XY
# and YX. Z x Z does not see the phase at all.
print("\nideal correlations  XX    YY    XY    YX    ZZ")
for label in qstate.ALL_LABELS:
    theta = qstate.phase_of(label)
    row = [qstate.correlation_sign(theta, A, B) for A, B in [(X, X), (Y, Y), (X, Y), (Y, X), (Z, Z)]]
    print(f"{str(label):18s}" + "".join(f"{round(c):+5d} " for c in row))

# Sampled counts give noisy visibilities; with v_eff < 1 they shrink.
rng = np.random.default_rng(1)
probs = qstate.outcome_distribution(0.0, X, X, v_eff=0.9)
counts = qstate.CoincidenceCounts(*rng.multinomial(20_000, probs))
print(f"\nphi+ measured in XX with v_eff=0.9: V = {qstate.visibility(counts):.3f}")

# Measured visibilities from the lab, and what they imply.
vis = qstate.VisibilitySet(**TABLE1_VISIBILITIES["phi+"])
print(f"\nfidelity of phi+ from XX, YY, ZZ visibilities: {qstate.fidelity_from_visibilities(qstate.PHI_PLUS, vis):.3f}")

print("\ncombo      eps     QBER    r_inf")
for name, key, fam in [("XXphi", "v_xx", "phi"), ("YYphi", "v_yy", "phi"),
                       ("XYvarphi", "v_xy", "varphi"), ("YXvarphi", "v_yx", "varphi")]:
    eps = qstate.correlation_parameter(TABLE1_VISIBILITIES[fam + "+"][key], TABLE1_VISIBILITIES[fam + "-"][key])
    q = qstate.qber_from_epsilon(eps)
    print(f"{name:9s} {eps:+.3f}  {100 * q:5.2f}%  {qstate.key_fraction(q):.3f}")

# Above about 11 % QBER the asymptotic key fraction is gone.
print(f"\nkey fraction reaches zero at QBER = {qstate.KEY_FRACTION_ROOT:.4f}")
