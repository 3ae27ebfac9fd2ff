"""
Key rate against fibre and users
================================

Singles from every other channel land on the same detectors. They saturate
the detectors and feed accidental coincidences, which add errors. The rate
model shows where the key runs out.
"""

from fsqss import linkbudget as lb

base = lb.RateParams()
r = lb.key_rate(base)
print(f"lab point: singles {r.singles:.0f}/s, C_true {r.true_coincidence_rate:.0f}/s, "
      f"R_acc {r.accidental_rate:.2f}/s, QBER {100 * r.qber:.2f}%, key {r.key_rate:.0f} bit/s")

# Symmetric fibre on both arms.
print("\n  L km   QBER %   key bit/s")
for L, rep in zip(range(0, 91, 10), lb.sweep_distance(base, range(0, 91, 10))):
    print(f"  {L:4d}   {100 * rep.qber:6.2f}   {rep.key_rate:9.2f}")

# More users on the same detector: more uncorrelated singles.
print("\n  users  QBER %   key bit/s")
for n, rep in zip(range(2, 16), lb.sweep_users(base, range(2, 16))):
    print(f"  {n:5d}   {100 * rep.qber:6.2f}   {rep.key_rate:9.2f}")
print(f"largest network with positive key: {lb.max_users_positive_key(base, range(2, 40))} users")

# Two upgrades: 98 % visibility, and 7 dB less loss per photon.
for label, params in [
    ("98% visibility", lb.improved_visibility(base, 0.98)),
    ("7 dB less loss", lb.improved_heralding(base, 7.0)),
    ("both", lb.improved_heralding(lb.improved_visibility(base, 0.98), 7.0)),
]:
    print(f"{label:15s} x{lb.key_rate(params).key_rate / r.key_rate:6.1f}")

# 7 dB per photon is the same as 35 km of fibre.
shifted = lb.key_rate(lb.improved_heralding(base, 7.0).at_distance(65)).key_rate
print(f"\n7 dB better at 65 km: {shifted:.1f} bit/s; baseline at 30 km: {lb.sweep_distance(base, [30])[0].key_rate:.1f} bit/s")
