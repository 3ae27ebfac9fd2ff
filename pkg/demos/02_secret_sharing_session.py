"""
A secret-sharing session
========================

Charlie picks a state, Alice and Bob each pick X or Y and measure. After the
public announcement only four basis combinations are kept, and in those the
parity of Alice's and Bob's outcomes reveals Charlie's private bit.
"""

import math

import numpy as np

from fsqss import linkbudget, protocol

rng = np.random.default_rng(7)

# A few rounds by hand.
print("round  C       c   A a   B b   kept  recovered")
for i in range(8):
    rnd = protocol.dealer_choose(rng, round_id=i)
    alice, bob = protocol.measure_round(rnd, mzi_phase=0.0, v_eff=1.0, p_accidental=0.0, rng=rng)
    triple = protocol.sift(rnd, alice, bob)
    secret = protocol.reconstruct_secret(triple) if triple else None
    print(
        f"{i:5d}  {rnd.public_c.value:6s} {rnd.private_c:+d}   {alice.basis.name} {alice.outcome:+d}  "
        f"{bob.basis.name} {bob.outcome:+d}   {'yes' if triple else 'no ':3s}   {secret if secret is not None else '-'}"
    )

# The vectorised engine handles long sessions. Without noise every kept
# round recovers the dealer's bit.
clean = protocol.simulate_session(100_000, rng)
kept = clean.kept
print(f"\nclean session: {kept.mean():.3f} sifted, errors {int(clean.error.sum())}")

# Visibility loss and accidental coincidences at the lab operating point.
report = linkbudget.key_rate()
p_acc = linkbudget.accidental_probability(report)
stats = protocol.simulate_stats_parallel(10**6, seed=7, v_eff=1 - 2 * 0.053, p_accidental=p_acc)
print(f"\nlab point, p_accidental = {p_acc:.2e}")
for combo in protocol.VALID_COMBOS:
    print(f"  {protocol.combo_name(combo):9s} eps = {stats.epsilon[combo]:+.4f}  QBER = {100 * stats.qber[combo]:.2f}%")
print(f"  abort: {protocol.abort_check(stats)}   (analytic QBER {100 * report.qber:.2f}%)")

# An unstabilized interferometer phase scrambles the bit. At pi/2 the phi
# combos carry nothing and the session aborts.
drifted = protocol.simulate_session(100_000, rng, mzi_phase=math.pi / 2).stats()
print(f"\nMZI phase pi/2: mean QBER {100 * drifted.mean_qber:.1f}%, abort = {protocol.abort_check(drifted)}")
