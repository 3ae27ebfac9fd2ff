"""
Sharing one source across many users
====================================

Energy conservation pairs frequency bins symmetrically about the degeneracy
frequency. Each bin pair can carry one independent session, so the source
bandwidth and the grid spacing fix how many users can be fully connected.
"""

from fsqss import grid

for spacing in (0.1, 0.2):
    g = grid.GridSpec(spacing=spacing)
    pairs = grid.available_pair_count(g)
    print(f"{int(spacing * 1000)} GHz grid: {pairs} pairs in {g.band_thz:.2f} THz -> "
          f"{grid.max_fully_connected_users(pairs)} users")

# The pairs used in the lab: j = 10 carries the stabilizer monitor, and
# j = 11.5 sits on ITU channels 60 and 13.
g200 = grid.GridSpec(spacing=0.2)
for j in (0, 10, 11.5):
    p = grid.channel_pair_for_index(g200, j)
    print(f"j={j:<5} signal {p.signal_center:.2f} THz (ch {p.signal_itu}), "
          f"idler {p.idler_center:.2f} THz (ch {p.idler_itu})")

# A fully connected plan for five users, keeping the monitor pair free.
plan = grid.allocate_fully_connected(g200, 5)
print()
print(plan.to_yaml())

# One user too many for the band.
try:
    grid.allocate_fully_connected(g200, 8)
except grid.InsufficientChannelsError as exc:
    print(f"8 users: {exc}")
