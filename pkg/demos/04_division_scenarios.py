"""The 49 ways to split a 64 x 64 channel, and which ones ALS can use.

A division (i1, i2, j1, j2) is usable with L = 4 * T_BS measurements only
if i1 <= L * j2 and i2 <= L * j1. These two counts are necessary but not
sufficient: when i1 = 64 or i2 = 64 one factor spans every antenna and a
wide combiner cannot pin it down.
"""

from salsa.estimators import check_identifiability
from salsa.experiments import enumerate_divisions

n_rf = 4
print(f"{'#':>3} {'shape':>10} {'max R':>6} {'min T_BS':>9}  usable at T_BS = 8 / 12 / 16")
for n, shape in enumerate(enumerate_divisions(64, 64), start=1):
    need = check_identifiability(shape, n_rf, n_rf=n_rf).min_t_bs
    flags = ["yes" if check_identifiability(shape, n_rf * t).ok else "no" for t in (8, 12, 16)]
    print(f"{n:>3} {str(shape):>10} {shape.max_terms:>6} {need:>9}  {' / '.join(flags)}")
