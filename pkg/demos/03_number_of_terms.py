"""Choosing the number of Kronecker terms R.

More terms mean a richer model and more parameters to estimate from noisy
data. At high SNR the extra terms pay off; at low SNR they mostly fit noise.
"""

from salsa.experiments import ExperimentConfig, run_sweep
from salsa.kron_factor import FactorShape

cfg = ExperimentConfig(
    estimators=("salsa",),
    snr_db=(-10.0, 0.0, 10.0, 20.0, 30.0),
    t_bs=(12,),
    r=(1, 2, 4, 8),
    shapes=(FactorShape(8, 8, 64, 1),),
    trials=20,
    master_seed=2,
)
table = run_sweep(cfg)

print("SALSA NMSE at T_BS = 12, shape 8x8x64x1")
print(f"{'SNR':>6} " + "".join(f"{'R=' + str(r):>10}" for r in cfg.r))
for snr in cfg.snr_db:
    vals = [table.select(r=r, snr_db=snr)[0].nmse for r in cfg.r]
    print(f"{snr:>6g} " + "".join(f"{v:>10.3e}" for v in vals))
