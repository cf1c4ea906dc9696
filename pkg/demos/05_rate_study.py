"""How fast does the forcing vanish as the band thins?

The level surfaces move with v = -H + d_nu(phi): mean curvature flow plus
a forcing.  On a shrinking band around a large circle the forcing's sup
norm scales like eps and its spatial C^{1/2} seminorm like sqrt(eps); this
script measures both across an eps sweep and fits the rates.  Outputs land
in runs/demo_sweep/<config-hash>/ as sweep.csv and fits.json.
"""

from mcflab import SweepConfig, run_sweep

cfg = SweepConfig(
    eps_list=(0.1, 0.05, 0.025, 0.0125),
    r0=4.0,
    n=2,
    T=1.0,
    alpha=0.5,
    M=512,
    dt=1e-3,
    jobs=2,
    output_dir="runs/demo_sweep",
)
result = run_sweep(cfg)

print(f"{'eps':>8} {'eta':>6} {'sup|grad phi|':>14} {'[d_nu phi]_1/2':>15} "
      f"{'radius err':>11} {'runtime':>8}")
for r in result.records:
    print(f"{r.eps:8.4f} {r.eta:6.3f} {r.sup_grad_phi:14.4e} "
          f"{r.holder_dnu_phi:15.4e} {r.radius_err_max:11.2e} {r.runtime_s:7.1f}s")

print("\nfitted rates (log norm vs log eps):")
for name, fit in result.fits.items():
    print(f"  {name:>16}: slope {fit.slope:+.4f}  r^2 {fit.r_squared:.5f}")
print("\nThe sup norm bound scales like eps (slope ~ 1) and the Holder")
print("seminorm like eps^(1-alpha) with alpha = 1/2 (slope ~ 0.5); the")
print("one-sided acceptance windows are slope >= 0.8 and >= 0.4.")
print("run dir:", result.run_dir)
