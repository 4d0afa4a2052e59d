"""Simulated RMS resolution against the analytic budget for a sweep of clock jitters."""
import argparse

from tdlsim.harness import calibrate_system, system_from_budget, time_interval_run
from tdlsim.synthetic import system_histogram
from tdlsim.uncertainty import JitterBudget, budget

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=20_000)
    args = ap.parse_args()
    print("launcher sigma_clk  simulated  analytic  rel")
    for launcher, eq in ((True, 0.86), (False, 1.84)):
        for clk in (0.0, 2.0, 4.42):
            b = JitterBudget(clk, 0.16, 1.45, 480, eq, has_launcher=launcher)
            sys_ = system_from_budget(b)
            sys_ = calibrate_system(sys_, system_histogram(sys_))
            sim = time_interval_run(sys_, start=20.0, reps=args.reps, seed=1).rms[0]
            model = budget(b).sigma_system
            print(f"{launcher!s:8s} {clk:9.2f} {sim:10.3f} {model:9.3f} {sim / model - 1:+.1%}")
