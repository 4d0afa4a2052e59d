"""Analytic precision budget for the launcher and no-launcher configurations."""
import json

from tdlsim.uncertainty import JitterBudget, budget

COMMON = dict(sigma_clk=4.42, sigma_cy=0.16, sigma_lut=1.45, n_elements=480)

rows = {
    "launcher, sigma_eq=0.86": JitterBudget(**COMMON, sigma_eq=0.86),
    "no launcher, sigma_eq=1.84": JitterBudget(**COMMON, sigma_eq=1.84, has_launcher=False),
}

if __name__ == "__main__":
    for name, b in rows.items():
        print(name)
        print(json.dumps(budget(b).to_dict(), indent=2))
