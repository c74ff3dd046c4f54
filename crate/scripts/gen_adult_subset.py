"""Writes data/adult_subset.csv: 2,000 synthetic rows shaped like the Adult
census extract (7 attributes, income above or below $50,000).

The UCI file is not fetched; rows are drawn from a fixed latent logistic
model so the file is reproducible byte for byte. Run from the repo root:

    python3 scripts/gen_adult_subset.py
"""

import csv
import math
import random

ROWS = 2000
SEED = 20231016

MARITAL = [("Married", 0.47, 1.3), ("Never married", 0.32, -1.0),
           ("Divorced", 0.13, -0.5), ("Separated", 0.04, -0.7), ("Widowed", 0.04, -0.6)]
OCCUPATION = [("Manager", 0.13, 1.0), ("Skilled Specialty", 0.14, 0.9), ("Service", 0.11, -1.1),
              ("Sales", 0.12, 0.2), ("Clerical", 0.12, -0.4), ("Craft Repair", 0.13, -0.1),
              ("Transport", 0.08, -0.3), ("Farming Fishing", 0.04, -0.9), ("Other", 0.13, -0.6)]
# (level, typical years of education, effect)
EDUCATION = [("Primary School", 5, -1.0), ("Middle School", 8, -0.8), ("High School", 9, -0.3),
             ("Some College", 10, 0.0), ("Associate", 12, 0.2), ("Bachelors", 13, 0.7),
             ("Masters", 14, 1.0), ("Doctorate", 16, 1.3)]
EDU_WEIGHTS = [0.04, 0.06, 0.32, 0.22, 0.08, 0.18, 0.07, 0.03]


def pick(rng, table, weights=None):
    weights = weights or [row[1] for row in table]
    return rng.choices(table, weights=weights)[0]


def main():
    rng = random.Random(SEED)
    out = []
    for _ in range(ROWS):
        marital = pick(rng, MARITAL)
        occupation = pick(rng, OCCUPATION)
        education = pick(rng, EDUCATION, EDU_WEIGHTS)
        years = max(1, min(16, education[1] + rng.choice([-1, 0, 0, 0, 1])))
        age = max(17, min(90, int(round(rng.gauss(39, 13)))))
        gains = "Yes" if rng.random() < 0.09 else "No"
        if rng.random() < 0.55:
            hours = 40
        else:
            hours = max(1, min(99, int(round(rng.gauss(40, 12)))))
        z = (-1.9 + marital[2] + occupation[2] + education[2]
             + 0.25 * (years - 10) + 0.035 * (age - 38)
             + (1.8 if gains == "Yes" else 0.0) + 0.035 * (hours - 40))
        p = 1.0 / (1.0 + math.exp(-2.0 * z))
        income = "Higher than $50,000" if rng.random() < p else "Lower than $50,000"
        out.append([marital[0], years, occupation[0], age, gains, hours, education[0], income])

    with open("data/adult_subset.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["Marital status", "Years of education", "Occupation", "Age",
                    "Any capital gains", "Working hours per week", "Education", "Income"])
        w.writerows(out)


if __name__ == "__main__":
    main()
