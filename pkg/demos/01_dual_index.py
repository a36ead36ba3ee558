import math

import numpy as np

from dmed import EmpiricalDist, dinf, solve_nu_star
from dmed.divergence import dinf_primal_oracle, lagrangian
from dmed.models import Bernoulli, ShiftedNegExponential

# D_inf(F, mu) is the smallest KL divergence from F to any distribution on
# (-inf, 1] whose mean exceeds mu. It looks like an infinite-dimensional
# problem, but it collapses to a one-dimensional concave maximization:
#
#     D_inf(F, mu) = max over nu in [0, 1/(1-mu)] of E_F[log(1 - (X - mu) nu)]
#
# Start with two equally likely atoms at 0 and 1 and a level of 0.75.
F = EmpiricalDist([0.0, 1.0])
mu = 0.75
for nu in np.linspace(0.0, 1.0 / (1.0 - mu), 9):
    print(f"nu = {nu:5.2f}   L = {lagrangian(F, mu, nu): .6f}")

# The curve peaks strictly inside the interval; the solver finds the peak with
# a safeguarded Newton iteration.
sol = solve_nu_star(F, mu)
print("nu* =", sol.nu_star, " D_inf =", sol.dinf, " boundary:", sol.at_boundary)

# For two atoms at 0 and 1 this is just the binary divergence kl(0.5, 0.75).
print("kl(0.5, 0.75) =", 0.5 * math.log(0.5 / 0.75) + 0.5 * math.log(0.5 / 0.25))

# The primal side, solved as a small conic program, lands on the same number.
print("primal oracle  =", dinf_primal_oracle(F, mu))

# When all the mass sits well below mu the optimum slides to the end of the
# interval. A point mass at 0 with mu = 0.5 gives log 2 exactly.
print(solve_nu_star(EmpiricalDist([0.0]), 0.5))

# If the sample mean is already above mu nothing needs to move: D_inf = 0.
print("mean above mu:", dinf(EmpiricalDist([0.8, 1.0]), 0.5))

# Rewards need not be bounded below. Here is a few thousand draws of
# X = 1 - Exp(2), whose mean is 0.5, against its exact population value.
rng = np.random.default_rng(0)
model = ShiftedNegExponential(2.0)
x = model.sample(rng, 5000)
print("empirical D_inf(F_t, 0.7):", dinf(EmpiricalDist(x), 0.7))
print("population D_inf(F, 0.7): ", dinf(model.view(), 0.7))

# Bernoulli arms reduce to the classical divergence.
print("Bernoulli(0.3) at 0.6:", dinf(Bernoulli(0.3).view(), 0.6))
