from dmed import Bernoulli
from dmed.bounds import legendre, lower_dev_bound, upper_dev_bound
from dmed.divergence import dinf
from dmed.models import ShiftedNegExponential
from dmed.simulation import verify_lower_deviation, verify_upper_deviation

# Two tail bounds drive the regret analysis. The first says the empirical
# index rarely falls far below its true value:
#
#     P[D_inf(F_t, mu) <= D_inf(F, mu) - v] <= bound(t, v)
#
model, mu = Bernoulli(0.5), 0.75
print("true index:", dinf(model.view(), mu))
for t in (10, 50, 200):
    print(t, [round(lower_dev_bound(t, v, model.mean(), mu), 4) for v in (0.02, 0.05, 0.1)])

# Monte Carlo: draw many t-sample empirical distributions, compute each index
# with the batched solver and count how often the event happens.
for row in verify_lower_deviation(model, mu, [50], [0.02, 0.05, 0.1], 20_000, seed=0):
    print(f"t={row.t} v={row.threshold}: frequency {row.frequency:.4f}, bound {row.bound:.4f}, pass {row.passed}")

# The same for a reward that is unbounded below.
for row in verify_lower_deviation(ShiftedNegExponential(1.0), 0.5, [50], [0.05], 20_000, seed=1):
    print(f"1-Exp(1): frequency {row.frequency:.4f}, bound {row.bound:.4f}")

# The second bound controls how often an arm whose true mean is above mu
# looks bad: the empirical mean drops below mu and the index is at least u.
# Its rate is the Legendre transform of the log-MGF at mu.
model, mu = Bernoulli(0.7), 0.5
rate = legendre(model, mu)
print("Lambda*(0.5) =", rate.value, "at lambda =", rate.lambda_star)
print("bound at t=50, u=0.2:", upper_dev_bound(50, 0.2, rate.value))
for row in verify_upper_deviation(model, mu, [10, 50], [0.05, 0.2], 20_000, seed=2):
    print(f"t={row.t} u={row.threshold}: frequency {row.frequency:.4f}, bound {row.bound:.4g}")
