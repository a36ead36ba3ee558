import math

from dmed import Bernoulli, optimize_bound_params, regret_bound
from dmed.bounds import InfeasibleParameterError
from dmed.models import ShiftedNegExponential

# The finite-time guarantee for DMED has the shape
#
#     E[T_i(n)] <= log n / ((1-eps)(1-r) D_inf(F_i, mu*)) + C(eps, delta, r)
#
# for a suboptimal arm i. Arms are 0-indexed here.
truth = [Bernoulli(0.7), Bernoulli(0.5)]
rep = regret_bound(truth, 1, 100_000, epsilon=0.5, delta=0.01, r=0.1)
print("D_inf(F_2, mu*) =", rep.dinf_true)
print("xi              =", rep.xi)
print("log coefficient =", rep.log_coeff)
for name, value in rep.components.items():
    print(f"  {name:28s} {value}")
print("total at n = 1e5:", rep.total)

# The constant is large: the bound is loose in absolute terms even though its
# leading log n coefficient is close to the asymptotically optimal one when
# eps is small. Searching over (eps, delta) trades the two parts off.
eps, delta, best = optimize_bound_params(truth, 1, 100_000, 0.1)
print(f"optimized: eps = {eps:.2f}, delta = {delta:.4g}, total = {best.total:.6g}")

# xi must be positive; a tiny eps with a wide delta breaks that.
try:
    regret_bound(truth, 1, 100_000, epsilon=0.01, delta=0.1, r=0.1)
except InfeasibleParameterError as exc:
    print("infeasible:", exc)

# The same calculation works for a reward that is unbounded below.
semi = [Bernoulli(0.6), ShiftedNegExponential(2.0)]
eps, delta, rep = optimize_bound_params(semi, 1, 10_000, 0.1)
print(f"semi-bounded arm: log coefficient {rep.log_coeff:.2f}, bound {rep.total:.4g} at n = 1e4")
print("compare log n =", math.log(10_000))
