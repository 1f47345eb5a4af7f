"""Where 0.874 and 0.016 come from.

The inner equation p = (1 - p)/p has the golden ratio as its only root in
(0, 1). Scaling it by sqrt(2) gives the momentum weight, and the squared gap
to one gives the learning rate.
"""

from golden_sgd.bayes_core import (
    fixed_point_base, golden_ratio, inner_residual, log_base, momentum_alpha,
    learning_eta, pythagorean_chain_check, solve_inner,
)

phi = golden_ratio()
print(f"closed form golden ratio   {phi:.15f}")
print(f"bisection on p^2 + p - 1   {solve_inner():.15f}")
print(f"inner residual at phi      {inner_residual(phi):+.1e}")

for p in (0.5, phi, 0.8):
    rep = pythagorean_chain_check(p)
    print(f"p={p:.4f}: (1-p)/p={rep.quotient_arg:.6f}  1-p^2={rep.square_arg:.6f}  coincide={rep.coincide}")

lam = fixed_point_base(phi)
print(f"base with log(phi) = phi   {float(lam):.6f}  check {log_base(lam, phi):.15f}")

print(f"momentum alpha = sqrt(2) * phi   {momentum_alpha():.15f}")
print(f"learning rate  = (1 - alpha)^2   {learning_eta():.15f}")
