"""Two momentum steps by hand, then the derived pair on a small quadratic."""

import numpy as np

from golden_sgd import optim

params, grads = {"w": np.array([1.0])}, {"w": np.array([0.5])}
state = optim.SgdState.for_params(params, eta=0.016, alpha=0.874)
for t in (1, 2):
    optim.sgd_step(params, grads, state)
    print(f"step {t}: delta={state.velocity['w'][0]:+.6f}  w={params['w'][0]:.6f}")

# f(w) = 0.5 * w' A w with an ill-conditioned A
A = np.diag([1.0, 25.0])
for name, eta, momentum in [("derived", 0.016, 0.874), ("plain", 0.016, 0.0), ("adam", 0.016, 0.9)]:
    params = {"w": np.array([1.0, 1.0])}
    state = optim.make_optimizer(name if name == "adam" else "sgd", params, eta, momentum)
    for _ in range(200):
        optim.step(state, params, {"w": A @ params["w"]})
    w = params["w"]
    print(f"{name:8s} after 200 steps  f={0.5 * w @ A @ w:.3e}")
