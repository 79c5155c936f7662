"""A dominated 2-cycle on which the backward F-block and the forward E-block differ.

Both logs of the cocycle satisfy the domination and mean hypotheses with
gamma^2 > lambda, yet the F-block holds at both indices and the E-block at
one, so the two blocks carry different mass for the periodic measure.
"""
import numpy as np

from pliss_lab.pliss import bi_pliss_bruteforce, bi_pliss_check

if __name__ == "__main__":
    e = np.array([-1.2, 0.3])
    u = np.array([-1.9, -0.4])
    log_gamma, log_lambda = -0.05, -1.5
    print("domination e_i + u_{i+1}:", e + np.roll(u, -1), "<=", log_lambda)
    print("means:", u.mean(), e.mean(), "< log gamma =", log_gamma)
    r = bi_pliss_check(e, u, log_gamma, log_lambda)
    pF, pE = bi_pliss_bruteforce(list(e), list(u), log_gamma, cap=6)
    print("P^F:", sorted(r.pF.as_set()), "brute:", sorted(pF.as_set()))
    print("P^E:", sorted(r.pE.as_set()), "brute:", sorted(pE.as_set()))
    print("equal:", r.equal)
