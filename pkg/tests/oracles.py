"""Independent high-precision oracles; values below were produced by them and frozen."""

from mpmath import log, mp, mpf, sqrt

mp.dps = 40


def h(t):
    t = mpf(t)
    if t == 0 or t == 1:
        return mpf(0)
    return -t * log(t, 2) - (1 - t) * log(1 - t, 2)


def theta_tilde(theta):
    return mpf(1) / 2 - sqrt(1 - 2 * mpf(theta)) / 2


def wyner_ci(theta):
    return 1 + h(theta) - 2 * h(theta_tilde(theta))


def gap(theta, tau):
    theta, tau = mpf(theta), mpf(tau)
    return h(theta) + h(mpf(1) / 2 - (mpf(1) / 2 - tau) * sqrt(1 - 2 * theta)) - h(theta_tilde(theta)) - h(tau + (1 - 2 * tau) * theta)


# frozen from the functions above (40 digits, rounded)
THETA_TILDE_02 = 0.11270166537925831
H_THETA_TILDE_02 = 0.50801159695204834
WYNER_CI_02 = 0.70590490098326567
I_ZW_CASE5 = 0.49198840304795166
GAP_02_01 = 0.088978958029938465
H_02 = 0.72192809488736235
MI_DSBS_02 = 0.27807190511263765
