"""Model builders shared by the test modules."""

from levy_exchange.models import BBModel, CommonSubordinatorModel, LSModel, SemeraroModel

# Exchange-option setup used for the cross-method VG/VG++ comparisons
RATE = 0.01
THETA = (-0.2012, -0.1712)
SIGMA = (0.2, 0.3)
RHO = 0.8

# Calibrated parameter sets of the power-forward application
MARKET_RATE = 0.015
LS_A, LS_B, LS_a = 1.43, 1224.83, 0.01
LS_ALPHA = (1.43, 1.64)
# idiosyncratic shape solving corr = 0.93 at rho = 0.99 (see notes)
LS_A_J = (0.09225868655055752, 0.09225868655055752)


def vg_model(alpha=2.0, beta=2.0, rate=RATE, theta=THETA, sigma=SIGMA, rho=RHO):
    return CommonSubordinatorModel.vg(rate, list(theta), list(sigma), alpha, beta, rho)


def vgpp_model(a, alpha=2.0, beta=None, rate=RATE, theta=THETA, sigma=SIGMA, rho=RHO):
    beta = alpha * (1.0 - a) if beta is None else beta
    return CommonSubordinatorModel.vgpp(rate, list(theta), list(sigma), a, alpha, beta, rho)


def bs_market():
    return CommonSubordinatorModel.bs(MARKET_RATE, [0.0, 0.0], [0.84, 0.91], 0.96)


def vg_market():
    return CommonSubordinatorModel.vg(MARKET_RATE, [-0.27, -0.24], [0.98, 0.92], 2.04, 2.04, 0.96)


def vgpp_market():
    return CommonSubordinatorModel.vgpp(MARKET_RATE, [-0.28, -0.26], [0.98, 0.92], 0.04, 2.43,
                                        2.43 * 0.96, 0.96)


def semeraro_market(theta=(-0.47, -0.35)):
    return SemeraroModel(MARKET_RATE, list(theta), [1.06, 0.96], list(LS_ALPHA), list(LS_A_J),
                         LS_A, LS_B, LS_a)


def ls_market(rho=0.99):
    return LSModel(MARKET_RATE, [-0.47, -0.35], [1.06, 0.96], list(LS_ALPHA), list(LS_A_J),
                   LS_A, LS_B, LS_a, rho=rho)


def bb_market():
    return BBModel.consistent(MARKET_RATE, 0.001, [0.141, 0.0001], [12.20, 0.006], [4.80, 4.74],
                              -3.15, 1.34, 1.4438, 62.77)
