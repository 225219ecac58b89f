from levy_ou.types import Family

# Monte Carlo settings of the four reference tables, theta0 = (mu, sigma2, lambda).
SCENARIOS = {
    "table1": {
        "family": Family.GAMMA,
        "mu": 2.0,
        "sigma2": 0.25,
        "lambda_": 0.5,
        "n_obs": 1000,
        "delta": 0.1,
        "n_paths": 100,
    },
    "table2": {
        "family": Family.GAMMA,
        "mu": 2.0,
        "sigma2": 0.25,
        "lambda_": 5.0,
        "n_obs": 1000,
        "delta": 0.1,
        "n_paths": 100,
    },
    "table3": {
        "family": Family.INVERSE_GAUSSIAN,
        "mu": 2.0,
        "sigma2": 0.25,
        "lambda_": 0.5,
        "n_obs": 1000,
        "delta": 0.1,
        "n_paths": 100,
    },
    "table4": {
        "family": Family.INVERSE_GAUSSIAN,
        "mu": 2.0,
        "sigma2": 0.25,
        "lambda_": 5.0,
        "n_obs": 1000,
        "delta": 0.1,
        "n_paths": 100,
    },
}

# Daily log-volatility-index-like parameters; a synthetic stand-in for market data.
VOLATILITY_INDEX = {
    "family": Family.GAMMA,
    "mu": 2.78,
    "sigma2": 0.0192,
    "lambda_": 0.177,
    "delta": 1.0,
}

# Reported results of the reference tables: (mean, sample std. error) per estimator.
REFERENCE_RESULTS = {
    "table1": {
        "mu": (1.995458, 0.070),
        "sigma2": (0.2350207, 0.054),
        "lambda1": (0.566116, 0.113),
        "lambda2": (0.5879571, 0.144),
    },
    "table2": {
        "mu": (2.003799, 0.021),
        "sigma2": (None, 0.016),
        "lambda1": (5.12962, 0.446),
        "lambda2": (None, 0.590),
    },
    "table3": {
        "mu": (1.986862, None),
        "lambda2": (0.6050457, None),
    },
    "table4": {
        "mu": (1.955288, None),
        "lambda1": (5.05211, None),
    },
}
