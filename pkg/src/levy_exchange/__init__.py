"""Exchange option pricing under VG and VG++ Levy models."""

from ._backend import BACKEND
from .calibration import (CalibrationResult, MarketSnapshot, calibrate, calibrate_dependence,
                          calibrate_marginals, synthetic_snapshot)
from .errors import (ConstraintError, DomainError, LevyExchangeError, NumericalError,
                     NumericalStabilityWarning, SeriesOverflowError)
from .gammapp import GammaPPParams, GammaPPSampler
from .mc_engine import SimPlan, price_exchange_mc, simulate_increments
from .models import (BBModel, CommonSubordinatorModel, LSModel, MarginalVGppParams, ModelSpec,
                     SemeraroModel, bb_solve_convolution, cf_joint, drift_corrector,
                     linear_correlation, model_from_dict)
from .pricing_closed import (ExchangeContract, PriceReport, margrabe, price_exchange_closed,
                             price_margrabe_bs, price_vg_exchange_closed,
                             price_vg_exchange_quadrature, price_vgpp_exchange_closed)
from .pricing_fourier import (FourierGrid, price_exchange_fourier, price_vanilla_call,
                              price_vanilla_put, vanilla_call_fft)

__version__ = "0.1.0"
