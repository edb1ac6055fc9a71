"""Robustness evaluation, surrogate learning and slack-injection search for
periodic public transport timetables on event-activity networks."""

__version__ = "0.1.0"

from .ean import (  # noqa: F401
    AperiodicEan, Dataset, EanParams, Line, NetworkEdge, PassengerGroup,
    PeriodicEan, PeriodicTimetable, Station, VehicleSchedule,
    validate_periodic, validate_schedule,
)
from .instance import Instance, UtilityWeights  # noqa: F401
from .simulation import DelayScenario, propagate, simulate  # noqa: F401
from .robustness import (  # noqa: F401
    DelayDistribution, RobustnessConfig, normalize, run_suite,
)
from .features import FeatureCaps, FeatureLayout, Scaler, extract, fit_scaler  # noqa: F401
from .surrogate import (  # noqa: F401
    MlpModel, TrainConfig, evaluate, feature_importance, load_model,
    predict, save_model, train,
)
from .search import SearchConfig, inject_slack, local_search, retime  # noqa: F401
from .generate import (  # noqa: F401
    GridSpec, RingSpec, VariantSpec, build_instance, gen_corpus, gen_grid,
    gen_ring, gen_schedule, gen_timetable,
)
