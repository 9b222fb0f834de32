from .features import FeatureRow, SeasonalAverages, calendar_fields, engineer_features, seasonal_averages
from .linear import LinearModel, fit_linear
from .recurrent import (
    Adam,
    RecurrentParams,
    forward,
    gru_cell,
    init_params,
    loss_and_gradients,
    lstm_cell,
    zero_params,
)
from .training import (
    MODEL_KINDS,
    ForecastModel,
    LossHistory,
    SalesSeries,
    TrainConfig,
    models_from_json,
    models_to_json,
    predict,
    split_series,
    train,
    train_all,
    validation_forecast,
)
