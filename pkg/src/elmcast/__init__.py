"""Short-term multi-source energy forecasting with a MIMO extreme learning machine."""
from .baselines import persistence_forecast
from .elm import (
    ElmConfig,
    ElmModel,
    hidden_map,
    init_hidden_layer,
    load_model,
    parameter_count,
    predict,
    save_model,
    solve_output_weights,
    train,
    train_siso_suite,
)
from .features import (
    ScalerParams,
    WindowedDataset,
    build_supervised_windows,
    chronological_split,
    encode_cyclic_time,
    fit_scaler,
    fit_series_scaler,
    scale,
)
from .harness import (
    HindcastReport,
    RunConfig,
    compute_mi_matrix,
    emit_plot_data,
    emit_tables,
    load_table,
    run_hindcast,
)
from .ingest import (
    CHANNELS,
    RawSeriesTable,
    fill_gaps,
    parse_energy_csv,
    regularize_hourly,
    validate_table,
)
from .metrics import error_metrics, gain, normalized_mutual_information

__version__ = "0.1.0"
