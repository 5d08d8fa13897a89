//! Single-layer LSTM with a scalar readout, trained by backpropagation
//! through time.

mod cell;
mod grad;
mod params;
mod scaling;
mod train;

pub use cell::{cell_forward, forward_sequence, LstmState};
pub use grad::{bptt_gradients, WindowGradients};
pub use params::{init_parameters, GateParams, LstmParameters, Network, Readout};
pub use scaling::{MinMaxScaler, Window, WindowSet};
pub use train::{
    forecast, forecast_from, train, train_on_values, LstmModel, OptimizerKind, TrainConfig,
    TrainOutcome, MODEL_FORMAT_VERSION,
};
