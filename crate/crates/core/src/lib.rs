//! Genuine multiparticle negativity of few-qubit states under local noise.
//!
//! The crate evaluates the PPT-mixture monotone `E(ρ)` with the dense
//! interior-point solver in `densesdp`, evolves states under amplitude
//! damping, phase damping and depolarizing noise, and turns time sweeps into
//! logarithmic decay rates `η = d ln E / ds`.

pub mod analysis;
pub mod channels;
pub mod error;
pub mod gmn;
pub mod linalg;
pub mod states;

pub use analysis::{
    default_grid, ensemble_study, log_derivative, robustness_report, summarize, summarize_included,
    sweep, sweep_many, uniform_grid, EnsembleSummary, Generator, RobustnessReport, SweepInput,
    SweepSeries,
};
pub use channels::{
    apply_local_channel, evolved_single_qubit_oracle, single_qubit_kraus, ChannelKind, KrausSet,
};
pub use error::{Error, Result};
pub use gmn::{
    bipartitions, build_program, genuine_negativity, verify_certificate, Bipartition, Certificate,
    Formulation, GmnOptions, GmnResult, Strategy, WitnessProgram,
};
pub use linalg::{
    eig_hermitian, partial_transpose, real_embedding, tensor_product, ComplexMatrix, PureState,
};
pub use states::{
    derive_seed, haar_random_state, named_state, random_weighted_graph, weighted_graph_state,
    NamedState, StateData, WeightedGraph,
};
