//! End-to-end orchestration: dataset I/O, configuration, synthetic data,
//! the mapping stage and the evaluation drivers.

mod catalog;
mod config;
mod export;
mod mapping;
mod synth;

pub use catalog::{
    channel_path, ingest, read_catalog, write_dataset, CatalogEntry, EventRecord, EventType, IngestReport, CATALOG_FILE,
};
pub use config::{AnomalyConfig, ClassifyConfig, Method, RunConfig};
pub use export::{write_embedding_csv, write_sonogram_csv};
pub use mapping::{
    anomaly_study, classification_curves, event_features, location_embeddings, location_study, loo_accuracy,
    loo_curves, map_distances, map_features, prepare_features, run_mapping, FeatureSet, Mapping, ViewDistances,
};
pub use synth::{
    band_set_profile, carrier_profile, peaked_profile, synthesize, EventClass, LocationDrift, SyntheticSpec,
    CARRIER_BANDS,
};
