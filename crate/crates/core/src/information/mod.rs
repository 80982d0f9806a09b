//! Entropies, mutual informations and their conditional and disintegrated
//! forms over the joint law of protocol variables.

mod catalog;
mod plugin;
mod protocol;
mod table;

pub use catalog::{
    iomi_total, quantities_exact, quantity, quantity_disintegrated, seed_disintegrated_iomi,
    vec_cmi, vec_f_cmi, vector_cost, InfoEstimate, Quantity, QuantitySpec, VectorCmi, VectorMethod,
    ALL_QUANTITIES,
};
pub use plugin::{plugin_estimate, PluginCells, MIN_PLUGIN_SAMPLES};
pub use protocol::{build_protocol_table, build_protocol_tables, LossCodes, Var};
pub use table::{CellKey, Disintegrated, JointTable, MAX_AXES, NEGATIVE_TOLERANCE};
