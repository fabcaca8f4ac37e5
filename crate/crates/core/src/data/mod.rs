//! Conversation sources: a seeded synthetic generator, hand-shaped fixtures,
//! and JSON Lines persistence.

mod fixtures;
mod io;
mod synthetic;

pub use fixtures::{make_alpha_split_set, make_separable_set, shaped_scores};
pub use io::{load_run_file, read_records, save_records, write_records};
pub use synthetic::{generate_synthetic, split_records, GenParams, LATENT_NOISE_STD};
