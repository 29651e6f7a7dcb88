pub mod dump;
pub mod eval;
pub mod gradcheck;
pub mod ingest;
pub mod predict;
pub mod train;
