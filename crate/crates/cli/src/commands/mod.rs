pub mod evolve;
pub mod fit;
pub mod heat;
pub mod plot;
pub mod scan;
