pub mod decompose;
pub mod evolve;
pub mod lipschitz;
pub mod report;
pub mod scan;
pub mod verify;
