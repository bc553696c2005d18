pub mod data;
pub mod parse;
pub mod report;
pub mod train;
