pub mod commands;
pub mod config;
pub mod io;
pub mod pipeline;
pub mod svg;
