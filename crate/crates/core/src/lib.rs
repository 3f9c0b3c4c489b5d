pub mod error;
pub mod linalg;
pub mod oracle;
pub mod mq;
pub mod sequences;
pub mod spectroscopy;
pub mod composition;
