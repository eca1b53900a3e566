pub mod lang;
pub mod stream;
pub mod spatial;
pub mod matcher;
pub mod explain;
pub mod pipeline;
pub mod metrics;
