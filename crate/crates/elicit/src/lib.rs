//! Elicitation sessions as an event-sourced service, with an HTTP API and a
//! command-line interface on top of `elicit-core`.

pub mod cli;
pub mod error;
pub mod http;
pub mod service;
pub mod session;
pub mod store;

pub use error::{ServiceError, ServiceResult};
pub use service::SessionService;
pub use session::{SessionConfig, SessionRecord};

// The guide's code blocks run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/predictive.md")]
    mod predictive {}
    #[doc = include_str!("../../../book/src/supra_bayes.md")]
    mod supra_bayes {}
    #[doc = include_str!("../../../book/src/active.md")]
    mod active {}
    #[doc = include_str!("../../../book/src/pooling.md")]
    mod pooling {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/sessions.md")]
    mod sessions {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
}
