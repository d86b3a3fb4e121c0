//! Core library for syntactic framing robustness audits.
//!
//! A model is asked the same dilemma under four logically equivalent
//! framings; its answers are normalized for polarity and the spread of
//! action endorsement across framings (the Syntactic Variation Index, SVI)
//! measures how much surface syntax moves the decision.

pub mod fixtures;
pub mod ingest;
pub mod lpn;
pub mod providers;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod stats;

pub use ingest::{parse_response, ComplianceLedger, Decision, DecisionRecord, ParseOutcome};
pub use lpn::{classify_fragility, lpn, svi, ActionEndorsement, CellStats, Fragility, PerFrame};
pub use scenario::{render_prompt, render_proposal, Frame, Polarity, PromptInstance, Scenario};
