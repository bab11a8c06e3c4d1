//! Multimedia nets: colored Petri nets whose transitions update an RDF
//! metadata store and an addressed object store through parameterized actions.

pub mod media;
pub mod rdf;
pub mod types;
pub mod query;
pub mod action;
pub mod expr;
pub mod net;
pub mod runtime;
pub mod text;
pub mod patterns;
