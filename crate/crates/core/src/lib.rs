//! Diffusion fingerprints: a corpus-derived domain graph, personalized
//! PageRank diffusion of documents and pathway queries over it, and
//! centrality-based feature reduction for classification.

pub mod cli;
pub mod corpus;
pub mod diffusion;
pub mod features;
pub mod graph;
pub mod io;
pub mod pathway;
pub mod rng;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Diffusion(#[from] diffusion::DiffusionError),
    #[error(transparent)]
    Pathway(#[from] pathway::PathwayError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Whether the error comes from a parameter outside its valid range
    /// rather than from the input data.
    pub fn is_config(&self) -> bool {
        use corpus::CorpusError;
        use diffusion::DiffusionError;
        use features::FeatureError;
        use graph::GraphError;
        matches!(
            self,
            Error::Config(_)
                | Error::Corpus(CorpusError::InvalidParams(..))
                | Error::Graph(GraphError::InvalidDensity(_) | GraphError::UnsortedGrid)
                | Error::Diffusion(DiffusionError::InvalidConfig(_))
                | Error::Pathway(pathway::PathwayError::Diffusion(DiffusionError::InvalidConfig(_)))
                | Error::Feature(FeatureError::BadDimension { .. } | FeatureError::BadFolds(_))
        )
    }
}
