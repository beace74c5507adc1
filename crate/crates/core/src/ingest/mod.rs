//! Reading datasets and the interchange files that carry scores and relations.

mod codec;
mod document;
mod multirc;
mod records;
mod semeval;

use std::path::Path;
use std::str::FromStr;

use crate::error::Result;
use crate::model::{validate_dataset, Dataset, ValidationReport};

pub use codec::{parse_records, read_records, render_records, write_records, Record, RecordFile};
pub(crate) use codec::string;
pub(crate) use records::check_id;
pub use document::{parse_dataset, read_dataset, render_dataset, write_dataset};
pub use multirc::{parse_multirc, parse_multirc_bytes};
pub use records::{
    PredictionRecord, Relation, RelationProbs, RelationRecord, ScoreRecord, PROB_SUM_TOLERANCE,
};
pub use semeval::{parse_semeval, parse_semeval_str};

/// A dataset parsed from an upstream release, with what the parser noticed.
#[derive(Debug, Clone)]
pub struct ParsedDataset {
    pub dataset: Dataset,
    /// Integrity and format-shape violations; the dataset is returned as parsed.
    pub report: ValidationReport,
    /// Choices whose source had no truth flag.
    pub missing_gold: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    Canonical,
    Multirc,
    Semeval,
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "canonical" => Ok(DatasetFormat::Canonical),
            "multirc" => Ok(DatasetFormat::Multirc),
            "semeval" => Ok(DatasetFormat::Semeval),
            other => Err(format!("unknown dataset format '{other}'")),
        }
    }
}

/// Load a dataset in any supported format.
pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<ParsedDataset> {
    match format {
        DatasetFormat::Canonical => {
            let dataset = read_dataset(path)?;
            let report = validate_dataset(&dataset);
            Ok(ParsedDataset {
                missing_gold: 0,
                report,
                dataset,
            })
        }
        DatasetFormat::Multirc => parse_multirc(path),
        DatasetFormat::Semeval => parse_semeval(path),
    }
}
