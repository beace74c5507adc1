use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::Vector;
use crate::error::{Error, Result};

/// Word vectors loaded from a GloVe-style text file.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vector>,
    dim: usize,
    duplicates: usize,
}

impl EmbeddingTable {
    pub fn get(&self, token: &str) -> Option<&Vector> {
        self.vectors.get(token)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Lines skipped because their token was already present.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(BufReader::new(file), path)
}

/// One token per line followed by its components. The first line fixes the
/// dimension; the first occurrence of a token wins.
pub fn parse_embeddings(input: impl BufRead, path: &Path) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::default();
    for (index, line) in input.lines().enumerate() {
        let bad = |message: String| Error::Record {
            path: path.to_path_buf(),
            line: index + 1,
            message,
        };
        let line = line.map_err(|e| bad(format!("read failure: {e}")))?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else {
            continue;
        };
        let components = parts
            .map(|p| match p.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(bad(format!("'{p}' is not a finite number"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        if table.dim == 0 {
            if components.is_empty() {
                return Err(bad(format!("token '{token}' has no components")));
            }
            table.dim = components.len();
        } else if components.len() != table.dim {
            return Err(bad(format!(
                "token '{token}' has {} components, expected {}",
                components.len(),
                table.dim
            )));
        }
        if table.vectors.contains_key(token) {
            table.duplicates += 1;
        } else {
            table
                .vectors
                .insert(token.to_string(), Vector::from_vec(components));
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<EmbeddingTable> {
        parse_embeddings(Cursor::new(text), Path::new("glove.txt"))
    }

    #[test]
    fn two_tokens() {
        let table = parse("the 0.1 0.2 0.3\ncat -1 0 1e-2\n").unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.dim(), 3);
        assert_eq!(table.get("cat").unwrap()[2], 0.01);
    }

    #[test]
    fn first_duplicate_wins() {
        let table = parse("a 1 2\nb 3 4\na 5 6\n").unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.duplicates(), 1);
        assert_eq!(table.get("a").unwrap()[0], 1.0);
    }

    #[test]
    fn inconsistent_dimension_cites_line() {
        let err = parse("a 1 2 3\nb 1 2\n").unwrap_err();
        assert!(matches!(err, Error::Record { line: 2, .. }), "{err}");
    }

    #[test]
    fn garbage_component_rejected() {
        assert!(parse("a 1 x\n").is_err());
        assert!(parse("a 1 nan\n").is_err());
    }
}
