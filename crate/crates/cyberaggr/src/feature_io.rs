//! Feature matrix CSV with a JSON schema sidecar.

use std::collections::BTreeMap;
use std::path::Path;

use cyberaggr_core::embedding::Coverage;
use cyberaggr_core::features::{Block, BlockSet, FeatureVector, OovStats, REGISTRY_VERSION};
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSchema {
    pub block: Block,
    pub width: usize,
    pub first_column: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub registry_version: String,
    pub users: usize,
    pub blocks: Vec<BlockSchema>,
    pub width: usize,
    /// Local UTC offset used for hour and weekday features.
    pub utc_offset_secs: i64,
    /// Content-block vocabulary coverage summed over users.
    pub content_oov: Option<OovStats>,
    pub embedding_coverage: Option<Coverage>,
    pub embedding_provenance: Option<String>,
}

impl FeatureSchema {
    pub fn new(blocks: &BlockSet, users: usize, utc_offset_secs: i64) -> Self {
        FeatureSchema {
            registry_version: REGISTRY_VERSION.into(),
            users,
            blocks: blocks
                .iter()
                .map(|b| BlockSchema { block: b, width: b.width(), first_column: b.column_names().remove(0) })
                .collect(),
            width: blocks.width(),
            utc_offset_secs,
            content_oov: None,
            embedding_coverage: None,
            embedding_provenance: None,
        }
    }

    pub fn block_set(&self) -> BlockSet {
        BlockSet::new(self.blocks.iter().map(|b| b.block))
    }
}

pub fn schema_path(features: &Path) -> std::path::PathBuf {
    features.with_extension("schema.json")
}

/// All vectors must carry exactly `blocks`.
pub fn format_features(blocks: &BlockSet, vectors: &[FeatureVector]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["user_id".to_string()];
    header.extend(blocks.column_names());
    w.write_record(&header)?;
    for v in vectors {
        let mut row = vec![v.user_id.clone()];
        row.extend(v.select(blocks)?.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::Data(e.to_string()))?).expect("csv is utf-8"))
}

pub fn parse_features(text: &str, origin: &str) -> Result<(BlockSet, Vec<FeatureVector>)> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let blocks = BlockSet::new(Block::ALL.into_iter().filter(|b| header.contains(&b.column_names()[0])));
    let mut expected = vec!["user_id".to_string()];
    expected.extend(blocks.column_names());
    if header != expected {
        return Err(CliError::Data(format!("{origin}: feature header does not match the block registry")));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let values: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Data(format!("{origin}:{line}: {e}")))?;
        let mut fv = FeatureVector::new(rec.get(0).unwrap_or(""));
        let mut at = 0;
        for b in blocks.iter() {
            fv.insert(b, values[at..at + b.width()].to_vec())?;
            at += b.width();
        }
        out.push(fv);
    }
    Ok((blocks, out))
}

pub fn read_features(path: &Path) -> Result<(BlockSet, Vec<FeatureVector>)> {
    parse_features(&read_to_string(path)?, &path.display().to_string())
}

/// Feature rows keyed by user id.
pub fn index(vectors: Vec<FeatureVector>) -> BTreeMap<String, FeatureVector> {
    vectors.into_iter().map(|v| (v.user_id.clone(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let blocks = BlockSet::new([Block::Basic, Block::Emotion]);
        let mut fv = FeatureVector::new("u,1");
        fv.insert(Block::Basic, (0..41).map(|i| (i as f64).sqrt() / 3.0).collect()).unwrap();
        fv.insert(Block::Emotion, vec![0.1, 0.2, 0.0, 1e-300, 0.7]).unwrap();
        let text = format_features(&blocks, &[fv.clone()]).unwrap();
        assert!(text.starts_with("user_id,basic_00,"));
        let (b, back) = parse_features(&text, "f").unwrap();
        assert_eq!(b, blocks);
        assert_eq!(back, vec![fv]);
    }
}
