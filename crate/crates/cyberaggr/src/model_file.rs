//! Model container: `AGGRMDL1`, a little-endian u64 metadata length, JSON
//! metadata, then every parameter array as little-endian f64.

use std::path::Path;

use cyberaggr_core::features::BlockSet;
use cyberaggr_core::models::{FittedClassifier, Model, ModelSpec};
use cyberaggr_core::Target;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"AGGRMDL1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub kind: String,
    pub tool_version: String,
    pub target: Target,
    pub blocks: BlockSet,
    pub input_width: usize,
    pub spec: ModelSpec,
    pub training_rows: usize,
    /// Embedding table tag for heads trained on transformer features.
    pub provenance: Option<String>,
    /// The classifier with its parameter arrays moved to the payload.
    pub classifier: FittedClassifier,
    pub segments: Vec<Segment>,
}

/// Visits every parameter array in a fixed order.
fn for_each_array(c: &mut FittedClassifier, f: &mut dyn FnMut(String, &mut Vec<f64>) -> Result<()>) -> Result<()> {
    f("standardizer.mean".into(), &mut c.standardizer.mean)?;
    f("standardizer.sd".into(), &mut c.standardizer.sd)?;
    match &mut c.model {
        Model::Lr(m) => f("lr.weights".into(), &mut m.weights)?,
        Model::Svm(m) => {
            let dim = m.dim;
            for (k, mach) in m.machines.iter_mut().enumerate() {
                let mut flat = mach.support.concat();
                f(format!("svm.{k}.support"), &mut flat)?;
                mach.support = flat.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
                f(format!("svm.{k}.alpha"), &mut mach.alpha)?;
                f(format!("svm.{k}.coef"), &mut mach.coef)?;
            }
        }
        Model::Nn(m) => f("nn.params".into(), &mut m.net.params)?,
        Model::AugHead(m) => f("aug_head.params".into(), &mut m.nn.net.params)?,
    }
    Ok(())
}

pub struct SaveInfo<'a> {
    pub target: Target,
    pub blocks: &'a BlockSet,
    pub spec: &'a ModelSpec,
    pub training_rows: usize,
}

pub fn encode(classifier: &FittedClassifier, info: SaveInfo<'_>) -> Result<Vec<u8>> {
    let mut c = classifier.clone();
    let mut payload: Vec<f64> = Vec::new();
    let mut segments = Vec::new();
    for_each_array(&mut c, &mut |name, v| {
        segments.push(Segment { name, len: v.len() });
        payload.append(v);
        Ok(())
    })?;
    let provenance = match &classifier.model {
        Model::AugHead(m) => Some(m.provenance.clone()),
        _ => None,
    };
    let meta = ModelMeta {
        kind: classifier.model.tag().into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        target: info.target,
        blocks: info.blocks.clone(),
        input_width: classifier.input_width(),
        spec: info.spec.clone(),
        training_rows: info.training_rows,
        provenance,
        classifier: c,
        segments,
    };
    let json = serde_json::to_vec(&meta)?;
    let mut out = Vec::with_capacity(16 + json.len() + payload.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for x in payload {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(ModelMeta, FittedClassifier)> {
    let bad = |m: &str| CliError::Data(format!("model file: {m}"));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("missing AGGRMDL1 header"));
    }
    let meta_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let meta_end = 16usize.checked_add(meta_len).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated metadata"))?;
    let meta: ModelMeta = serde_json::from_slice(&bytes[16..meta_end])?;
    let body = &bytes[meta_end..];
    let expected: usize = meta.segments.iter().map(|s| s.len).sum();
    if body.len() != expected * 8 {
        return Err(bad(&format!("payload holds {} bytes, segments need {}", body.len(), expected * 8)));
    }
    let mut values = body.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")));
    let mut segments = meta.segments.iter();
    let mut c = meta.classifier.clone();
    for_each_array(&mut c, &mut |name, v| {
        let seg = segments.next().ok_or_else(|| bad("fewer segments than parameter arrays"))?;
        if seg.name != name {
            return Err(bad(&format!("segment {} found where {name} was expected", seg.name)));
        }
        *v = values.by_ref().take(seg.len).collect();
        Ok(())
    })?;
    if segments.next().is_some() {
        return Err(bad("unexpected trailing segments"));
    }
    Ok((meta, c))
}

pub fn load(path: &Path) -> Result<(ModelMeta, FittedClassifier)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cyberaggr_core::features::Block;
    use cyberaggr_core::models::{fit, LrConfig, SvmConfig, TrainerConfig};
    use cyberaggr_core::Level;

    fn data() -> (Vec<Vec<f64>>, Vec<Level>) {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 3) as f64 + 0.01 * i as f64, (i % 5) as f64]).collect();
        let y = (0..30).map(|i| Level::from_index(i % 3).unwrap()).collect();
        (x, y)
    }

    #[test]
    fn every_kind_round_trips_bit_exactly() {
        let (x, y) = data();
        let blocks = BlockSet::new([Block::Basic]);
        let specs = [
            ModelSpec::Lr(LrConfig::default()),
            ModelSpec::Svm(SvmConfig::default()),
            ModelSpec::Nn(TrainerConfig { epochs: 2, ..Default::default() }),
        ];
        for spec in specs {
            let m = fit(&spec, &x, &y).unwrap();
            let info = SaveInfo { target: Target::MaliciousHumour, blocks: &blocks, spec: &spec, training_rows: 30 };
            let bytes = encode(&m, info).unwrap();
            assert_eq!(&bytes[..8], MAGIC);
            let (meta, back) = decode(&bytes).unwrap();
            assert_eq!(back, m);
            assert_eq!(meta.kind, spec.tag());
            assert_eq!(back.predict_proba(&x).unwrap(), m.predict_proba(&x).unwrap());
        }
    }

    #[test]
    fn truncation_is_detected() {
        let (x, y) = data();
        let spec = ModelSpec::Lr(LrConfig::default());
        let m = fit(&spec, &x, &y).unwrap();
        let blocks = BlockSet::new([Block::Basic]);
        let bytes = encode(&m, SaveInfo { target: Target::GuiltInduction, blocks: &blocks, spec: &spec, training_rows: 30 }).unwrap();
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        assert!(decode(b"NOTAMODEL_______").is_err());
    }
}
