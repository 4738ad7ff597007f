//! Tab-separated user embedding files.
//!
//! ```text
//! #dim=512<TAB>model=<tag>
//! <user_id><TAB>v1<TAB>...<TAB>v512
//! ```

use std::path::Path;

use cyberaggr_core::embedding::EmbeddingTable;

use crate::error::{read_to_string, CliError, Result};

pub fn parse_embeddings(text: &str, origin: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or_else(|| CliError::Data(format!("{origin}: empty embedding file")))?;
    let mut dim = None;
    let mut model = None;
    for field in header.split('\t') {
        if let Some(d) = field.strip_prefix("#dim=") {
            dim = d.parse::<usize>().ok().filter(|&d| d > 0);
        } else if let Some(m) = field.strip_prefix("model=") {
            model = Some(m.to_string());
        }
    }
    let (Some(dim), Some(model)) = (dim, model) else {
        return Err(CliError::Data(format!("{origin}:1: header must be \"#dim=<n>\\tmodel=<tag>\"")));
    };
    let mut table = EmbeddingTable::new(dim, model);
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or("");
        if id.is_empty() {
            return Err(CliError::Data(format!("{origin}:{n}: empty user_id")));
        }
        let values: Vec<f64> = fields
            .map(|v| v.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| CliError::Data(format!("{origin}:{n}: non-numeric value")))?;
        table.insert(id, values).map_err(|e| CliError::Data(format!("{origin}:{n}: {e}")))?;
    }
    Ok(table)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    parse_embeddings(&read_to_string(path)?, &path.display().to_string())
}

/// Values are written in shortest round-trip form.
pub fn format_embeddings(table: &EmbeddingTable) -> String {
    let mut out = format!("#dim={}\tmodel={}\n", table.dimension(), table.provenance());
    for (id, v) in table.iter() {
        out.push_str(id);
        for x in v {
            out.push('\t');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}
