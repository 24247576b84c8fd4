//! On-disk model checkpoints.
//!
//! Layout of a checkpoint directory:
//!
//! ```text
//! manifest.json        config echo, seed, parameter names and shapes
//! mask.tsv             adjacency mask (gene variants only)
//! params/<name>.bin    little-endian f64, row-major, one file per parameter
//! checksums.txt        "<sha256>  <relative path>" for every file above
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::layers::Parameter;
use super::network::{Network, NetworkConfig};
use crate::error::{Error, Result};
use crate::genegraph::AdjacencyMask;
use crate::numcore::Matrix;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    pub config: NetworkConfig,
    pub mask_file: Option<String>,
    pub parameters: Vec<ParamEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes `network` into `dir` (created if missing).
pub fn save_checkpoint(network: &Network, seed: u64, dir: &Path) -> Result<()> {
    let params_dir = dir.join("params");
    fs::create_dir_all(&params_dir).map_err(|e| Error::io(&params_dir, e))?;
    let mut sums: Vec<(String, String)> = Vec::new();

    let mask_file = match network.mask() {
        Some(mask) => {
            let text = mask.to_text();
            write(&dir.join("mask.tsv"), text.as_bytes())?;
            sums.push(("mask.tsv".into(), sha256_hex(text.as_bytes())));
            Some("mask.tsv".to_string())
        }
        None => None,
    };

    let mut entries = Vec::new();
    for p in network.params() {
        let file = format!("params/{}.bin", p.name);
        let bytes: Vec<u8> = p.value.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect();
        write(&dir.join(&file), &bytes)?;
        sums.push((file.clone(), sha256_hex(&bytes)));
        entries.push(ParamEntry { name: p.name.clone(), rows: p.value.rows(), cols: p.value.cols(), file });
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        seed,
        config: network.config().clone(),
        mask_file,
        parameters: entries,
    };
    let manifest_text = serde_json::to_string_pretty(&manifest)?;
    write(&dir.join("manifest.json"), manifest_text.as_bytes())?;
    sums.push(("manifest.json".into(), sha256_hex(manifest_text.as_bytes())));

    let mut checksum_text = String::new();
    for (file, sum) in &sums {
        checksum_text.push_str(&format!("{sum}  {file}\n"));
    }
    write(&dir.join("checksums.txt"), checksum_text.as_bytes())
}

/// Reads a checkpoint, verifying every checksum. Returns the network and the
/// seed recorded at save time.
pub fn load_checkpoint(dir: &Path) -> Result<(Network, u64)> {
    let checksum_text = String::from_utf8(read(&dir.join("checksums.txt"))?)
        .map_err(|e| Error::data("checksums.txt", e.to_string()))?;
    let verified = |file: &str| -> Result<Vec<u8>> {
        let bytes = read(&dir.join(file))?;
        let expected = checksum_text
            .lines()
            .find_map(|l| l.split_once("  ").filter(|(_, f)| *f == file).map(|(s, _)| s))
            .ok_or_else(|| Error::data("checksums.txt", format!("no checksum for {file}")))?;
        if sha256_hex(&bytes) != expected {
            return Err(Error::data(file, "checksum mismatch"));
        }
        Ok(bytes)
    };

    let manifest: Manifest = serde_json::from_slice(&verified("manifest.json")?)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::data("manifest.json", format!("unsupported format version {}", manifest.format_version)));
    }
    let mask = match &manifest.mask_file {
        Some(f) => {
            let text = String::from_utf8(verified(f)?).map_err(|e| Error::data(f.as_str(), e.to_string()))?;
            Some(AdjacencyMask::from_text(&text)?)
        }
        None => None,
    };
    let mut params = Vec::with_capacity(manifest.parameters.len());
    for entry in &manifest.parameters {
        let bytes = verified(&entry.file)?;
        if bytes.len() != entry.rows * entry.cols * 8 {
            return Err(Error::data(
                entry.file.as_str(),
                format!("{} bytes for a {}x{} parameter", bytes.len(), entry.rows, entry.cols),
            ));
        }
        let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        params.push(Parameter { name: entry.name.clone(), value: Matrix::from_vec(entry.rows, entry.cols, values)? });
    }
    let net = Network::from_parameters(manifest.config, mask, params)?;
    Ok((net, manifest.seed))
}
