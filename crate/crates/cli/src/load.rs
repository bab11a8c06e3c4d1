use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use mmnet::action::Storage;
use mmnet::media::ObjectStore;
use mmnet::net::{Net, ValidationError};
use mmnet::rdf::MetadataGraph;
use mmnet::runtime::{RuntimeError, Supply};
use mmnet::text::parse_net;

#[derive(Debug, Error)]
pub enum CliError {
    /// Parse or validation failure.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: &Path, e: impl ToString) -> CliError {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn output(e: std::io::Error) -> CliError {
        CliError::Io { path: "<stdout>".into(), message: e.to_string() }
    }

    pub fn validation(errors: Vec<ValidationError>) -> CliError {
        let lines: Vec<String> = errors.iter().map(ValidationError::to_string).collect();
        CliError::Invalid(format!("net does not validate:\n  {}", lines.join("\n  ")))
    }
}

pub struct Loaded {
    pub net: Net,
    pub storage: Storage,
    pub supply: Supply,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_net(path: &Path) -> Result<Net, CliError> {
    parse_net(&read(path)?).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// Files named in a net's `init` block are relative to the net file.
fn relative(net_path: &Path, file: &str) -> PathBuf {
    net_path.parent().map_or_else(|| PathBuf::from(file), |d| d.join(file))
}

/// Supply file: one `var = [v1, v2]` per line; `#` comments.
pub fn parse_supply(text: &str) -> Result<Supply, String> {
    let body: String = text
        .lines()
        .map(|l| if l.trim().is_empty() || l.trim_start().starts_with('#') { "\n".to_string() } else { format!("supply {l}\n") })
        .collect();
    let net = parse_net(&format!("net supply init {{ {body} }}")).map_err(|e| e.to_string())?;
    Ok(Supply::new(net.init.supply))
}

pub fn load(net_path: &Path, triples: Option<&Path>, objects: Option<&Path>, supply: Option<&Path>) -> Result<Loaded, CliError> {
    let net = read_net(net_path)?;
    let triples = triples.map(Path::to_path_buf).or_else(|| net.init.triples_file.as_deref().map(|f| relative(net_path, f)));
    let objects = objects.map(Path::to_path_buf).or_else(|| net.init.objects_file.as_deref().map(|f| relative(net_path, f)));

    let metadata = match triples {
        Some(p) => MetadataGraph::parse(&read(&p)?).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?,
        None => MetadataGraph::new(),
    };
    let store = match objects {
        Some(p) => ObjectStore::from_json(&read(&p)?).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?,
        None => ObjectStore::new(),
    };
    let mut lists = net.init.supply.clone();
    if let Some(p) = supply {
        let extra = parse_supply(&read(p)?).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?;
        lists.extend(extra.lists);
    }
    Ok(Loaded { net, storage: Storage::new(metadata, store), supply: Supply::new(lists) })
}
