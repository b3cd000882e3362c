//! Input formats: spaces (JSON or CSV distance matrices), maps, towers and
//! group actions. Every loader records the files it read so reports can
//! carry their digests.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use unicov::action::{close_group, GroupAction};
use unicov::linalg::IntMatrix;
use unicov::quotient::FilteredMap;
use unicov::tower::{AbGroup, SpaceTower, Stabilization, TowerAb};
use unicov::{FilteredSpace, PointId};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{position}: {message}")]
    Parse {
        path: String,
        position: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        #[source]
        source: unicov::Error,
    },
}

pub type InputResult<T> = std::result::Result<T, InputError>;

fn parse_error(path: &Path, position: impl Into<String>, message: impl Into<String>) -> InputError {
    InputError::Parse {
        path: path.display().to_string(),
        position: position.into(),
        message: message.into(),
    }
}

fn invalid(path: &Path) -> impl FnOnce(unicov::Error) -> InputError + '_ {
    move |source| InputError::Invalid {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Reads files and remembers what was read, in order, without repeats.
#[derive(Debug, Default)]
pub struct Loader {
    pub digests: Vec<InputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Loader {
    pub fn read(&mut self, path: &Path) -> InputResult<String> {
        let bytes = fs::read(path).map_err(|source| InputError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let shown = path.display().to_string();
        if !self.digests.iter().any(|d| d.path == shown) {
            self.digests.push(InputDigest {
                path: shown,
                sha256: sha256_hex(&bytes),
            });
        }
        String::from_utf8(bytes)
            .map_err(|e| parse_error(path, format!("byte {}", e.utf8_error().valid_up_to()), "not UTF-8"))
    }

    fn json<T: for<'de> Deserialize<'de>>(&mut self, path: &Path) -> InputResult<T> {
        let text = self.read(path)?;
        serde_json::from_str(&text)
            .map_err(|e| parse_error(path, format!("{}:{}", e.line(), e.column()), e.to_string()))
    }
}

/// A space file: explicit scales or a distance matrix with radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceFile {
    Explicit(ExplicitSpace),
    Metric(MetricSpace),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSpace {
    pub points: Vec<String>,
    /// Coarsest first; each scale lists its off-diagonal pairs once.
    pub scales: Vec<Vec<(String, String)>>,
    pub hausdorff: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpace {
    /// A CSV path relative to this file, or the matrix itself.
    pub distances: Distances,
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Distances {
    Path(String),
    Inline(Vec<Vec<f64>>),
}

/// A reference to a space inside another file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Path(String),
    Inline(SpaceFile),
}

/// Point names and a distance matrix; names come from a header row when
/// the first row is not numeric, else they are `0..n`.
pub fn parse_distance_csv(path: &Path, text: &str) -> InputResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let pos = e.position().map_or("?".to_owned(), |p| format!("line {}", p.line()));
            parse_error(path, pos, e.to_string())
        })?;
        rows.push(record);
    }
    let mut names = None;
    if let Some(first) = rows.first() {
        // A header row holds names only; a stray non-number in a data row
        // must be reported, not taken for a name.
        if first.iter().all(|c| c.parse::<f64>().is_err()) {
            names = Some(first.iter().map(str::to_owned).collect::<Vec<_>>());
            rows.remove(0);
        }
    }
    let offset = if names.is_some() { 2 } else { 1 };
    let n = rows.len();
    let mut matrix = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(parse_error(
                path,
                format!("line {}", i + offset),
                format!("expected {n} entries, found {}", row.len()),
            ));
        }
        let values = row
            .iter()
            .enumerate()
            .map(|(j, c)| {
                c.parse::<f64>().map_err(|_| {
                    parse_error(
                        path,
                        format!("line {}, column {}", i + offset, j + 1),
                        format!("`{c}` is not a number"),
                    )
                })
            })
            .collect::<InputResult<Vec<f64>>>()?;
        matrix.push(values);
    }
    let names = names.unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
    if names.len() != n {
        return Err(parse_error(
            path,
            "line 1",
            format!("{} names for {n} rows", names.len()),
        ));
    }
    Ok((names, matrix))
}

fn rename(space: FilteredSpace, names: Vec<String>, path: &Path) -> InputResult<FilteredSpace> {
    let scales = space.scales().to_vec();
    FilteredSpace::from_entourages(names, scales, space.hausdorff()).map_err(invalid(path))
}

fn metric_space(path: &Path, names: Vec<String>, matrix: &[Vec<f64>], radii: &[f64]) -> InputResult<FilteredSpace> {
    let space = FilteredSpace::from_metric(matrix, radii).map_err(invalid(path))?;
    rename(space, names, path)
}

fn explicit_space(path: &Path, spec: &ExplicitSpace) -> InputResult<FilteredSpace> {
    let index: HashMap<&str, PointId> = spec.points.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let mut scales = Vec::with_capacity(spec.scales.len());
    for (k, scale) in spec.scales.iter().enumerate() {
        let mut pairs = Vec::with_capacity(scale.len());
        for (m, (a, b)) in scale.iter().enumerate() {
            let lookup = |p: &String| {
                index
                    .get(p.as_str())
                    .copied()
                    .ok_or_else(|| parse_error(path, format!("scales[{k}][{m}]"), format!("unknown point `{p}`")))
            };
            pairs.push((lookup(a)?, lookup(b)?));
        }
        scales.push(pairs);
    }
    FilteredSpace::from_edges(spec.points.clone(), scales, spec.hausdorff).map_err(invalid(path))
}

fn relative(base: &Path, file: &str) -> PathBuf {
    base.parent().unwrap_or(Path::new("")).join(file)
}

impl Loader {
    /// Loads a space from a JSON file, or a CSV distance matrix with `radii`.
    pub fn space(&mut self, path: &Path, radii: Option<&[f64]>) -> InputResult<FilteredSpace> {
        self.space_and_radii(path, radii).map(|(space, _)| space)
    }

    /// The space and, for metric inputs, the radii its scales came from.
    pub fn space_and_radii(
        &mut self,
        path: &Path,
        radii: Option<&[f64]>,
    ) -> InputResult<(FilteredSpace, Option<Vec<f64>>)> {
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            let radii = radii.ok_or_else(|| parse_error(path, "-", "a distance matrix needs --radii"))?;
            let text = self.read(path)?;
            let (names, matrix) = parse_distance_csv(path, &text)?;
            return Ok((metric_space(path, names, &matrix, radii)?, Some(radii.to_vec())));
        }
        let file: SpaceFile = self.json(path)?;
        let radii = match &file {
            SpaceFile::Metric(m) => Some(m.radii.clone()),
            SpaceFile::Explicit(_) => None,
        };
        Ok((self.space_file(path, &file)?, radii))
    }

    fn space_file(&mut self, path: &Path, file: &SpaceFile) -> InputResult<FilteredSpace> {
        match file {
            SpaceFile::Explicit(spec) => explicit_space(path, spec),
            SpaceFile::Metric(MetricSpace { distances, radii }) => match distances {
                Distances::Inline(matrix) => {
                    metric_space(path, (0..matrix.len()).map(|i| i.to_string()).collect(), matrix, radii)
                }
                Distances::Path(p) => {
                    let csv_path = relative(path, p);
                    let text = self.read(&csv_path)?;
                    let (names, matrix) = parse_distance_csv(&csv_path, &text)?;
                    metric_space(&csv_path, names, &matrix, radii)
                }
            },
        }
    }

    fn space_ref(&mut self, base: &Path, r: &SpaceRef) -> InputResult<FilteredSpace> {
        match r {
            SpaceRef::Path(p) => self.space(&relative(base, p), None),
            SpaceRef::Inline(file) => self.space_file(base, file),
        }
    }
}

fn assignment(
    path: &Path,
    field: &str,
    source: &FilteredSpace,
    target: &FilteredSpace,
    names: &[String],
) -> InputResult<Vec<PointId>> {
    if names.len() != source.len() {
        return Err(parse_error(
            path,
            field,
            format!("{} images for {} points", names.len(), source.len()),
        ));
    }
    names
        .iter()
        .enumerate()
        .map(|(i, y)| {
            target
                .point(y)
                .map_err(|_| parse_error(path, format!("{field}[{i}]"), format!("unknown target point `{y}`")))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub source: SpaceRef,
    pub target: SpaceRef,
    /// Target point names, one per source point in order.
    pub assignment: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTowerFile {
    pub spaces: Vec<SpaceRef>,
    /// `bonds[i]` sends the points of level `i + 2` to names in level `i + 1`.
    pub bonds: Vec<Vec<String>>,
    #[serde(default)]
    pub stabilization: Stabilization,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupTowerFile {
    /// Coordinate moduli per level, `0` for a free coordinate.
    pub groups: Vec<Vec<i64>>,
    /// Matrix rows of each bonding map.
    pub bonds: Vec<Vec<Vec<i64>>>,
    #[serde(default)]
    pub stabilization: Stabilization,
    /// Optional `(g_i)` for the telescoping solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<Vec<i64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TowerFile {
    Groups(GroupTowerFile),
    Spaces(SpaceTowerFile),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionFile {
    pub space: SpaceRef,
    /// Permutations as arrays of point indices.
    pub generators: Vec<Vec<PointId>>,
}

pub enum LoadedTower {
    Groups {
        tower: TowerAb,
        sequence: Option<Vec<Vec<BigInt>>>,
    },
    Spaces(SpaceTower),
}

fn bigints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

impl Loader {
    pub fn map(&mut self, path: &Path) -> InputResult<FilteredMap> {
        let file: MapFile = self.json(path)?;
        let source = self.space_ref(path, &file.source)?;
        let target = self.space_ref(path, &file.target)?;
        let a = assignment(path, "assignment", &source, &target, &file.assignment)?;
        FilteredMap::new(source, target, a).map_err(invalid(path))
    }

    pub fn tower(&mut self, path: &Path) -> InputResult<LoadedTower> {
        let file: TowerFile = self.json(path)?;
        match file {
            TowerFile::Groups(g) => {
                let groups = g
                    .groups
                    .iter()
                    .map(|m| AbGroup { moduli: bigints(m) })
                    .collect::<Vec<_>>();
                let mut bonds = Vec::with_capacity(g.bonds.len());
                for (i, rows) in g.bonds.iter().enumerate() {
                    let cols = rows.first().map_or(0, Vec::len);
                    if rows.iter().any(|r| r.len() != cols) {
                        return Err(parse_error(path, format!("bonds[{i}]"), "ragged matrix"));
                    }
                    let mut m = IntMatrix::from_i64_rows(rows.len(), cols, rows);
                    // An empty row list still needs the right column count.
                    if rows.is_empty() {
                        m = IntMatrix::zeros(0, g.groups.get(i + 1).map_or(0, Vec::len));
                    }
                    bonds.push(m);
                }
                let tower = TowerAb::new(groups, bonds, g.stabilization).map_err(invalid(path))?;
                let sequence = g.sequence.as_ref().map(|s| s.iter().map(|v| bigints(v)).collect());
                Ok(LoadedTower::Groups { tower, sequence })
            }
            TowerFile::Spaces(s) => {
                let spaces = s
                    .spaces
                    .iter()
                    .map(|r| self.space_ref(path, r))
                    .collect::<InputResult<Vec<_>>>()?;
                if s.bonds.len() + 1 != spaces.len() {
                    return Err(parse_error(
                        path,
                        "bonds",
                        "need one bond per consecutive pair of spaces",
                    ));
                }
                let bonds = s
                    .bonds
                    .iter()
                    .enumerate()
                    .map(|(i, names)| assignment(path, &format!("bonds[{i}]"), &spaces[i + 1], &spaces[i], names))
                    .collect::<InputResult<Vec<_>>>()?;
                let mut tower = SpaceTower::new(spaces, bonds).map_err(invalid(path))?;
                tower.stabilization = s.stabilization;
                Ok(LoadedTower::Spaces(tower))
            }
        }
    }

    pub fn action(&mut self, path: &Path, group_bound: usize) -> InputResult<GroupAction> {
        let file: ActionFile = self.json(path)?;
        let space = self.space_ref(path, &file.space)?;
        close_group(&space, file.generators, group_bound).map_err(invalid(path))
    }
}

/// The explicit form of a space, pairs sorted by index.
pub fn explicit_form(space: &FilteredSpace) -> ExplicitSpace {
    let name = |p: PointId| space.name(p).to_owned();
    ExplicitSpace {
        points: space.names().to_vec(),
        scales: space
            .scales()
            .iter()
            .map(|e| e.pairs().map(|(a, b)| (name(a), name(b))).collect())
            .collect(),
        hausdorff: space.hausdorff(),
    }
}

/// Canonical JSON text: keys sorted, two-space indentation, final newline.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("serializable");
    let mut out = serde_json::to_string_pretty(&value).expect("serializable");
    out.push('\n');
    out
}

pub fn canonical_space(space: &FilteredSpace) -> String {
    canonical_json(&explicit_form(space))
}
