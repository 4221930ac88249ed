//! Item-count datasets and the sorted view consumed by every mechanism.
//!
//! A dataset is a histogram: one nonnegative integer count per item. Counts
//! are kept as exact integers throughout; no floating point enters this path.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Input encodings for count files.
///
/// `CsvPairs` is `item_id,count` per line with an optional header; `PlainCounts`
/// is one count per line with item ids assigned as `"0"`, `"1"`, ... In both
/// formats `#`-prefixed lines are comments and blank lines are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    CsvPairs,
    PlainCounts,
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(InputFormat::CsvPairs),
            "plain" => Ok(InputFormat::PlainCounts),
            other => Err(Error::domain(format!(
                "unknown input format {other:?} (expected \"csv\" or \"plain\")"
            ))),
        }
    }
}

/// A raw dataset: unique item ids with nonnegative counts, in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemCounts {
    items: Vec<(String, u64)>,
}

impl ItemCounts {
    pub fn from_pairs(items: Vec<(String, u64)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::domain("dataset must contain at least one item"));
        }
        let mut seen = HashSet::with_capacity(items.len());
        for (id, _) in &items {
            if !seen.insert(id.as_str()) {
                return Err(Error::domain(format!("duplicate item id {id:?}")));
            }
        }
        Ok(ItemCounts { items })
    }

    /// Builds a dataset from bare counts, assigning ids `"0"`, `"1"`, ...
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        Self::from_pairs(
            counts
                .into_iter()
                .enumerate()
                .map(|(i, c)| (i.to_string(), c))
                .collect(),
        )
    }

    pub fn d(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[(String, u64)] {
        &self.items
    }

    /// Adds one user's contribution: each indicated count increases by one.
    pub fn add_user(&self, user: &UserContribution) -> Result<ItemCounts> {
        if user.0.len() != self.items.len() {
            return Err(Error::domain(format!(
                "contribution length {} does not match item count {}",
                user.0.len(),
                self.items.len()
            )));
        }
        let items = self
            .items
            .iter()
            .zip(&user.0)
            .map(|((id, c), &hit)| {
                let c = c
                    .checked_add(u64::from(hit))
                    .ok_or_else(|| Error::Overflow("count increment exceeds u64".into()))?;
                Ok((id.clone(), c))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ItemCounts { items })
    }
}

/// One user's 0/1 indicator over the item domain. A user may contribute to
/// arbitrarily many items, at most once each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserContribution(pub Vec<bool>);

impl UserContribution {
    pub fn from_indices(d: usize, indices: &[usize]) -> Self {
        let mut flags = vec![false; d];
        for &i in indices {
            flags[i] = true;
        }
        UserContribution(flags)
    }
}

/// Counts in nonincreasing order together with the permutation back to the
/// original item ids: `ids()[rank]` is the item holding sorted position `rank`.
///
/// Ties are broken by ascending item id, so the view is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedCounts {
    counts: Vec<u64>,
    ids: Vec<String>,
}

pub fn sort_counts(ic: &ItemCounts) -> SortedCounts {
    let mut order: Vec<usize> = (0..ic.items.len()).collect();
    order.sort_by(|&a, &b| {
        let (ida, ca) = &ic.items[a];
        let (idb, cb) = &ic.items[b];
        cb.cmp(ca).then_with(|| ida.cmp(idb))
    });
    SortedCounts {
        counts: order.iter().map(|&i| ic.items[i].1).collect(),
        ids: order.iter().map(|&i| ic.items[i].0.clone()).collect(),
    }
}

impl SortedCounts {
    /// Sorted view of bare counts with auto-assigned ids; test and CLI shorthand.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        Ok(sort_counts(&ItemCounts::from_counts(counts)?))
    }

    pub fn d(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id_at(&self, rank: usize) -> &str {
        &self.ids[rank]
    }

    /// Rank of the item with the given id, if present.
    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }
}

/// Parses a count dataset from a byte stream.
pub fn load_counts<R: BufRead>(reader: R, format: InputFormat) -> Result<ItemCounts> {
    let mut items = Vec::new();
    let mut first_record = true;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match format {
            InputFormat::CsvPairs => {
                let mut fields = line.split(',');
                let (id, count_str) = match (fields.next(), fields.next(), fields.next()) {
                    (Some(id), Some(c), None) => (id.trim(), c.trim()),
                    _ => {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("expected `item_id,count`, got {line:?}"),
                        })
                    }
                };
                match parse_count(count_str, lineno)? {
                    Some(count) => items.push((id.to_string(), count)),
                    // Non-numeric count field on the first record: header row.
                    None if first_record => {}
                    None => {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("invalid count {count_str:?}"),
                        })
                    }
                }
            }
            InputFormat::PlainCounts => match parse_count(line, lineno)? {
                Some(count) => items.push((items.len().to_string(), count)),
                None => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("invalid count {line:?}"),
                    })
                }
            },
        }
        first_record = false;
    }
    ItemCounts::from_pairs(items)
}

pub fn load_counts_path(path: impl AsRef<Path>, format: InputFormat) -> Result<ItemCounts> {
    load_counts(BufReader::new(File::open(path)?), format)
}

/// `Ok(Some(n))` for a valid count, `Ok(None)` when the field is not an
/// integer at all (candidate header), `Err` for a negative count.
fn parse_count(s: &str, lineno: usize) -> Result<Option<u64>> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(Some(n));
    }
    if s.parse::<i64>().is_ok() {
        return Err(Error::domain(format!("line {lineno}: negative count {s:?}")));
    }
    Ok(None)
}
