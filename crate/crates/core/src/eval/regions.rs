use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::data::ChannelId;
use crate::spm::SpmResult;

use super::{EvalError, Result};

/// Where a region came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    Lrp,
    Spm,
    Literature,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Lrp => "lrp",
            Provenance::Spm => "spm",
            Provenance::Literature => "literature",
        })
    }
}

impl FromStr for Provenance {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lrp" => Ok(Provenance::Lrp),
            "spm" => Ok(Provenance::Spm),
            "literature" => Ok(Provenance::Literature),
            other => Err(EvalError::InvalidRegion(format!("unknown provenance `{other}`"))),
        }
    }
}

/// Inclusive node interval `start..=end` on one GRF channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub name: String,
    pub channel: ChannelId,
    pub start: usize,
    pub end: usize,
    pub provenance: Provenance,
}

/// Uniquely named regions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RegionSet {
    regions: Vec<Region>,
}

impl RegionSet {
    pub fn new(regions: Vec<Region>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for r in &regions {
            if r.start > r.end {
                return Err(EvalError::InvalidRegion(format!("`{}` starts after it ends", r.name)));
            }
            if !names.insert(r.name.as_str()) {
                return Err(EvalError::InvalidRegion(format!("duplicate region name `{}`", r.name)));
            }
        }
        Ok(RegionSet { regions })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Fails if any region reaches past node `q − 1`.
    pub fn check_len(&self, q: usize) -> Result<()> {
        match self.regions.iter().find(|r| r.end >= q) {
            Some(r) => Err(EvalError::InvalidRegion(format!("`{}` ends at {} but curves have {q} nodes", r.name, r.end))),
            None => Ok(()),
        }
    }

    /// Covered nodes per channel.
    pub fn node_sets(&self) -> BTreeMap<ChannelId, BTreeSet<usize>> {
        let mut out: BTreeMap<ChannelId, BTreeSet<usize>> = BTreeMap::new();
        for r in &self.regions {
            out.entry(r.channel).or_default().extend(r.start..=r.end);
        }
        out
    }

    pub fn intersects(&self, channel: ChannelId, start: usize, end: usize) -> bool {
        self.regions.iter().any(|r| r.channel == channel && r.start <= end && r.end >= start)
    }
}

fn runs(nodes: &BTreeSet<usize>) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &i in nodes {
        match out.last_mut() {
            Some(last) if last.1 + 1 == i => last.1 = i,
            _ => out.push((i, i)),
        }
    }
    out
}

fn region_set(provenance: Provenance, by_channel: BTreeMap<ChannelId, BTreeSet<usize>>) -> RegionSet {
    let regions = by_channel
        .into_iter()
        .flat_map(|(channel, nodes)| {
            runs(&nodes).into_iter().map(move |(start, end)| Region {
                name: format!("{provenance}:{channel}:{start}-{end}"),
                channel,
                start,
                end,
                provenance,
            })
        })
        .collect();
    RegionSet { regions }
}

/// Nodes in greedy order: descending value, lower (channel, node) first on ties, until
/// the running sum reaches `mass_fraction` of the total.
pub(crate) fn greedy_nodes(curves: &[(ChannelId, Vec<f64>)], mass_fraction: f64) -> Result<Vec<(usize, usize)>> {
    if !(mass_fraction > 0.0 && mass_fraction <= 1.0) {
        return Err(EvalError::InvalidParameter(format!("mass fraction must lie in (0, 1], got {mass_fraction}")));
    }
    let mut nodes: Vec<(usize, usize, f64)> = Vec::new();
    for (c, (_, curve)) in curves.iter().enumerate() {
        for (i, &v) in curve.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(EvalError::InvalidParameter(format!("relevance curves must be finite and nonnegative, got {v}")));
            }
            nodes.push((c, i, v));
        }
    }
    let total: f64 = nodes.iter().map(|n| n.2).sum();
    if total == 0.0 {
        return Err(EvalError::ZeroCurve);
    }
    nodes.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let target = mass_fraction * total;
    let mut acc = 0.0;
    let mut picked = Vec::new();
    for (c, i, v) in nodes {
        if acc >= target {
            break;
        }
        acc += v;
        picked.push((c, i));
    }
    Ok(picked)
}

/// Smallest greedy node set holding at least `mass_fraction` of the total relevance,
/// merged into maximal intervals per channel.
pub fn relevance_regions(curves: &[(ChannelId, Vec<f64>)], mass_fraction: f64) -> Result<RegionSet> {
    let mut by_channel: BTreeMap<ChannelId, BTreeSet<usize>> = BTreeMap::new();
    for (c, i) in greedy_nodes(curves, mass_fraction)? {
        by_channel.entry(curves[c].0).or_default().insert(i);
    }
    Ok(region_set(Provenance::Lrp, by_channel))
}

/// Supra-threshold clusters as regions.
pub fn spm_regions(results: &[(ChannelId, SpmResult)]) -> RegionSet {
    let mut by_channel: BTreeMap<ChannelId, BTreeSet<usize>> = BTreeMap::new();
    for (ch, r) in results {
        let nodes = r.significant_nodes();
        if !nodes.is_empty() {
            by_channel.entry(*ch).or_default().extend(nodes);
        }
    }
    region_set(Provenance::Spm, by_channel)
}

/// Jaccard indices of two region sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Overlap {
    /// Channels covered by at least one of the sets.
    pub per_channel: Vec<(ChannelId, f64)>,
    /// `Σ |A ∩ B| / Σ |A ∪ B|` over those channels; 1 when both sets are empty.
    pub overall: f64,
}

pub fn overlap_score(a: &RegionSet, b: &RegionSet) -> Overlap {
    let (na, nb) = (a.node_sets(), b.node_sets());
    let channels: BTreeSet<ChannelId> = na.keys().chain(nb.keys()).copied().collect();
    let empty = BTreeSet::new();
    let mut inter_total = 0usize;
    let mut union_total = 0usize;
    let per_channel = channels
        .into_iter()
        .map(|ch| {
            let (sa, sb) = (na.get(&ch).unwrap_or(&empty), nb.get(&ch).unwrap_or(&empty));
            let inter = sa.intersection(sb).count();
            let union = sa.union(sb).count();
            inter_total += inter;
            union_total += union;
            (ch, inter as f64 / union as f64)
        })
        .collect();
    let overall = if union_total == 0 { 1.0 } else { inter_total as f64 / union_total as f64 };
    Overlap { per_channel, overall }
}

/// Reads `name,channel,start,end,provenance` rows. A header row, blank lines and lines
/// starting with `#` are skipped.
pub fn read_regions<R: BufRead>(input: R) -> Result<RegionSet> {
    let mut regions = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') || text.starts_with("name,") {
            continue;
        }
        let err = |message: String| EvalError::RegionParse { line: line_no, message };
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        let [name, channel, start, end, provenance] = fields[..] else {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        };
        let parse_idx = |s: &str| s.parse::<usize>().map_err(|_| err(format!("`{s}` is not a node index")));
        regions.push(Region {
            name: name.to_string(),
            channel: ChannelId::parse(channel).ok_or_else(|| err(format!("unknown channel `{channel}`")))?,
            start: parse_idx(start)?,
            end: parse_idx(end)?,
            provenance: provenance.parse().map_err(|e: EvalError| err(e.to_string()))?,
        });
    }
    RegionSet::new(regions)
}

pub fn write_regions<W: Write>(set: &RegionSet, mut out: W) -> Result<()> {
    writeln!(out, "name,channel,start,end,provenance")?;
    for r in &set.regions {
        writeln!(out, "{},{},{},{},{}", r.name, r.channel, r.start, r.end, r.provenance)?;
    }
    Ok(())
}
