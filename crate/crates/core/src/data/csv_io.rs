//! Canonical long-format CSV (one row per trial and channel) and the GaitRec adapter.
//!
//! Canonical header: `subject_id,trial_id,sex,body_mass_kg,channel,v_0,...,v_{T-1}`.
//! Header names are matched case-insensitively after trimming.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{ChannelId, DataError, Dataset, GaitTrial, Result, Sex};

/// Input schema for [`parse_trials`].
#[derive(Clone, Debug, PartialEq)]
pub enum Schema {
    Canonical,
    GaitRec(GaitRecMapping),
}

/// Column mapping for GaitRec-style exports, loaded from a `key=value` text file.
///
/// ```text
/// subject = SUBJECT_ID
/// trial = SESSION_ID,TRIAL_ID
/// sex = SEX
/// sex.female = 0
/// sex.male = 1
/// body_mass = BODY_MASS
/// channel = SOURCE
/// channel.L_V = GRF_F_V_PRO_left
/// ...
/// values.prefix = F_
/// ```
///
/// `trial` may list several columns; their values are joined with `_`. Value columns are
/// the headers of the form `<values.prefix><integer>`, ordered by the integer.
#[derive(Clone, Debug, PartialEq)]
pub struct GaitRecMapping {
    pub subject: String,
    pub trial: Vec<String>,
    pub sex: String,
    pub sex_female: String,
    pub sex_male: String,
    pub body_mass: String,
    pub channel: String,
    pub channel_values: BTreeMap<String, ChannelId>,
    pub values_prefix: String,
}

impl GaitRecMapping {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| DataError::Schema(format!("mapping line {}: expected key=value", lineno + 1)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let take = |key: &str| -> Result<String> {
            kv.get(key)
                .cloned()
                .ok_or_else(|| DataError::Schema(format!("mapping is missing key `{key}`")))
        };
        let mut channel_values = BTreeMap::new();
        for ch in ChannelId::ALL {
            let value = take(&format!("channel.{}", ch.code()))?;
            if channel_values.insert(value.clone(), ch).is_some() {
                return Err(DataError::Schema(format!("mapping value `{value}` used for two channels")));
            }
        }
        Ok(GaitRecMapping {
            subject: take("subject")?,
            trial: take("trial")?.split(',').map(|s| s.trim().to_string()).collect(),
            sex: take("sex")?,
            sex_female: take("sex.female")?,
            sex_male: take("sex.male")?,
            body_mass: take("body_mass")?,
            channel: take("channel")?,
            channel_values,
            values_prefix: take("values.prefix")?,
        })
    }
}

struct Row {
    subject: String,
    trial: String,
    sex: Sex,
    mass: f64,
    channel: ChannelId,
    values: Vec<f64>,
}

struct Layout {
    subject: usize,
    trial: Vec<usize>,
    sex: usize,
    mass: usize,
    channel: usize,
    values: Vec<usize>,
}

fn normalize_header(h: &str) -> String {
    h.trim().to_ascii_lowercase()
}

fn canonical_layout(header: &[String]) -> Result<Layout> {
    const FIXED: [&str; 5] = ["subject_id", "trial_id", "sex", "body_mass_kg", "channel"];
    if header.len() < FIXED.len() {
        return Err(DataError::Schema("header is missing fixed columns".into()));
    }
    for (i, name) in FIXED.iter().enumerate() {
        if header[i] != *name {
            return Err(DataError::Schema(format!("column {i}: expected `{name}`, found `{}`", header[i])));
        }
    }
    let values: Vec<usize> = (FIXED.len()..header.len()).collect();
    for (t, &col) in values.iter().enumerate() {
        if header[col] != format!("v_{t}") {
            return Err(DataError::Schema(format!("column {col}: expected `v_{t}`, found `{}`", header[col])));
        }
    }
    if values.len() < 2 {
        return Err(DataError::Schema("need at least two value columns".into()));
    }
    Ok(Layout { subject: 0, trial: vec![1], sex: 2, mass: 3, channel: 4, values })
}

fn gaitrec_layout(header: &[String], map: &GaitRecMapping) -> Result<Layout> {
    let find = |name: &str| -> Result<usize> {
        let want = normalize_header(name);
        header
            .iter()
            .position(|h| *h == want)
            .ok_or_else(|| DataError::Schema(format!("missing column `{name}`")))
    };
    let prefix = normalize_header(&map.values_prefix);
    let mut values: Vec<(u64, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix(&prefix).and_then(|n| n.parse::<u64>().ok()).map(|n| (n, i)))
        .collect();
    values.sort_unstable();
    if values.len() < 2 {
        return Err(DataError::Schema(format!("fewer than two `{}<n>` value columns", map.values_prefix)));
    }
    if values.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
        return Err(DataError::Schema("value column indices are not contiguous".into()));
    }
    Ok(Layout {
        subject: find(&map.subject)?,
        trial: map.trial.iter().map(|t| find(t)).collect::<Result<_>>()?,
        sex: find(&map.sex)?,
        mass: find(&map.body_mass)?,
        channel: find(&map.channel)?,
        values: values.into_iter().map(|(_, i)| i).collect(),
    })
}

fn parse_real(field: &str, context: impl Fn() -> String) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| DataError::Schema(format!("{}: `{field}` is not a number", context())))?;
    if !v.is_finite() {
        return Err(DataError::NonFiniteValue(context()));
    }
    Ok(v)
}

/// Parses a dataset from CSV bytes. Trials come out ordered by `(subject_id, trial_id)`.
pub fn parse_trials<R: Read>(source: R, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(r) => r?.iter().map(normalize_header).collect(),
        None => return Err(DataError::Empty),
    };
    let layout = match schema {
        Schema::Canonical => canonical_layout(&header)?,
        Schema::GaitRec(map) => gaitrec_layout(&header, map)?,
    };
    let t_len = layout.values.len();

    let mut rows = Vec::new();
    for record in records {
        let record = record?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let subject = field(layout.subject).to_string();
        let trial = layout.trial.iter().map(|&i| field(i)).collect::<Vec<_>>().join("_");
        let channel_raw = field(layout.channel);
        let channel = match schema {
            Schema::Canonical => ChannelId::parse(channel_raw),
            Schema::GaitRec(map) => map.channel_values.get(channel_raw).copied(),
        }
        .ok_or_else(|| DataError::Schema(format!("{subject}/{trial}: unknown channel `{channel_raw}`")))?;
        if record.len() != header.len() {
            return Err(DataError::LengthMismatch {
                subject,
                trial,
                channel: channel.code().into(),
                expected: t_len,
                found: (record.len() + t_len).saturating_sub(header.len()),
            });
        }
        let sex_raw = field(layout.sex);
        let sex = match schema {
            Schema::Canonical => match sex_raw {
                "F" | "f" => Some(Sex::Female),
                "M" | "m" => Some(Sex::Male),
                _ => None,
            },
            Schema::GaitRec(map) if sex_raw == map.sex_female => Some(Sex::Female),
            Schema::GaitRec(map) if sex_raw == map.sex_male => Some(Sex::Male),
            Schema::GaitRec(_) => None,
        }
        .ok_or_else(|| DataError::Schema(format!("{subject}/{trial}: unknown sex `{sex_raw}`")))?;
        let ctx = || format!("{subject}/{trial} {channel}");
        let mass = parse_real(field(layout.mass), || format!("{subject}/{trial} body mass"))?;
        let values = layout
            .values
            .iter()
            .map(|&i| parse_real(field(i), ctx))
            .collect::<Result<Vec<_>>>()?;
        rows.push(Row { subject, trial, sex, mass, channel, values });
    }
    assemble(rows)
}

fn assemble(rows: Vec<Row>) -> Result<Dataset> {
    type Key = (String, String);
    struct Pending {
        sex: Sex,
        mass: f64,
        curves: [Option<Vec<f64>>; 6],
    }
    let mut grouped: BTreeMap<Key, Pending> = BTreeMap::new();
    for row in rows {
        let key = (row.subject.clone(), row.trial.clone());
        let entry = grouped.entry(key).or_insert_with(|| Pending {
            sex: row.sex,
            mass: row.mass,
            curves: Default::default(),
        });
        if entry.sex != row.sex {
            return Err(DataError::LabelConflict(row.subject));
        }
        if entry.mass != row.mass {
            return Err(DataError::Schema(format!("{}/{}: inconsistent body mass", row.subject, row.trial)));
        }
        let slot = &mut entry.curves[row.channel.index()];
        if slot.is_some() {
            return Err(DataError::Schema(format!(
                "{}/{}: channel {} appears twice",
                row.subject, row.trial, row.channel
            )));
        }
        *slot = Some(row.values);
    }
    let mut trials = Vec::with_capacity(grouped.len());
    for ((subject, trial), p) in grouped {
        let mut curves: [Vec<f64>; 6] = Default::default();
        for ch in ChannelId::ALL {
            curves[ch.index()] = p.curves[ch.index()]
                .clone()
                .ok_or_else(|| DataError::Schema(format!("{subject}/{trial}: channel {ch} missing")))?;
        }
        trials.push(GaitTrial::new(subject, trial, p.sex, p.mass, curves)?);
    }
    Dataset::new(trials)
}

/// Writes the canonical CSV. Reals use the shortest representation that parses back
/// to the same `f64`.
pub fn write_trials<W: Write>(dataset: &Dataset, sink: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(sink);
    write!(w, "subject_id,trial_id,sex,body_mass_kg,channel")?;
    for t in 0..dataset.series_len() {
        write!(w, ",v_{t}")?;
    }
    writeln!(w)?;
    for trial in dataset.trials() {
        for ch in ChannelId::ALL {
            write!(
                w,
                "{},{},{},{},{}",
                trial.subject_id,
                trial.trial_id,
                trial.sex.code(),
                trial.body_mass_kg,
                ch.code()
            )?;
            for v in trial.curve(ch) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}
